#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

namespace dyadnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class KernelFamily { Biweight2, Biweight4 };

double kernel_1d(KernelFamily family, double u);
double kernel_eval(KernelFamily family, const double* u, int d);
inline double kernel_eval(KernelFamily family, const std::vector<double>& u) {
  return kernel_eval(family, u.data(), static_cast<int>(u.size()));
}

struct SmoothingPlan {
  std::vector<int> continuous;  // columns of Z smoothed by the kernel
  std::vector<int> discrete;    // columns of Z matched exactly
  double bandwidth = 1.0;
  double m_floor = 1e-3;
  KernelFamily family = KernelFamily::Biweight2;
};

// Every column of Z is continuous unless flagged in discrete_mask.
SmoothingPlan make_plan(const std::vector<bool>& discrete_mask);

// Conditioning data for the smoother: special regressor x plus the split of Z.
class DyadSample {
 public:
  DyadSample(const VectorXd& x, const MatrixXd& z, const SmoothingPlan& plan);

  Eigen::Index size() const { return static_cast<Eigen::Index>(x_.size()); }
  int p1() const { return p1_; }
  int p2() const { return p2_; }
  double x(Eigen::Index r) const { return x_[r]; }
  const double* zc(Eigen::Index r) const { return zc_.data() + r * p1_; }
  const double* zd(Eigen::Index r) const { return zd_.data() + r * p2_; }

 private:
  std::vector<double> x_, zc_, zd_;
  int p1_ = 0, p2_ = 0;
};

// Nadaraya-Watson smoother for one bandwidth. Points are bucketed by discrete
// cell and by a grid of width h over the continuous columns so that only
// neighbouring buckets are visited.
class NwSmoother {
 public:
  static constexpr int kMaxContinuous = 6;

  NwSmoother(const DyadSample& data, KernelFamily family, double h);

  double bandwidth() const { return h_; }

  // Raw NW ratio of the conditional density (no floor).
  double density(double x, const double* z1, const double* z2) const;
  // NW weighted mean of values (indexed like the sample).
  double mean(const VectorXd& values, double x, const double* z1, const double* z2) const;

  VectorXd density_at_data(double m_floor) const;
  VectorXd mean_at_data(const VectorXd& values) const;

 private:
  using Key = std::array<std::int64_t, kMaxContinuous>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  struct Bucket {
    std::vector<Eigen::Index> rows;  // sorted by x
    std::vector<double> x, zc;
  };
  struct Cell {
    std::unordered_map<Key, int, KeyHash> lookup;
    std::vector<Bucket> buckets;
  };
  struct Sums {
    double den = 0, num = 0, wsum = 0, wv = 0;
    long contributors = 0;
  };

  const Cell* find_cell(const double* z2) const;
  Key key_of(const double* z1) const;
  Sums accumulate(const Cell& cell, double x, const double* z1, const VectorXd* values) const;

  const DyadSample& data_;
  KernelFamily family_;
  double h_;
  std::map<std::vector<double>, Cell> cells_;
};

double nw_density(double x, const std::vector<double>& z1, const std::vector<double>& z2,
                  const DyadSample& data, const SmoothingPlan& plan);
double nw_mean(const VectorXd& values, double x, const std::vector<double>& z1,
               const std::vector<double>& z2, const DyadSample& data, const SmoothingPlan& plan);

// N^{-1} sum [I(x + delta > 0) - I(x > 0)] / fhat.
double delta_hat(const VectorXd& x, const VectorXd& fhat, double delta);

struct BandwidthGrid {
  int points = 40;
  double c_min = 0.05;
  double c_max = 3.0;
};

std::vector<double> bandwidth_grid(const VectorXd& x, const BandwidthGrid& spec);

struct BandwidthSelection {
  double bandwidth = 0;
  int index = -1;
  std::vector<double> grid;
  std::vector<double> loss;  // +inf where the candidate failed
};

BandwidthSelection select_bandwidth(const DyadSample& data, const SmoothingPlan& plan,
                                    std::vector<double> grid);

}  // namespace dyadnet
