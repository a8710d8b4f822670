#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>

namespace dyadnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Ordered pairs (i, j), i != j, of n nodes laid out in sender blocks.
// Node ids are 0-based here. Parameter layout: alpha_0..alpha_{n-1} followed
// by beta_0..beta_{n-2}; beta_{n-1} is pinned at zero and has no column.
class PairIndexing {
 public:
  explicit PairIndexing(int n);

  int nodes() const { return n_; }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(n_) * (n_ - 1); }
  int params() const { return 2 * n_ - 1; }

  Eigen::Index row_of(int i, int j) const;
  std::pair<int, int> pair_of(Eigen::Index row) const;

  // Unchecked variants for inner loops.
  Eigen::Index row_unchecked(int i, int j) const {
    return static_cast<Eigen::Index>(i) * (n_ - 1) + (j < i ? j : j - 1);
  }
  int receiver_unchecked(int i, int k) const { return k < i ? k : k + 1; }

  // Column of beta_j in theta, or -1 for the last node.
  int beta_column(int j) const { return j == n_ - 1 ? -1 : n_ + j; }

 private:
  int n_;
};

VectorXd apply_U(const PairIndexing& idx, const VectorXd& theta);
VectorXd apply_Ut(const PairIndexing& idx, const VectorXd& v);

// Closed-form entry of (U'U)^{-1}; i, j are 0-based in [0, 2n-1).
double vinv_entry(int i, int j, int n);
VectorXd apply_Vinv(int n, const VectorXd& w);
MatrixXd apply_Vinv(int n, const MatrixXd& w);

class GramSummary {
 public:
  GramSummary(const PairIndexing& idx, const MatrixXd& z);

  const PairIndexing& indexing() const { return idx_; }
  const MatrixXd& utz() const { return utz_; }
  const MatrixXd& ztz() const { return ztz_; }
  // V^{-1} U'Z, the coefficients of the projection of Z onto span(U).
  const MatrixXd& vinv_utz() const { return vinv_utz_; }
  Eigen::Index covariates() const { return ztz_.cols(); }

 private:
  PairIndexing idx_;
  MatrixXd utz_;
  MatrixXd ztz_;
  MatrixXd vinv_utz_;
};

MatrixXd ztdz(const MatrixXd& z, const GramSummary& g);
VectorXd ztd_vec(const MatrixXd& z, const VectorXd& v, const GramSummary& g);
// Z'D diag(w) D Z.
MatrixXd ztdwdz(const MatrixXd& z, const VectorXd& w, const GramSummary& g);
// Row r of DZ.
void dz_row(const MatrixXd& z, const GramSummary& g, Eigen::Index r, double* out);
double c4_diagnostic(const MatrixXd& z, const GramSummary& g);

}  // namespace dyadnet
