#include "dyadnet/kernel_smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dyadnet/design_algebra.hpp"
#include "dyadnet/error.hpp"

namespace dyadnet {

double kernel_1d(KernelFamily family, double u) {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  const double s = 1.0 - u * u;
  const double base = 0.9375 * s * s;
  if (family == KernelFamily::Biweight2) return base;
  return base * (1.75 - 5.25 * u * u);
}

double kernel_eval(KernelFamily family, const double* u, int d) {
  double k = 1.0;
  for (int l = 0; l < d && k != 0.0; ++l) k *= kernel_1d(family, u[l]);
  return k;
}

SmoothingPlan make_plan(const std::vector<bool>& discrete_mask) {
  SmoothingPlan plan;
  for (int c = 0; c < static_cast<int>(discrete_mask.size()); ++c)
    (discrete_mask[c] ? plan.discrete : plan.continuous).push_back(c);
  return plan;
}

DyadSample::DyadSample(const VectorXd& x, const MatrixXd& z, const SmoothingPlan& plan)
    : p1_(static_cast<int>(plan.continuous.size())), p2_(static_cast<int>(plan.discrete.size())) {
  if (z.rows() != x.size())
    throw Error(ErrorCode::DimensionMismatch, "x and Z row counts differ");
  std::vector<int> seen(z.cols(), 0);
  for (int c : plan.continuous) {
    if (c < 0 || c >= z.cols()) throw Error(ErrorCode::IndexOutOfRange, "continuous column");
    ++seen[c];
  }
  for (int c : plan.discrete) {
    if (c < 0 || c >= z.cols()) throw Error(ErrorCode::IndexOutOfRange, "discrete column");
    ++seen[c];
  }
  for (int s : seen)
    if (s != 1) throw Error(ErrorCode::InvalidArgument, "column lists must partition Z");
  const Eigen::Index n = x.size();
  x_.assign(x.data(), x.data() + n);
  zc_.resize(n * p1_);
  zd_.resize(n * p2_);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int l = 0; l < p1_; ++l) zc_[r * p1_ + l] = z(r, plan.continuous[l]);
    for (int l = 0; l < p2_; ++l) zd_[r * p2_ + l] = z(r, plan.discrete[l]);
  }
}

std::size_t NwSmoother::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::int64_t v : k) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

NwSmoother::Key NwSmoother::key_of(const double* z1) const {
  Key k{};
  for (int l = 0; l < data_.p1(); ++l) k[l] = static_cast<std::int64_t>(std::floor(z1[l] / h_));
  return k;
}

NwSmoother::NwSmoother(const DyadSample& data, KernelFamily family, double h)
    : data_(data), family_(family), h_(h) {
  if (!(h > 0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  if (data.p1() > kMaxContinuous)
    throw Error(ErrorCode::InvalidArgument, "too many continuous conditioning columns");
  const int p1 = data.p1(), p2 = data.p2();
  for (Eigen::Index r = 0; r < data.size(); ++r) {
    std::vector<double> dkey(data.zd(r), data.zd(r) + p2);
    Cell& cell = cells_[dkey];
    const Key k = key_of(data.zc(r));
    auto [it, inserted] = cell.lookup.try_emplace(k, static_cast<int>(cell.buckets.size()));
    if (inserted) cell.buckets.emplace_back();
    cell.buckets[it->second].rows.push_back(r);
  }
  for (auto& [dkey, cell] : cells_)
    for (Bucket& b : cell.buckets) {
      std::stable_sort(b.rows.begin(), b.rows.end(), [&](Eigen::Index a, Eigen::Index c) {
        return data.x(a) < data.x(c);
      });
      b.x.reserve(b.rows.size());
      b.zc.reserve(b.rows.size() * p1);
      for (Eigen::Index r : b.rows) {
        b.x.push_back(data.x(r));
        b.zc.insert(b.zc.end(), data.zc(r), data.zc(r) + p1);
      }
    }
}

const NwSmoother::Cell* NwSmoother::find_cell(const double* z2) const {
  std::vector<double> dkey(z2, z2 + data_.p2());
  auto it = cells_.find(dkey);
  return it == cells_.end() ? nullptr : &it->second;
}

NwSmoother::Sums NwSmoother::accumulate(const Cell& cell, double x, const double* z1,
                                        const VectorXd* values) const {
  const int p1 = data_.p1();
  const double inv_h = 1.0 / h_;
  Sums s;
  if (p1 == 0) {
    if (cell.buckets.empty()) return s;
    const Bucket& b = cell.buckets.front();
    s.den = static_cast<double>(b.x.size());
    s.contributors = static_cast<long>(b.x.size());
    auto lo = std::upper_bound(b.x.begin(), b.x.end(), x - h_);
    auto hi = std::lower_bound(b.x.begin(), b.x.end(), x + h_);
    for (auto it = lo; it < hi; ++it) {
      const std::size_t m = it - b.x.begin();
      const double w = kernel_1d(family_, (*it - x) * inv_h);
      s.num += w;
      if (values) {
        s.wsum += w;
        s.wv += w * (*values)[b.rows[m]];
      }
    }
    return s;
  }
  const Key base = key_of(z1);
  int total = 1;
  for (int l = 0; l < p1; ++l) total *= 3;
  Key k = base;
  for (int code = 0; code < total; ++code) {
    int c = code;
    for (int l = 0; l < p1; ++l) {
      k[l] = base[l] + (c % 3) - 1;
      c /= 3;
    }
    auto it = cell.lookup.find(k);
    if (it == cell.lookup.end()) continue;
    const Bucket& b = cell.buckets[it->second];
    const std::size_t cnt = b.x.size();
    for (std::size_t m = 0; m < cnt; ++m) {
      const double* zp = b.zc.data() + m * p1;
      double kz = 1.0;
      for (int l = 0; l < p1 && kz != 0.0; ++l) kz *= kernel_1d(family_, (zp[l] - z1[l]) * inv_h);
      if (kz == 0.0) continue;
      ++s.contributors;
      s.den += kz;
      const double ux = (b.x[m] - x) * inv_h;
      if (ux <= -1.0 || ux >= 1.0) continue;
      const double w = kz * kernel_1d(family_, ux);
      s.num += w;
      if (values) {
        s.wsum += w;
        s.wv += w * (*values)[b.rows[m]];
      }
    }
  }
  return s;
}

double NwSmoother::density(double x, const double* z1, const double* z2) const {
  const Cell* cell = find_cell(z2);
  if (!cell) throw Error(ErrorCode::EmptyCell, "no pair matches the discrete cell");
  const Sums s = accumulate(*cell, x, z1, nullptr);
  if (s.contributors == 0) throw Error(ErrorCode::EmptyCell, "no pair inside the kernel window");
  if (!(s.den > 0)) return 0.0;
  return s.num / (s.den * h_);
}

double NwSmoother::mean(const VectorXd& values, double x, const double* z1, const double* z2) const {
  if (values.size() != data_.size()) throw Error(ErrorCode::DimensionMismatch, "values length");
  const Cell* cell = find_cell(z2);
  if (!cell) throw Error(ErrorCode::EmptyCell, "no pair matches the discrete cell");
  const Sums s = accumulate(*cell, x, z1, &values);
  if (s.wsum == 0.0) throw Error(ErrorCode::EmptyCell, "no pair inside the kernel window");
  return s.wv / s.wsum;
}

VectorXd NwSmoother::density_at_data(double m_floor) const {
  const Eigen::Index n = data_.size();
  VectorXd out(n);
#pragma omp parallel for schedule(dynamic, 256)
  for (Eigen::Index r = 0; r < n; ++r)
    out[r] = std::max(density(data_.x(r), data_.zc(r), data_.zd(r)), m_floor);
  return out;
}

VectorXd NwSmoother::mean_at_data(const VectorXd& values) const {
  const Eigen::Index n = data_.size();
  VectorXd out(n);
#pragma omp parallel for schedule(dynamic, 256)
  for (Eigen::Index r = 0; r < n; ++r) out[r] = mean(values, data_.x(r), data_.zc(r), data_.zd(r));
  return out;
}

double nw_density(double x, const std::vector<double>& z1, const std::vector<double>& z2,
                  const DyadSample& data, const SmoothingPlan& plan) {
  if (static_cast<int>(z1.size()) != data.p1() || static_cast<int>(z2.size()) != data.p2())
    throw Error(ErrorCode::DimensionMismatch, "query covariate length");
  NwSmoother sm(data, plan.family, plan.bandwidth);
  return std::max(sm.density(x, z1.data(), z2.data()), plan.m_floor);
}

double nw_mean(const VectorXd& values, double x, const std::vector<double>& z1,
               const std::vector<double>& z2, const DyadSample& data, const SmoothingPlan& plan) {
  if (static_cast<int>(z1.size()) != data.p1() || static_cast<int>(z2.size()) != data.p2())
    throw Error(ErrorCode::DimensionMismatch, "query covariate length");
  NwSmoother sm(data, plan.family, plan.bandwidth);
  return sm.mean(values, x, z1.data(), z2.data());
}

double delta_hat(const VectorXd& x, const VectorXd& fhat, double delta) {
  if (x.size() != fhat.size()) throw Error(ErrorCode::DimensionMismatch, "x and fhat lengths");
  CompensatedSum s;
  for (Eigen::Index r = 0; r < x.size(); ++r) {
    const double d = (x[r] + delta > 0 ? 1.0 : 0.0) - (x[r] > 0 ? 1.0 : 0.0);
    if (d != 0.0) s.add(d / fhat[r]);
  }
  return s.value() / static_cast<double>(x.size());
}

std::vector<double> bandwidth_grid(const VectorXd& x, const BandwidthGrid& spec) {
  if (spec.points < 1 || !(spec.c_min > 0) || spec.c_max < spec.c_min)
    throw Error(ErrorCode::InvalidArgument, "bandwidth grid spec");
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / std::max<Eigen::Index>(1, x.size() - 1));
  if (!(sd > 0)) throw Error(ErrorCode::InvalidArgument, "special regressor has zero spread");
  std::vector<double> grid(spec.points);
  for (int k = 0; k < spec.points; ++k) {
    const double t = spec.points == 1 ? 0.0 : static_cast<double>(k) / (spec.points - 1);
    grid[k] = sd * spec.c_min * std::pow(spec.c_max / spec.c_min, t);
  }
  return grid;
}

BandwidthSelection select_bandwidth(const DyadSample& data, const SmoothingPlan& plan,
                                    std::vector<double> grid) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty bandwidth grid");
  std::sort(grid.begin(), grid.end());
  BandwidthSelection sel;
  sel.grid = grid;
  sel.loss.assign(grid.size(), std::numeric_limits<double>::infinity());
  VectorXd x(data.size());
  for (Eigen::Index r = 0; r < data.size(); ++r) x[r] = data.x(r);
  constexpr int kM0 = 10;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    VectorXd fhat;
    try {
      NwSmoother sm(data, plan.family, grid[g]);
      fhat = sm.density_at_data(plan.m_floor);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyCell) throw;
      continue;
    }
    double loss = 0;
    for (int i = 1; i <= kM0; ++i) {
      const double delta = static_cast<double>(i) / kM0;
      const double d = delta - delta_hat(x, fhat, delta);
      loss += d * d;
    }
    sel.loss[g] = loss;
    if (loss < best) {
      best = loss;
      sel.index = static_cast<int>(g);
    }
  }
  if (sel.index < 0) throw Error(ErrorCode::AllCellsEmpty, "every bandwidth candidate failed");
  sel.bandwidth = grid[sel.index];
  return sel;
}

}  // namespace dyadnet
