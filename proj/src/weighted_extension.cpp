#include "dyadnet/weighted_extension.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dyadnet/error.hpp"

namespace dyadnet {

namespace {

// V_bar = [[A, C], [C, A]] with A = m I, C = J - I splits into P = (A + C)^{-1}
// and Q = (A - C)^{-1}, both of the form a I + b J.
struct ReducedClasses {
  double same_diag, same_off, cross_diag, cross_off;
  explicit ReducedClasses(int n) {
    const double m = n - 1;
    const double p_i = 1 / (m - 1), p_j = -1 / ((m - 1) * (2 * m - 1));
    const double q_i = 1 / (m + 1), q_j = 1 / (m + 1);
    same_diag = 0.5 * (p_i + q_i + p_j + q_j);
    same_off = 0.5 * (p_j + q_j);
    cross_diag = 0.5 * (p_i - q_i + p_j - q_j);
    cross_off = 0.5 * (p_j - q_j);
  }
};

}  // namespace

double reduced_vinv_entry(int i, int j, int n) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "n < 3");
  const int m = n - 1;
  if (i < 0 || j < 0 || i >= 2 * m || j >= 2 * m) throw Error(ErrorCode::IndexOutOfRange, "reduced V^{-1} index");
  const ReducedClasses c(n);
  const bool same_block = (i < m) == (j < m);
  const bool same_node = (i % m) == (j % m);
  if (same_block) return same_node ? c.same_diag : c.same_off;
  return same_node ? c.cross_diag : c.cross_off;
}

VectorXd apply_reduced_Vinv(int n, const VectorXd& w) {
  const int m = n - 1;
  if (w.size() != 2 * m) throw Error(ErrorCode::DimensionMismatch, "reduced V^{-1} argument");
  const ReducedClasses c(n);
  CompensatedSum sa, sb;
  for (int i = 0; i < m; ++i) {
    sa.add(w[i]);
    sb.add(w[m + i]);
  }
  const double SA = sa.value(), SB = sb.value();
  VectorXd out(2 * m);
  for (int i = 0; i < m; ++i) {
    const double wa = w[i], wb = w[m + i];
    out[i] = c.same_diag * wa + c.same_off * (SA - wa) + c.cross_diag * wb + c.cross_off * (SB - wb);
    out[m + i] = c.cross_diag * wa + c.cross_off * (SA - wa) + c.same_diag * wb + c.same_off * (SB - wb);
  }
  return out;
}

VectorXd apply_reduced_U(const PairIndexing& idx, const VectorXd& theta) {
  const int n = idx.nodes(), m = n - 1;
  if (theta.size() != 2 * m) throw Error(ErrorCode::DimensionMismatch, "reduced theta length");
  VectorXd out(idx.rows());
  Eigen::Index r = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      out[r++] = (i < m ? theta[i] : 0.0) + (j < m ? theta[m + j] : 0.0);
    }
  return out;
}

VectorXd apply_reduced_Ut(const PairIndexing& idx, const VectorXd& v) {
  const VectorXd full = apply_Ut(idx, v);
  const int n = idx.nodes(), m = n - 1;
  VectorXd out(2 * m);
  out.head(m) = full.head(m);
  out.tail(m) = full.tail(m);
  return out;
}

std::vector<double> infer_levels(const VectorXd& a) {
  std::set<double> s(a.data(), a.data() + a.size());
  return {s.begin(), s.end()};
}

void validate_levels(const VectorXd& a, const std::vector<double>& levels) {
  if (levels.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two levels");
  for (std::size_t l = 1; l < levels.size(); ++l)
    if (!(levels[l] > levels[l - 1])) throw Error(ErrorCode::InvalidArgument, "levels must be strictly increasing");
  std::vector<long> count(levels.size(), 0);
  for (Eigen::Index r = 0; r < a.size(); ++r) {
    const auto it = std::lower_bound(levels.begin(), levels.end(), a[r]);
    if (it == levels.end() || *it != a[r])
      throw Error(ErrorCode::UnknownLevelValue, "value " + std::to_string(a[r]) + " at row " + std::to_string(r));
    ++count[it - levels.begin()];
  }
  for (std::size_t l = 0; l < levels.size(); ++l)
    if (count[l] == 0) throw Error(ErrorCode::LevelCollapse, "level " + std::to_string(levels[l]) + " is never observed");
}

VectorXd transform_y_weighted(const VectorXd& a, const VectorXd& x1, const VectorXd& fhat, int sign,
                              const std::vector<double>& levels, int level) {
  if (level < 1 || level >= static_cast<int>(levels.size()))
    throw Error(ErrorCode::IndexOutOfRange, "level index");
  if (a.size() != x1.size() || a.size() != fhat.size()) throw Error(ErrorCode::DimensionMismatch, "lengths");
  const double pi = levels[level];
  VectorXd y(a.size());
  for (Eigen::Index r = 0; r < a.size(); ++r) {
    if (!(fhat[r] > 0) || !std::isfinite(fhat[r]))
      throw Error(ErrorCode::NonPositiveDensity, "density at row " + std::to_string(r));
    const double up = a[r] >= pi ? 1.0 : 0.0;
    const double ind = sign * x1[r] > 0 ? 1.0 : 0.0;
    y[r] = (up - ind) / fhat[r];
  }
  return y;
}

namespace {

double mean_of(const VectorXd& v) {
  CompensatedSum s;
  for (Eigen::Index r = 0; r < v.size(); ++r) s.add(v[r]);
  return s.value() / static_cast<double>(v.size());
}

WeightedModelFit finish_weighted(std::shared_ptr<DirectedNetwork> net, std::vector<int> kept,
                                 const std::vector<double>& levels, const VectorXd& fhat, int sign,
                                 std::optional<double> q_bandwidth, const FitOptions& options) {
  WeightedModelFit f;
  f.kept_nodes = std::move(kept);
  f.levels = levels;
  f.sign = sign;
  f.fhat = fhat;
  const int k = static_cast<int>(levels.size()) - 1;
  const Eigen::Index N = net->pairs();
  f.yhat.resize(N, k);
  for (int l = 1; l <= k; ++l) f.yhat.col(l - 1) = transform_y_weighted(net->a, net->x1, fhat, sign, levels, l);
  VectorXd ybar = f.yhat.col(0);
  for (int l = 1; l < k; ++l) ybar += f.yhat.col(l);
  ybar /= static_cast<double>(k);

  // The stacked regression on (reduced degree design, level indicators, Z)
  // spans the same space as (binary degree design, level contrasts, Z), and
  // the contrasts are orthogonal to everything else. The fit therefore splits
  // into the binary fit of the level average plus per-level mean offsets.
  const PairIndexing idx = net->indexing();
  auto gram = std::make_shared<GramSummary>(idx, net->z);
  f.ztdz = ztdz(net->z, *gram);
  f.eta = estimate_eta(net->z, ybar, *gram, options.c4_threshold);
  const VectorXd zeta = net->z * f.eta;
  const VectorXd rbar = ybar - zeta;
  f.theta_avg = apply_Vinv(idx.nodes(), apply_Ut(idx, rbar));
  const int n = net->n;
  const double anchor = f.theta_avg[n - 1];
  f.alpha = VectorXd::Zero(n);
  f.beta = VectorXd::Zero(n);
  for (int i = 0; i + 1 < n; ++i) {
    f.alpha[i] = f.theta_avg[i] - anchor;
    f.beta[i] = f.theta_avg[n + i];
  }
  const double rbar_mean = mean_of(rbar);
  f.omega.resize(k);
  for (int l = 0; l < k; ++l) {
    const VectorXd rl = f.yhat.col(l) - zeta;
    f.omega[l] = -anchor - (mean_of(rl) - rbar_mean);
  }
  f.residual = rbar - apply_U(idx, f.theta_avg);
  f.sigma_weps2 = sigma_eps2(f.residual);
  f.sigma_wq2 = VectorXd::Zero(k);
  f.q = MatrixXd::Zero(f.yhat.rows(), k);
  if (q_bandwidth) {
    f.bandwidth = *q_bandwidth;
    for (int l = 0; l < k; ++l) {
      const VectorXd yl = f.yhat.col(l);
      f.q.col(l) = yl - nw_fitted_mean(*net, sign, *q_bandwidth, yl, options);
      f.sigma_wq2[l] = sigma_eps2(f.q.col(l));
    }
  }
  f.gram = std::move(gram);
  f.data = std::move(net);
  return f;
}

}  // namespace

WeightedModelFit fit_weighted(const DirectedNetwork& input, const std::vector<double>& levels,
                              const FitOptions& options) {
  validate_levels(input.a, levels);
  PreparedNetwork p = prepare_network(input, options, false, levels.front());
  validate_levels(p.net->a, levels);
  const VectorXd weight = p.net->a.array() - levels.front();
  const DensityStage d = estimate_density(*p.net, weight, options);
  return finish_weighted(p.net, std::move(p.kept), levels, d.fhat, d.sign, d.bandwidth, options);
}

WeightedModelFit fit_weighted_given_density(const DirectedNetwork& input, const std::vector<double>& levels,
                                            const VectorXd& fhat, int sign,
                                            std::optional<double> q_bandwidth, const FitOptions& options) {
  input.validate(false);
  validate_levels(input.a, levels);
  if (fhat.size() != input.pairs()) throw Error(ErrorCode::DimensionMismatch, "density length");
  auto net = std::make_shared<DirectedNetwork>(input);
  std::vector<int> kept(input.n);
  for (int i = 0; i < input.n; ++i) kept[i] = i;
  return finish_weighted(net, std::move(kept), levels, fhat, sign, q_bandwidth, options);
}

MatrixXd weighted_xi_covariance(const WeightedModelFit& f, XiMeat meat_kind) {
  const DirectedNetwork& net = *f.data;
  const PairIndexing idx = net.indexing();
  const int n = net.n;
  const int k = f.thresholds();
  const Eigen::Index p = net.z.cols();
  const Eigen::Index N = net.pairs();
  const Eigen::Index d = k + p;
  // Projections of 1 and of each Z column onto the reduced degree design.
  auto project = [&](const VectorXd& v) {
    return apply_reduced_U(idx, apply_reduced_Vinv(n, apply_reduced_Ut(idx, v)));
  };
  const VectorXd p1 = project(VectorXd::Ones(N)) / static_cast<double>(k);
  MatrixXd dz(N, p);
  for (Eigen::Index c = 0; c < p; ++c) dz.col(c) = net.z.col(c) - project(VectorXd(net.z.col(c)));
  MatrixXd bread = MatrixXd::Zero(d, d), meat = MatrixXd::Zero(d, d);
  VectorXd row(d);
  for (int l = 0; l < k; ++l) {
    MatrixXd block = MatrixXd::Zero(d, d);
    for (Eigen::Index r = 0; r < N; ++r) {
      for (int c = 0; c < k; ++c) row[c] = (c == l ? 1.0 : 0.0) - p1[r];
      row.tail(p) = dz.row(r).transpose();
      block.selfadjointView<Eigen::Lower>().rankUpdate(row);
    }
    block = block.selfadjointView<Eigen::Lower>();
    bread += block;
    if (meat_kind == XiMeat::LevelDiagonal) meat += f.sigma_wq2[l] * block;
  }
  if (meat_kind == XiMeat::PairClustered) {
    if (f.q.rows() != N || f.q.cols() != k) throw Error(ErrorCode::DimensionMismatch, "level residuals");
    VectorXd score(d);
    for (Eigen::Index r = 0; r < N; ++r) {
      const double qsum = f.q.row(r).sum();
      for (int c = 0; c < k; ++c) score[c] = f.q(r, c) - p1[r] * qsum;
      score.tail(p) = qsum * dz.row(r).transpose();
      meat.selfadjointView<Eigen::Lower>().rankUpdate(score);
    }
    meat = MatrixXd(meat.selfadjointView<Eigen::Lower>());
  }
  const Eigen::LDLT<MatrixXd> ldlt(bread);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularDesign, "stacked design is singular");
  const MatrixXd inv = ldlt.solve(MatrixXd::Identity(d, d));
  MatrixXd cov = static_cast<double>(N) * inv * meat * inv;
  return 0.5 * (cov + cov.transpose());
}

VectorXd sample_G5(const WeightedModelFit& f, const CovarianceModel& cov, int b) {
  const PairIndexing idx = f.data->indexing();
  const VectorXd w = VectorXd::Constant(idx.rows(), std::sqrt(f.sigma_weps2));
  return sample_theta_draw(idx, w, cov.seed, streams::kWeightedTheta, b);
}

VectorXd sample_G6(const WeightedModelFit& f, const CovarianceModel& cov, int b, XiMeat meat) {
  const MatrixXd factor = psd_factor(weighted_xi_covariance(f, meat));
  std::mt19937_64 eng = draw_engine(cov.seed, streams::kWeightedXi, static_cast<std::uint64_t>(b));
  std::normal_distribution<double> nd;
  VectorXd xi(factor.cols());
  for (Eigen::Index c = 0; c < xi.size(); ++c) xi[c] = nd(eng);
  return factor * xi;
}

WeightedIntervals weighted_inference(const WeightedModelFit& f, const CovarianceModel& cov, double level,
                                     OmegaInterval omega_method, XiMeat meat) {
  if (!(level > 0 && level <= 1)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1]");
  if (cov.draws < 1) throw Error(ErrorCode::InvalidArgument, "draw count must be at least 1");
  const int n = f.n();
  const int m = n - 1;
  const int k = f.thresholds();
  const Eigen::Index p = f.eta.size();
  const double root_n1 = std::sqrt(static_cast<double>(n - 1));
  const double root_N = std::sqrt(static_cast<double>(f.data->pairs()));
  const int B = cov.draws;

  std::vector<std::vector<double>> da(m, std::vector<double>(B)), db(m, std::vector<double>(B)),
      dw(k, std::vector<double>(B)), de(p, std::vector<double>(B));
  const PairIndexing idx = f.data->indexing();
  const VectorXd w = VectorXd::Constant(idx.rows(), std::sqrt(f.sigma_weps2));
  const MatrixXd factor = psd_factor(weighted_xi_covariance(f, meat));
  for (int b = 0; b < B; ++b) {
    const VectorXd g = sample_theta_draw(idx, w, cov.seed, streams::kWeightedTheta, b);
    for (int i = 0; i < m; ++i) {
      da[i][b] = std::abs(g[i] - g[n - 1]);
      db[i][b] = std::abs(g[n + i]);
    }
    std::mt19937_64 eng = draw_engine(cov.seed, streams::kWeightedXi, static_cast<std::uint64_t>(b));
    std::normal_distribution<double> nd;
    VectorXd xi(factor.cols());
    for (Eigen::Index c = 0; c < xi.size(); ++c) xi[c] = nd(eng);
    const VectorXd g6 = factor * xi;
    for (int l = 0; l < k; ++l)
      dw[l][b] = omega_method == OmegaInterval::Degree ? std::abs(g[n - 1]) : std::abs(g6[l]);
    for (Eigen::Index c = 0; c < p; ++c) de[c][b] = std::abs(g6[k + c]);
  }
  auto make = [&](double est, std::vector<double>& draws, double scale) {
    std::sort(draws.begin(), draws.end());
    Interval iv;
    iv.estimate = est;
    iv.half_width = empirical_quantile(draws, 1 - level) / scale;
    iv.lower = est - iv.half_width;
    iv.upper = est + iv.half_width;
    return iv;
  };
  WeightedIntervals out;
  for (int i = 0; i < m; ++i) {
    out.alpha.push_back(make(f.alpha[i], da[i], root_n1));
    out.beta.push_back(make(f.beta[i], db[i], root_n1));
  }
  const double omega_scale = omega_method == OmegaInterval::Degree ? root_n1 : root_N;
  for (int l = 0; l < k; ++l) out.omega.push_back(make(f.omega[l], dw[l], omega_scale));
  for (Eigen::Index c = 0; c < p; ++c) out.eta.push_back(make(f.eta[c], de[c], root_N));
  return out;
}

}  // namespace dyadnet
