#include "dyadnet/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "dyadnet/error.hpp"

namespace dyadnet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_level(double level) {
  if (!(level > 0 && level <= 1)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1]");
}

void check_draws(int b) {
  if (b < 1) throw Error(ErrorCode::InvalidArgument, "draw count must be at least 1");
}

double vinv_contrast(int n, const std::vector<std::pair<int, double>>& terms) {
  double v = 0;
  for (const auto& [a, wa] : terms)
    for (const auto& [b, wb] : terms) v += wa * wb * vinv_entry(a, b, n);
  return v;
}

}  // namespace

std::mt19937_64 draw_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ (stream * 0xd1b54a32d192ed03ULL));
  s = splitmix64(s ^ index);
  return std::mt19937_64(s);
}

double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) {
    if (p == 0) return -std::numeric_limits<double>::infinity();
    if (p == 1) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
  }
  // Acklam's rational approximation refined by one Halley step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

double empirical_quantile(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "no draws");
  const double B = static_cast<double>(sorted.size());
  const double rank = std::ceil(prob * B - 1e-9);
  if (rank <= 0) return 0.0;
  const std::size_t k = static_cast<std::size_t>(std::min(rank, B));
  return sorted[k - 1];
}

VectorXd sample_theta_draw(const PairIndexing& idx, const VectorXd& weights, std::uint64_t seed,
                           std::uint64_t stream, int b) {
  if (weights.size() != idx.rows()) throw Error(ErrorCode::DimensionMismatch, "sampler weights");
  std::mt19937_64 eng = draw_engine(seed, stream, static_cast<std::uint64_t>(b));
  std::normal_distribution<double> nd;
  VectorXd v(idx.rows());
  for (Eigen::Index r = 0; r < v.size(); ++r) v[r] = weights[r] * nd(eng);
  return std::sqrt(static_cast<double>(idx.nodes() - 1)) * apply_Vinv(idx.nodes(), apply_Ut(idx, v));
}

VectorXd theta_weights(const ModelFit& fit, CovarianceMode mode) {
  if (mode == CovarianceMode::Heteroskedastic) return fit.eps;
  return VectorXd::Constant(fit.pairs(), std::sqrt(fit.sigma_eps2));
}

MatrixXd eta_covariance(const ModelFit& fit, CovarianceMode mode) {
  if (mode == CovarianceMode::Heteroskedastic) return hetero_cov_components(fit).eta_cov;
  const MatrixXd m = fit.ztdz / static_cast<double>(fit.pairs());
  const Eigen::LDLT<MatrixXd> ldlt(m);
  MatrixXd inv = ldlt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  inv = 0.5 * (inv + inv.transpose());
  return fit.sigma_q2 * inv;
}

MatrixXd psd_factor(const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  const VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal();
}

VectorXd sample_G1(const ModelFit& fit, const CovarianceModel& cov, int b) {
  return sample_theta_draw(fit.data->indexing(), theta_weights(fit, cov.mode), cov.seed,
                           streams::kTheta, b);
}

namespace {

VectorXd eta_draw(const MatrixXd& factor, std::uint64_t seed, std::uint64_t stream, int b) {
  std::mt19937_64 eng = draw_engine(seed, stream, static_cast<std::uint64_t>(b));
  std::normal_distribution<double> nd;
  VectorXd xi(factor.cols());
  for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] = nd(eng);
  return factor * xi;
}

}  // namespace

VectorXd sample_G2(const ModelFit& fit, const CovarianceModel& cov, int b) {
  return eta_draw(psd_factor(eta_covariance(fit, cov.mode)), cov.seed, streams::kEta, b);
}

VectorXd zeta_diag(int n, double sigma2) {
  VectorXd z(2 * n - 1);
  for (int i = 0; i < 2 * n - 1; ++i) z[i] = (n - 1) * sigma2 * vinv_entry(i, i, n);
  return z;
}

VectorXd zeta_diag(const ModelFit& fit, CovarianceMode mode) {
  const int n = fit.n();
  if (mode == CovarianceMode::Homoskedastic) return zeta_diag(n, fit.sigma_eps2);
  const int m = 2 * n - 1;
  MatrixXd vinv(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) vinv(i, j) = vinv_entry(i, j, n);
  const PairIndexing idx = fit.data->indexing();
  VectorXd acc = VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < fit.pairs(); ++r) {
    const auto [i, j] = idx.pair_of(r);
    const int bc = idx.beta_column(j);
    const double e2 = fit.eps[r] * fit.eps[r];
    if (e2 == 0.0) continue;
    if (bc >= 0)
      acc += e2 * (vinv.col(i) + vinv.col(bc)).cwiseAbs2();
    else
      acc += e2 * vinv.col(i).cwiseAbs2();
  }
  return (n - 1) * acc;
}

double theta_contrast_variance(const ModelFit& fit, CovarianceMode mode,
                               const std::vector<std::pair<int, double>>& terms) {
  const int n = fit.n();
  for (const auto& t : terms)
    if (t.first < 0 || t.first >= 2 * n - 1) throw Error(ErrorCode::IndexOutOfRange, "theta contrast column");
  if (mode == CovarianceMode::Homoskedastic) return (n - 1) * fit.sigma_eps2 * vinv_contrast(n, terms);
  VectorXd c = VectorXd::Zero(2 * n - 1);
  for (const auto& [k, w] : terms) c[k] += w;
  const PairIndexing idx = fit.data->indexing();
  const VectorXd u = apply_U(idx, apply_Vinv(n, c));
  CompensatedSum s;
  for (Eigen::Index r = 0; r < u.size(); ++r) s.add(fit.eps[r] * fit.eps[r] * u[r] * u[r]);
  return (n - 1) * s.value();
}

std::vector<Interval> ci_batch(const ModelFit& fit, const CovarianceModel& cov, const ContrastSpec& spec,
                               double level, CiMethod method) {
  check_level(level);
  const int n = fit.n();
  const bool theta = spec.block == ContrastBlock::Theta;
  const VectorXd& est = theta ? fit.theta : fit.eta;
  const double scale = std::sqrt(theta ? static_cast<double>(n - 1) : static_cast<double>(fit.pairs()));
  for (const ContrastRow& row : spec.rows)
    for (const auto& t : row.terms)
      if (t.first < 0 || t.first >= est.size()) throw Error(ErrorCode::IndexOutOfRange, "contrast column");

  std::vector<Interval> out(spec.rows.size());
  for (std::size_t k = 0; k < spec.rows.size(); ++k) {
    double c = 0;
    for (const auto& [col, w] : spec.rows[k].terms) c += w * est[col];
    out[k].estimate = c;
  }

  std::vector<double> half(spec.rows.size(), 0.0);
  if (method == CiMethod::ExactNormal) {
    const double z = level >= 1 ? 0.0 : normal_quantile(1 - level / 2);
    MatrixXd eta_cov;
    if (!theta) eta_cov = eta_covariance(fit, cov.mode);
    for (std::size_t k = 0; k < spec.rows.size(); ++k) {
      double var;
      if (theta) {
        var = theta_contrast_variance(fit, cov.mode, spec.rows[k].terms);
      } else {
        var = 0;
        for (const auto& [a, wa] : spec.rows[k].terms)
          for (const auto& [b, wb] : spec.rows[k].terms) var += wa * wb * eta_cov(a, b);
      }
      half[k] = z * std::sqrt(std::max(var, 0.0)) / scale;
    }
  } else {
    check_draws(cov.draws);
    std::vector<std::vector<double>> abs_draws(spec.rows.size(), std::vector<double>(cov.draws));
    if (theta) {
      const VectorXd w = theta_weights(fit, cov.mode);
      const PairIndexing idx = fit.data->indexing();
      for (int b = 0; b < cov.draws; ++b) {
        const VectorXd g = sample_theta_draw(idx, w, cov.seed, streams::kTheta, b);
        for (std::size_t k = 0; k < spec.rows.size(); ++k) {
          double v = 0;
          for (const auto& [col, wt] : spec.rows[k].terms) v += wt * g[col];
          abs_draws[k][b] = std::abs(v);
        }
      }
    } else {
      const MatrixXd factor = psd_factor(eta_covariance(fit, cov.mode));
      for (int b = 0; b < cov.draws; ++b) {
        const VectorXd g = eta_draw(factor, cov.seed, streams::kEta, b);
        for (std::size_t k = 0; k < spec.rows.size(); ++k) {
          double v = 0;
          for (const auto& [col, wt] : spec.rows[k].terms) v += wt * g[col];
          abs_draws[k][b] = std::abs(v);
        }
      }
    }
    for (std::size_t k = 0; k < spec.rows.size(); ++k) {
      std::sort(abs_draws[k].begin(), abs_draws[k].end());
      half[k] = empirical_quantile(abs_draws[k], 1 - level) / scale;
    }
  }
  for (std::size_t k = 0; k < spec.rows.size(); ++k) {
    out[k].half_width = half[k];
    out[k].lower = out[k].estimate - half[k];
    out[k].upper = out[k].estimate + half[k];
  }
  return out;
}

Interval ci_scalar(const ModelFit& fit, const CovarianceModel& cov, ContrastBlock block,
                   const ContrastRow& row, double level, CiMethod method) {
  ContrastSpec spec;
  spec.block = block;
  spec.rows.push_back(row);
  return ci_batch(fit, cov, spec, level, method).front();
}

double NullDistribution::critical_value(double level) const {
  check_level(level);
  return empirical_quantile(draws, 1 - level);
}

double NullDistribution::p_value(double statistic) const {
  const auto it = std::lower_bound(draws.begin(), draws.end(), statistic);
  const double exceed = static_cast<double>(draws.end() - it);
  return (1.0 + exceed) / (static_cast<double>(draws.size()) + 1.0);
}

namespace {

int theta_column(int n, int node, Which which) {
  if (which == Which::Alpha) {
    if (node < 0 || node >= n) throw Error(ErrorCode::NodeOutOfRange, "node " + std::to_string(node));
    return node;
  }
  if (node < 0 || node >= n - 1)
    throw Error(ErrorCode::NodeOutOfRange, "beta of node " + std::to_string(node) + " is not free");
  return n + node;
}

std::vector<int> group_columns(int n, const std::vector<int>& group, Which which) {
  if (group.size() < 2) throw Error(ErrorCode::GroupTooSmall, "group needs at least 2 nodes");
  std::set<int> seen;
  std::vector<int> cols;
  for (int g : group) {
    if (!seen.insert(g).second) throw Error(ErrorCode::InvalidArgument, "duplicate node in group");
    cols.push_back(theta_column(n, g, which));
  }
  return cols;
}

std::vector<double> family_sd(const ModelFit& fit, CovarianceMode mode, const ContrastFamily& fam) {
  std::vector<double> sd(fam.first.size());
  for (std::size_t k = 0; k < sd.size(); ++k) {
    std::vector<std::pair<int, double>> terms{{fam.first[k], 1.0}};
    if (fam.second[k] >= 0) terms.push_back({fam.second[k], -1.0});
    sd[k] = std::sqrt(std::max(theta_contrast_variance(fit, mode, terms), 0.0));
  }
  return sd;
}

double family_max(const VectorXd& v, const ContrastFamily& fam, const std::vector<double>& sd,
                  double scale) {
  double m = 0;
  for (std::size_t k = 0; k < sd.size(); ++k) {
    if (!(sd[k] > 0)) continue;
    const double d = v[fam.first[k]] - (fam.second[k] >= 0 ? v[fam.second[k]] : 0.0);
    m = std::max(m, scale * std::abs(d) / sd[k]);
  }
  return m;
}

}  // namespace

ContrastFamily sparse_family(int n, Which which) {
  ContrastFamily f;
  const int count = which == Which::Alpha ? n : n - 1;
  for (int i = 0; i < count; ++i) {
    f.first.push_back(theta_column(n, i, which));
    f.second.push_back(-1);
  }
  f.description = which == Which::Alpha ? "max_i |alpha_i| (sparse signal)" : "max_j |beta_j| (sparse signal)";
  return f;
}

std::vector<std::vector<int>> relabelings(const std::vector<int>& group, int m_tilde, std::uint64_t seed) {
  if (m_tilde < 0) throw Error(ErrorCode::InvalidArgument, "m_tilde must be nonnegative");
  std::vector<std::vector<int>> out{group};
  if (m_tilde == 0) return out;
  const std::size_t g = group.size();
  std::mt19937_64 eng = draw_engine(seed, streams::kRelabel, 0);
  if (g <= 8) {
    std::vector<std::vector<int>> all;
    std::vector<int> perm(g);
    std::iota(perm.begin(), perm.end(), 0);
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<int> p(g);
      for (std::size_t k = 0; k < g; ++k) p[k] = group[perm[k]];
      all.push_back(std::move(p));
    }
    std::shuffle(all.begin(), all.end(), eng);
    const std::size_t take = std::min<std::size_t>(all.size(), static_cast<std::size_t>(m_tilde));
    for (std::size_t s = 0; s < take; ++s) out.push_back(all[s]);
  } else {
    for (int s = 0; s < m_tilde; ++s) {
      std::vector<int> p = group;
      std::shuffle(p.begin(), p.end(), eng);
      out.push_back(std::move(p));
    }
  }
  return out;
}

ContrastFamily heterogeneity_family(int n, const std::vector<int>& group, int m_tilde, Which which,
                                    std::uint64_t seed) {
  group_columns(n, group, which);
  ContrastFamily f;
  f.m_tilde = m_tilde;
  std::set<std::pair<int, int>> seen;
  for (const std::vector<int>& order : relabelings(group, m_tilde, seed))
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      int a = theta_column(n, order[k], which), b = theta_column(n, order[k + 1], which);
      if (a > b) std::swap(a, b);
      if (seen.insert({a, b}).second) {
        f.first.push_back(a);
        f.second.push_back(b);
      }
    }
  f.description = std::string("consecutive differences of ") + (which == Which::Alpha ? "alpha" : "beta") +
                  " over " + std::to_string(m_tilde + 1) + " ordering(s) of " + std::to_string(group.size()) +
                  " nodes";
  return f;
}

ContrastFamily heterogeneity_full_family(int n, const std::vector<int>& group, Which which) {
  const std::vector<int> cols = group_columns(n, group, which);
  ContrastFamily f;
  for (std::size_t a = 0; a < cols.size(); ++a)
    for (std::size_t b = a + 1; b < cols.size(); ++b) {
      f.first.push_back(std::min(cols[a], cols[b]));
      f.second.push_back(std::max(cols[a], cols[b]));
    }
  f.description = std::string("all pairwise differences of ") + (which == Which::Alpha ? "alpha" : "beta") +
                  " over " + std::to_string(group.size()) + " nodes";
  return f;
}

namespace {

NullDistribution null_from(const PairIndexing& idx, const VectorXd& w, const std::vector<double>& sd,
                           const CovarianceModel& cov, const ContrastFamily& fam) {
  check_draws(cov.draws);
  NullDistribution null;
  null.seed = cov.seed;
  null.draws.resize(cov.draws);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < cov.draws; ++b) {
    const VectorXd g = sample_theta_draw(idx, w, cov.seed, streams::kTheta, b);
    null.draws[b] = family_max(g, fam, sd, 1.0);
  }
  std::sort(null.draws.begin(), null.draws.end());
  return null;
}

}  // namespace

NullDistribution max_null(const ModelFit& fit, const CovarianceModel& cov, const ContrastFamily& fam) {
  return null_from(fit.data->indexing(), theta_weights(fit, cov.mode), family_sd(fit, cov.mode, fam), cov, fam);
}

NullDistribution homoskedastic_null(int n, const CovarianceModel& cov, const ContrastFamily& fam) {
  const PairIndexing idx(n);
  std::vector<double> sd(fam.first.size());
  for (std::size_t k = 0; k < sd.size(); ++k) {
    std::vector<std::pair<int, double>> terms{{fam.first[k], 1.0}};
    if (fam.second[k] >= 0) terms.push_back({fam.second[k], -1.0});
    sd[k] = std::sqrt(std::max((n - 1) * vinv_contrast(n, terms), 0.0));
  }
  return null_from(idx, VectorXd::Ones(idx.rows()), sd, cov, fam);
}

double max_statistic(const ModelFit& fit, CovarianceMode mode, const ContrastFamily& fam) {
  const std::vector<double> sd = family_sd(fit, mode, fam);
  return family_max(fit.theta, fam, sd, std::sqrt(static_cast<double>(fit.n() - 1)));
}

TestReport max_test(const ModelFit& fit, const CovarianceModel& cov, const ContrastFamily& fam,
                    double level, const NullDistribution* null) {
  check_level(level);
  NullDistribution local;
  if (!null) {
    local = max_null(fit, cov, fam);
    null = &local;
  }
  TestReport rep;
  rep.statistic = max_statistic(fit, cov.mode, fam);
  rep.critical_value = null->critical_value(level);
  rep.p_value = null->p_value(rep.statistic);
  rep.reject = rep.statistic > rep.critical_value;
  rep.draws = static_cast<int>(null->draws.size());
  rep.seed = null->seed;
  rep.m_tilde = fam.m_tilde;
  rep.level = level;
  rep.contrast = fam.description;
  return rep;
}

TestReport test_sparse(const ModelFit& fit, const CovarianceModel& cov, Which which, double level) {
  return max_test(fit, cov, sparse_family(fit.n(), which), level);
}

TestReport test_heterogeneity(const ModelFit& fit, const CovarianceModel& cov,
                              const std::vector<int>& group, int m_tilde, double level, Which which) {
  return max_test(fit, cov, heterogeneity_family(fit.n(), group, m_tilde, which, cov.seed), level);
}

TestReport test_heterogeneity_full(const ModelFit& fit, const CovarianceModel& cov,
                                   const std::vector<int>& group, double level, Which which) {
  return max_test(fit, cov, heterogeneity_full_family(fit.n(), group, which), level);
}

std::vector<int> recover_support(const ModelFit& fit, double t, Which which, CovarianceMode mode) {
  if (!(t > 0)) throw Error(ErrorCode::InvalidArgument, "threshold t must be positive");
  const int n = fit.n();
  const VectorXd zeta = zeta_diag(fit, mode);
  const double logm = std::log(static_cast<double>(which == Which::Alpha ? n : n - 1));
  const int count = which == Which::Alpha ? n : n - 1;
  std::vector<int> s;
  for (int i = 0; i < count; ++i) {
    const int col = theta_column(n, i, which);
    const double thr = std::sqrt(t * zeta[col] * logm / (n - 1));
    if (std::abs(fit.theta[col]) > thr) s.push_back(i);
  }
  return s;
}

double similarity(const std::vector<int>& s_hat, const std::vector<int>& s0) {
  if (s0.empty()) throw Error(ErrorCode::EmptyReference, "reference support is empty");
  if (s_hat.empty()) return 0.0;
  const std::set<int> a(s_hat.begin(), s_hat.end()), b(s0.begin(), s0.end());
  std::size_t common = 0;
  for (int v : a) common += b.count(v);
  return static_cast<double>(common) / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace dyadnet
