#include "dyadnet/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "dyadnet/error.hpp"

namespace dyadnet {

double kendall_tau(const std::vector<double>& counts) {
  const int k = static_cast<int>(counts.size());
  double concordant = 0, discordant = 0, ties = 0;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      if (counts[b] > counts[a]) ++concordant;
      else if (counts[b] < counts[a]) ++discordant;
      else ++ties;
    }
  const double pairs = 0.5 * k * (k - 1);
  const double denom = std::sqrt(pairs * (pairs - ties));
  return denom > 0 ? (concordant - discordant) / denom : 0.0;
}

SignDetermination sign_from_counts(const std::vector<double>& counts, double tau_min) {
  if (counts.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 bins");
  SignDetermination out;
  out.counts = counts;
  out.tau = kendall_tau(counts);
  if (std::abs(out.tau) < tau_min)
    throw Error(ErrorCode::AmbiguousSpecialRegressor,
                "edge counts show no monotone trend in the special regressor (tau = " +
                    std::to_string(out.tau) + ")");
  out.sign = out.tau > 0 ? 1 : -1;
  return out;
}

SignDetermination determine_sign(const VectorXd& a, const VectorXd& x1, int bins, double tau_min) {
  if (a.size() != x1.size()) throw Error(ErrorCode::DimensionMismatch, "A and x1 lengths");
  if (bins < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 bins");
  const double lo = x1.minCoeff(), hi = x1.maxCoeff();
  if (!(hi > lo)) throw Error(ErrorCode::AmbiguousSpecialRegressor, "special regressor is constant");
  std::vector<double> counts(bins, 0.0);
  const double width = (hi - lo) / bins;
  for (Eigen::Index r = 0; r < x1.size(); ++r) {
    int k = static_cast<int>((x1[r] - lo) / width);
    k = std::clamp(k, 0, bins - 1);
    counts[k] += a[r];
  }
  return sign_from_counts(counts, tau_min);
}

TransformedResponse transform_y(const VectorXd& a, const VectorXd& x1, const VectorXd& fhat, int sign) {
  if (a.size() != x1.size() || a.size() != fhat.size())
    throw Error(ErrorCode::DimensionMismatch, "A, x1 and fhat lengths");
  if (sign != 1 && sign != -1) throw Error(ErrorCode::InvalidArgument, "sign must be +1 or -1");
  TransformedResponse t;
  t.fhat = fhat;
  t.yhat.resize(a.size());
  for (Eigen::Index r = 0; r < a.size(); ++r) {
    if (!(fhat[r] > 0) || !std::isfinite(fhat[r]))
      throw Error(ErrorCode::NonPositiveDensity, "density at row " + std::to_string(r));
    const double ind = sign * x1[r] > 0 ? 1.0 : 0.0;
    t.yhat[r] = (a[r] - ind) / fhat[r];
  }
  return t;
}

VectorXd estimate_eta(const MatrixXd& z, const VectorXd& yhat, const GramSummary& g,
                      double c4_threshold) {
  const MatrixXd m = ztdz(z, g);
  const VectorXd rhs = ztd_vec(z, yhat, g);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m / static_cast<double>(z.rows()), Eigen::EigenvaluesOnly);
  const double lmin = m.size() ? es.eigenvalues()[0] : 0.0;
  if (!(lmin > c4_threshold) || !(lmin > 0))
    throw Error(ErrorCode::SingularDesign,
                "smallest eigenvalue of Z'DZ/N is " + std::to_string(lmin));
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularDesign, "Z'DZ is not positive definite");
  return llt.solve(rhs);
}

VectorXd estimate_theta(const VectorXd& yhat, const MatrixXd& z, const VectorXd& eta,
                        const GramSummary& g) {
  if (eta.size() != z.cols() || yhat.size() != z.rows())
    throw Error(ErrorCode::DimensionMismatch, "theta step shapes");
  const VectorXd r = yhat - z * eta;
  return apply_Vinv(g.indexing().nodes(), apply_Ut(g.indexing(), r));
}

double sigma_eps2(const VectorXd& residuals) {
  if (residuals.size() == 0) return 0.0;
  CompensatedSum s;
  for (Eigen::Index r = 0; r < residuals.size(); ++r) s.add(residuals[r] * residuals[r]);
  return s.value() / static_cast<double>(residuals.size());
}

double sigma_q2(const VectorXd& yhat, const VectorXd& fitted_mean) {
  if (yhat.size() != fitted_mean.size()) throw Error(ErrorCode::DimensionMismatch, "Q residual lengths");
  return sigma_eps2(yhat - fitted_mean);
}

PreparedNetwork prepare_network(const DirectedNetwork& input, const FitOptions& options, bool binary,
                                double baseline) {
  input.validate(binary);
  PreparedNetwork p;
  const std::vector<int> iso = isolated_nodes(input, baseline);
  if (!iso.empty() && !options.keep_isolated) {
    if (!options.drop_isolated)
      throw Error(ErrorCode::IsolatedNodes,
                  std::to_string(iso.size()) + " node(s) have zero in- or out-degree");
    p.net = std::make_shared<DirectedNetwork>(drop_isolated(input, p.kept, baseline));
  } else {
    p.net = std::make_shared<DirectedNetwork>(input);
    p.kept.resize(input.n);
    for (int i = 0; i < input.n; ++i) p.kept[i] = i;
  }
  if (options.standardize) standardize_continuous(*p.net);
  return p;
}

namespace {

SmoothingPlan plan_for(const DirectedNetwork& net, const FitOptions& options, double h) {
  SmoothingPlan plan = make_plan(net.discrete);
  plan.family = options.kernel;
  plan.m_floor = options.m_floor;
  plan.bandwidth = h;
  return plan;
}

}  // namespace

DensityStage estimate_density(const DirectedNetwork& net, const VectorXd& edge_weight,
                              const FitOptions& options) {
  DensityStage d;
  if (options.sign) {
    d.sign = *options.sign;
    if (d.sign != 1 && d.sign != -1) throw Error(ErrorCode::InvalidArgument, "sign must be +1 or -1");
  } else {
    const SignDetermination sd = determine_sign(edge_weight, net.x1, options.sign_bins, options.tau_min);
    d.sign = sd.sign;
    d.tau = sd.tau;
  }
  const VectorXd x = d.sign * net.x1;
  const SmoothingPlan plan = plan_for(net, options, 1.0);
  const DyadSample sample(x, net.z, plan);
  if (options.bandwidth) {
    d.bandwidth = *options.bandwidth;
  } else {
    d.selection = select_bandwidth(sample, plan, bandwidth_grid(x, options.grid));
    d.bandwidth = d.selection->bandwidth;
  }
  const NwSmoother sm(sample, options.kernel, d.bandwidth);
  d.fhat = sm.density_at_data(options.m_floor);
  return d;
}

VectorXd nw_fitted_mean(const DirectedNetwork& net, int sign, double h, const VectorXd& values,
                        const FitOptions& options) {
  const DyadSample sample(sign * net.x1, net.z, plan_for(net, options, h));
  const NwSmoother sm(sample, options.kernel, h);
  return sm.mean_at_data(values);
}

namespace {

ModelFit finish(std::shared_ptr<DirectedNetwork> net, std::vector<int> kept, const VectorXd& fhat,
                int sign, std::optional<double> q_bandwidth, const FitOptions& options) {
  ModelFit f;
  f.kept_nodes = std::move(kept);
  f.sign = sign;
  const TransformedResponse t = transform_y(net->a, net->x1, fhat, sign);
  f.yhat = t.yhat;
  f.fhat = t.fhat;
  const PairIndexing idx = net->indexing();
  auto gram = std::make_shared<GramSummary>(idx, net->z);
  f.ztdz = ztdz(net->z, *gram);
  f.c4 = c4_diagnostic(net->z, *gram);
  f.eta = estimate_eta(net->z, f.yhat, *gram, options.c4_threshold);
  f.theta = estimate_theta(f.yhat, net->z, f.eta, *gram);
  const int n = net->n;
  f.alpha = f.theta.head(n);
  f.beta = VectorXd::Zero(n);
  f.beta.head(n - 1) = f.theta.tail(n - 1);
  f.eps = f.yhat - apply_U(idx, f.theta) - net->z * f.eta;
  f.sigma_eps2 = sigma_eps2(f.eps);
  if (q_bandwidth) {
    f.bandwidth = *q_bandwidth;
    f.q = f.yhat - nw_fitted_mean(*net, sign, *q_bandwidth, f.yhat, options);
    f.sigma_q2 = sigma_eps2(f.q);
  } else {
    f.q = VectorXd::Zero(f.yhat.size());
    f.sigma_q2 = 0;
  }
  f.gram = std::move(gram);
  f.data = std::move(net);
  return f;
}

}  // namespace

ModelFit fit(const DirectedNetwork& input, const FitOptions& options) {
  PreparedNetwork p = prepare_network(input, options, true, 0.0);
  const DensityStage d = estimate_density(*p.net, p.net->a, options);
  ModelFit f = finish(p.net, std::move(p.kept), d.fhat, d.sign, d.bandwidth, options);
  f.sign_tau = d.tau;
  f.selection = d.selection;
  return f;
}

ModelFit fit_given_density(const DirectedNetwork& input, const VectorXd& fhat, int sign,
                           std::optional<double> q_bandwidth, const FitOptions& options) {
  input.validate(true);
  if (fhat.size() != input.pairs()) throw Error(ErrorCode::DimensionMismatch, "density length");
  auto net = std::make_shared<DirectedNetwork>(input);
  std::vector<int> kept(input.n);
  for (int i = 0; i < input.n; ++i) kept[i] = i;
  return finish(net, std::move(kept), fhat, sign, q_bandwidth, options);
}

HeteroComponents hetero_cov_components(const ModelFit& f) {
  HeteroComponents h;
  h.eps_weights = f.eps;
  h.q_weights = f.q;
  h.ztdz = f.ztdz;
  h.meat = ztdwdz(f.data->z, f.q.array().square().matrix(), *f.gram);
  const Eigen::LDLT<MatrixXd> ldlt(h.ztdz);
  const MatrixXd left = ldlt.solve(MatrixXd::Identity(h.ztdz.rows(), h.ztdz.cols()));
  h.eta_cov = static_cast<double>(f.pairs()) * left * h.meat * left;
  h.eta_cov = 0.5 * (h.eta_cov + h.eta_cov.transpose());
  return h;
}

}  // namespace dyadnet
