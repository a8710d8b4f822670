#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "dyadnet/error.hpp"
#include "dyadnet/estimator.hpp"
#include "dyadnet/simulation.hpp"
#include "oracle.hpp"

using namespace dyadnet;
using oracle::dense_D;
using oracle::dense_U;
using oracle::random_matrix;
using oracle::random_vector;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

VectorXd random_theta(int n, std::mt19937_64& eng) {
  VectorXd t = random_vector(2 * n - 1, eng);
  return t;
}

// Joint least squares of y on [U Z] with beta_n dropped.
VectorXd dense_joint(int n, const MatrixXd& z, const VectorXd& y) {
  const MatrixXd u = dense_U(n);
  MatrixXd x(u.rows(), u.cols() + z.cols());
  x << u, z;
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

}  // namespace

TEST_CASE("sign from edge counts") {
  const SignDetermination dec = sign_from_counts({249, 149, 119, 22, 17, 4, 0}, 0.5);
  CHECK(dec.sign == -1);
  CHECK(dec.tau == doctest::Approx(-1.0));
  CHECK(sign_from_counts({1, 2, 3, 5, 8, 13, 21}, 0.5).sign == 1);
  CHECK(code_of([] { sign_from_counts({5, 5, 5, 5, 5, 5, 5}, 0.5); }) == ErrorCode::AmbiguousSpecialRegressor);
  CHECK(kendall_tau({1, 3, 2}) == doctest::Approx(1.0 / 3));

  // Binned from raw pairs: edges concentrated at low x1.
  VectorXd x(70), a(70);
  for (int r = 0; r < 70; ++r) {
    x[r] = r / 10.0;
    a[r] = (r % 10) < 10 - r / 10 ? 1 : 0;
  }
  CHECK(determine_sign(a, x, 7, 0.5).sign == -1);
  CHECK(code_of([&] { determine_sign(a, VectorXd::Ones(70), 7, 0.5); }) == ErrorCode::AmbiguousSpecialRegressor);
}

TEST_CASE("transform_y") {
  VectorXd a(4), x(4), f(4);
  a << 1, 1, 0, 0;
  x << 0.3, -0.2, 0.5, 0.0;
  f << 0.5, 0.5, 0.25, 0.1;
  const TransformedResponse t = transform_y(a, x, f, 1);
  CHECK(t.yhat[0] == 0.0);
  CHECK(t.yhat[1] == 2.0);
  CHECK(t.yhat[2] == -4.0);
  CHECK(t.yhat[3] == 0.0);  // strict indicator at x1 = 0
  const TransformedResponse neg = transform_y(a, x, f, -1);
  CHECK(neg.yhat[0] == 2.0);
  CHECK(neg.yhat[1] == 0.0);
  f[2] = 0;
  CHECK(code_of([&] { transform_y(a, x, f, 1); }) == ErrorCode::NonPositiveDensity);
}

TEST_CASE("transform_y is unbiased for the index under the true density") {
  // Fixed pair with alpha_i + beta_j = 0.1 and Z = (0.4, 0); X1 | Z ~ N(Z'b, 1).
  DgpSpec spec;
  const double z1 = 0.4, z2 = 0.0;
  const double index = 0.1 + z1 * spec.eta[0] + z2 * spec.eta[1];
  const double mean = z1 * spec.b[0] + z2 * spec.b[1];
  std::mt19937_64 eng(29);
  std::normal_distribution<double> nd;
  const int reps = 100000;
  VectorXd a(reps), x(reps), f(reps);
  for (int r = 0; r < reps; ++r) {
    x[r] = mean + nd(eng);
    a[r] = index + x[r] - nd(eng) > 0 ? 1 : 0;
    f[r] = true_density(x[r], z1, z2, spec);
  }
  const VectorXd y = transform_y(a, x, f, 1).yhat;
  const double m = y.mean();
  const double se = std::sqrt((y.array() - m).square().sum() / (reps - 1) / reps);
  CHECK(std::abs(m - index) < 3 * se);
}

TEST_CASE("eta and theta from exact responses") {
  std::mt19937_64 eng(31);
  for (int n : {4, 6, 9}) {
    const PairIndexing idx(n);
    const MatrixXd z = random_matrix(idx.rows(), 2, eng);
    const GramSummary g(idx, z);
    const VectorXd theta = random_theta(n, eng);
    const Eigen::Vector2d eta(0.7, -1.3);
    const VectorXd y = apply_U(idx, theta) + z * eta;
    const VectorXd eh = estimate_eta(z, y, g);
    CHECK((eh - eta).cwiseAbs().maxCoeff() < 1e-8);
    const VectorXd th = estimate_theta(y, z, eh, g);
    CHECK((th - theta).cwiseAbs().maxCoeff() < 1e-8);

    const VectorXd pure = apply_U(idx, theta);
    CHECK((estimate_theta(pure, z, Eigen::Vector2d::Zero(), g) - theta).cwiseAbs().maxCoeff() < 1e-10);

    // Projection invariance: adding any U theta leaves eta unchanged.
    const VectorXd noise = random_vector(idx.rows(), eng);
    const VectorXd e1 = estimate_eta(z, noise, g);
    const VectorXd e2 = estimate_eta(z, noise + apply_U(idx, random_theta(n, eng)), g);
    CHECK((e1 - e2).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("two-step solution equals the dense joint least squares") {
  std::mt19937_64 eng(37);
  for (int n = 3; n <= 8; ++n) {
    const PairIndexing idx(n);
    // The residual space after the degree design has dimension n^2 - 3n + 1.
    const int p = std::min(3, n * n - 3 * n + 1);
    const MatrixXd z = random_matrix(idx.rows(), p, eng);
    const VectorXd y = random_vector(idx.rows(), eng);
    const GramSummary g(idx, z);
    const VectorXd eta = estimate_eta(z, y, g);
    const VectorXd theta = estimate_theta(y, z, eta, g);
    const VectorXd joint = dense_joint(n, z, y);
    CHECK((theta - joint.head(2 * n - 1)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((eta - joint.tail(p)).cwiseAbs().maxCoeff() < 1e-8);

    // Closed form against the dense projection.
    const MatrixXd d = dense_D(n);
    const VectorXd direct = (z.transpose() * d * z).ldlt().solve(z.transpose() * d * y);
    CHECK((eta - direct).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("a constant shift moves alpha only") {
  std::mt19937_64 eng(41);
  const int n = 6;
  const PairIndexing idx(n);
  const MatrixXd z = random_matrix(idx.rows(), 2, eng);
  const GramSummary g(idx, z);
  const VectorXd y = random_vector(idx.rows(), eng);
  const double c = 1.75;
  const VectorXd y2 = y.array() + c;
  const VectorXd e1 = estimate_eta(z, y, g), e2 = estimate_eta(z, y2, g);
  const VectorXd t1 = estimate_theta(y, z, e1, g), t2 = estimate_theta(y2, z, e2, g);
  CHECK((e1 - e2).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(((t2.head(n).array() - t1.head(n).array()) - c).abs().maxCoeff() < 1e-10);
  CHECK((t2.tail(n - 1) - t1.tail(n - 1)).cwiseAbs().maxCoeff() < 1e-10);
  const VectorXd joint = dense_joint(n, z, y2);
  CHECK((t2 - joint.head(2 * n - 1)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("singular design") {
  const int n = 5;
  const PairIndexing idx(n);
  MatrixXd z(idx.rows(), 1);
  for (Eigen::Index r = 0; r < idx.rows(); ++r) z(r, 0) = idx.pair_of(r).first;  // in span(U)
  const GramSummary g(idx, z);
  CHECK(code_of([&] { estimate_eta(z, VectorXd::Ones(idx.rows()), g); }) == ErrorCode::SingularDesign);
}

TEST_CASE("variance estimators") {
  CHECK(sigma_eps2(VectorXd::Zero(6)) == 0.0);
  VectorXd pm(4);
  pm << 1, -1, -1, 1;
  CHECK(sigma_eps2(pm) == 1.0);
  VectorXd y(4), fitted(4);
  y << 2, -2, 2, -2;
  fitted.setZero();
  CHECK(sigma_q2(y, fitted) == 4.0);
  CHECK(sigma_q2(y, y) == 0.0);
  VectorXd rev = pm.reverse() * 3;
  CHECK(sigma_eps2(rev) == sigma_eps2(3 * pm));
}

TEST_CASE("fit on a simulated network") {
  DgpSpec spec;
  spec.n = 30;
  spec.seed = 43;
  const SimulatedNetwork sim = generate_network(spec);
  FitOptions o;
  o.sign = 1;
  o.bandwidth = 0.8;
  const ModelFit f = fit(sim.net, o);
  CHECK(f.beta[f.n() - 1] == 0.0);
  CHECK(f.alpha.size() == 30);
  const VectorXd eps = f.yhat - apply_U(f.gram->indexing(), f.theta) - sim.net.z * f.eta;
  CHECK((eps - f.eps).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(f.sigma_eps2 == doctest::Approx(f.eps.squaredNorm() / f.eps.size()).epsilon(1e-12));
  CHECK(f.sigma_q2 > 0);
  CHECK(f.sigma_q2 <= f.sigma_eps2 * 1.1);
  for (Eigen::Index r = 0; r < f.yhat.size(); ++r) {
    const double m = std::abs(f.yhat[r]) * f.fhat[r];
    CHECK((m == 0.0 || std::abs(m - 1.0) < 1e-12));
    CHECK(std::abs(f.yhat[r]) <= 1.0 / o.m_floor);
  }

  // Bit-identical reruns, with and without sign detection.
  const ModelFit again = fit(sim.net, o);
  CHECK(again.theta == f.theta);
  CHECK(again.eta == f.eta);
  FitOptions detect = o;
  detect.sign.reset();
  const ModelFit d = fit(sim.net, detect);
  CHECK(d.sign == 1);
  CHECK(d.theta == f.theta);

  // With bandwidth selection the chosen value is a grid point.
  FitOptions sel = o;
  sel.bandwidth.reset();
  sel.grid.points = 6;
  const ModelFit s = fit(sim.net, sel);
  REQUIRE(s.selection.has_value());
  CHECK(s.bandwidth == s.selection->grid[s.selection->index]);
}

TEST_CASE("isolated nodes") {
  DgpSpec spec;
  spec.n = 12;
  spec.seed = 47;
  SimulatedNetwork sim = generate_network(spec);
  const PairIndexing idx(spec.n);
  for (int j = 0; j < spec.n; ++j)
    if (j != 3) sim.net.a[idx.row_of(3, j)] = 0;
  FitOptions o;
  o.sign = 1;
  o.bandwidth = 1.0;
  CHECK(code_of([&] { fit(sim.net, o); }) == ErrorCode::IsolatedNodes);
  o.drop_isolated = true;
  const ModelFit f = fit(sim.net, o);
  CHECK(f.n() < spec.n);
  CHECK(std::find(f.kept_nodes.begin(), f.kept_nodes.end(), 3) == f.kept_nodes.end());
  o.drop_isolated = false;
  o.keep_isolated = true;
  const ModelFit k = fit(sim.net, o);
  CHECK(k.n() == spec.n);
  CHECK(std::isfinite(k.alpha[3]));
  CHECK(k.alpha[3] < k.alpha.mean());
}

TEST_CASE("heteroskedastic components") {
  DgpSpec spec;
  spec.n = 8;
  spec.seed = 53;
  const SimulatedNetwork sim = generate_network(spec);
  FitOptions o;
  ModelFit f = fit_given_density(sim.net, sim.truth.density, 1, 1.0, o);
  const HeteroComponents h = hetero_cov_components(f);
  const MatrixXd d = dense_D(spec.n);
  const MatrixXd& z = sim.net.z;
  const MatrixXd meat = z.transpose() * d * f.q.array().square().matrix().asDiagonal() * d * z;
  CHECK((h.meat - meat).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, meat.cwiseAbs().maxCoeff()));
  const MatrixXd inv = (z.transpose() * d * z).inverse();
  const MatrixXd cov = static_cast<double>(f.pairs()) * inv * meat * inv;
  CHECK((h.eta_cov - cov).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, cov.cwiseAbs().maxCoeff()));

  f.q.setZero();
  CHECK(hetero_cov_components(f).eta_cov.cwiseAbs().maxCoeff() == 0.0);
  // Constant residuals collapse the sandwich to sigma^2 N (Z'DZ)^{-1}.
  f.q.setConstant(0.6);
  const MatrixXd homo = 0.36 * static_cast<double>(f.pairs()) * inv;
  CHECK((hetero_cov_components(f).eta_cov - homo).cwiseAbs().maxCoeff() < 1e-8);
}
