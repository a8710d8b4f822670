#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "dyadnet/error.hpp"
#include "dyadnet/inference.hpp"
#include "dyadnet/simulation.hpp"
#include "oracle.hpp"

using namespace dyadnet;
using oracle::dense_U;

namespace {

ModelFit small_fit(int n, std::uint64_t seed) {
  DgpSpec spec;
  spec.n = n;
  spec.seed = seed;
  const SimulatedNetwork sim = generate_network(spec);
  return fit_given_density(sim.net, sim.truth.density, 1, 1.0, FitOptions{});
}

MatrixXd dense_vinv(int n) {
  const MatrixXd u = dense_U(n);
  return (u.transpose() * u).inverse();
}

// Entrywise check of an empirical covariance at 4 Monte-Carlo standard errors.
void check_covariance(const std::vector<VectorXd>& draws, const MatrixXd& target) {
  const double b = static_cast<double>(draws.size());
  const Eigen::Index m = target.rows();
  MatrixXd s = MatrixXd::Zero(m, m);
  for (const VectorXd& g : draws) s += g * g.transpose();
  s /= b;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double se = std::sqrt((target(i, i) * target(j, j) + target(i, j) * target(i, j)) / b);
      CHECK(std::abs(s(i, j) - target(i, j)) < 4 * se);
    }
}

}  // namespace

TEST_CASE("quantiles") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.001) == doctest::Approx(-3.090232306167813).epsilon(1e-9));
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(empirical_quantile(v, 0.95) == 10);
  CHECK(empirical_quantile(v, 0.9) == 9);
  CHECK(empirical_quantile(v, 0.0) == 0);
  CHECK(empirical_quantile(v, 0.05) == 1);
}

TEST_CASE("zeta_diag") {
  CHECK(zeta_diag(3, 1.0)[0] == doctest::Approx(5.0 / 3));
  CHECK(zeta_diag(7, 0.0).cwiseAbs().maxCoeff() == 0.0);
  const MatrixXd vinv = dense_vinv(10);
  const VectorXd z = zeta_diag(10, 0.7);
  for (int i = 0; i < 19; ++i) CHECK(z[i] == doctest::Approx(9 * 0.7 * vinv(i, i)).epsilon(1e-10));

  // Heteroskedastic diagonal against the dense sandwich.
  const ModelFit f = small_fit(6, 3);
  const MatrixXd u = dense_U(6), vi = dense_vinv(6);
  const MatrixXd sandwich = 5.0 * vi * u.transpose() * f.eps.array().square().matrix().asDiagonal() * u * vi;
  const VectorXd h = zeta_diag(f, CovarianceMode::Heteroskedastic);
  for (int i = 0; i < 11; ++i) CHECK(h[i] == doctest::Approx(sandwich(i, i)).epsilon(1e-10));
  const double cv = theta_contrast_variance(f, CovarianceMode::Heteroskedastic, {{1, 1.0}, {7, -1.0}});
  CHECK(cv == doctest::Approx(sandwich(1, 1) + sandwich(7, 7) - 2 * sandwich(1, 7)).epsilon(1e-10));
}

TEST_CASE("sample_G1") {
  ModelFit f = small_fit(5, 5);
  const CovarianceModel cov{CovarianceMode::Homoskedastic, 0, 11};

  SUBCASE("zero weights give zero draws") {
    f.sigma_eps2 = 0;
    CHECK(sample_G1(f, cov, 3).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("empirical covariance") {
    std::vector<VectorXd> draws;
    for (int b = 0; b < 200000; ++b) draws.push_back(sample_G1(f, cov, b));
    check_covariance(draws, 4.0 * f.sigma_eps2 * dense_vinv(5));
  }
  SUBCASE("constant heteroskedastic weights collapse to the homoskedastic sampler") {
    f.eps.setConstant(std::sqrt(f.sigma_eps2));
    const CovarianceModel het{CovarianceMode::Heteroskedastic, 0, 11};
    for (int b : {0, 1, 77}) CHECK((sample_G1(f, cov, b) - sample_G1(f, het, b)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("draws are reproducible and seed dependent") {
    CHECK(sample_G1(f, cov, 9) == sample_G1(f, cov, 9));
    const CovarianceModel other{CovarianceMode::Homoskedastic, 0, 12};
    CHECK(sample_G1(f, cov, 9) != sample_G1(f, other, 9));
  }
}

TEST_CASE("sample_G2") {
  ModelFit f = small_fit(8, 7);
  const CovarianceModel cov{CovarianceMode::Homoskedastic, 0, 13};
  SUBCASE("zero variance") {
    f.sigma_q2 = 0;
    CHECK(sample_G2(f, cov, 0).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("empirical covariance") {
    std::vector<VectorXd> draws;
    for (int b = 0; b < 200000; ++b) draws.push_back(sample_G2(f, cov, b));
    check_covariance(draws, eta_covariance(f, CovarianceMode::Homoskedastic));
    const CovarianceModel het{CovarianceMode::Heteroskedastic, 0, 13};
    std::vector<VectorXd> hd;
    for (int b = 0; b < 200000; ++b) hd.push_back(sample_G2(f, het, b));
    check_covariance(hd, hetero_cov_components(f).eta_cov);
  }
  SUBCASE("identity design gives standard normal components") {
    f.ztdz = static_cast<double>(f.pairs()) * MatrixXd::Identity(2, 2);
    f.sigma_q2 = 1;
    CHECK((eta_covariance(f, CovarianceMode::Homoskedastic) - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-14);
    std::vector<VectorXd> draws;
    for (int b = 0; b < 50000; ++b) draws.push_back(sample_G2(f, cov, b));
    check_covariance(draws, MatrixXd::Identity(2, 2));
  }
}

TEST_CASE("confidence intervals") {
  const ModelFit f = small_fit(10, 17);
  const CovarianceModel cov{CovarianceMode::Homoskedastic, 100000, 19};
  const ContrastRow a1{{{0, 1.0}}};

  const Interval degenerate = ci_scalar(f, cov, ContrastBlock::Theta, a1, 1.0);
  CHECK(degenerate.half_width == 0.0);
  CHECK(degenerate.lower == f.alpha[0]);
  CHECK(ci_scalar(f, cov, ContrastBlock::Theta, a1, 1.0, CiMethod::ExactNormal).half_width == 0.0);

  for (const ContrastRow& row : {a1, ContrastRow{{{2, 1.0}, {11, -1.0}}}}) {
    const Interval r = ci_scalar(f, cov, ContrastBlock::Theta, row, 0.05);
    const Interval e = ci_scalar(f, cov, ContrastBlock::Theta, row, 0.05, CiMethod::ExactNormal);
    CHECK(std::abs(r.half_width / e.half_width - 1) < 0.01);
    CHECK(r.estimate == e.estimate);
    CHECK(r.lower == doctest::Approx(r.estimate - r.half_width));
  }
  const double sd = std::sqrt(9 * f.sigma_eps2 * vinv_entry(0, 0, 10) / 9);
  CHECK(ci_scalar(f, cov, ContrastBlock::Theta, a1, 0.05, CiMethod::ExactNormal).half_width ==
        doctest::Approx(1.959963984540054 * sd));

  const ContrastRow e1{{{1, 1.0}}};
  const Interval er = ci_scalar(f, cov, ContrastBlock::Eta, e1, 0.05);
  const Interval ee = ci_scalar(f, cov, ContrastBlock::Eta, e1, 0.05, CiMethod::ExactNormal);
  CHECK(std::abs(er.half_width / ee.half_width - 1) < 0.01);
  CHECK(er.estimate == f.eta[1]);

  // A batch shares draws, so each row equals its scalar interval.
  ContrastSpec spec{ContrastBlock::Theta, {a1, ContrastRow{{{4, 1.0}}}}};
  const CovarianceModel small{CovarianceMode::Homoskedastic, 500, 19};
  const std::vector<Interval> batch = ci_batch(f, small, spec, 0.1);
  CHECK(batch[1].half_width == ci_scalar(f, small, ContrastBlock::Theta, spec.rows[1], 0.1).half_width);
  CHECK_THROWS_AS(ci_scalar(f, small, ContrastBlock::Theta, ContrastRow{{{19, 1.0}}}, 0.1), Error);
  CHECK_THROWS_AS(ci_scalar(f, small, ContrastBlock::Theta, a1, 0.0), Error);
}

TEST_CASE("sparse test") {
  ModelFit f = small_fit(12, 23);
  const CovarianceModel cov{CovarianceMode::Homoskedastic, 999, 29};
  const TestReport r = test_sparse(f, cov, Which::Alpha, 0.05);
  CHECK(r.reject == (r.statistic > r.critical_value));
  CHECK(r.p_value >= 1.0 / 1000);
  CHECK(r.p_value <= 1.0);
  const double scaled = r.p_value * 1000;
  CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
  const TestReport again = test_sparse(f, cov, Which::Alpha, 0.05);
  CHECK(again.critical_value == r.critical_value);
  CHECK(again.p_value == r.p_value);

  // Homoskedastic nulls do not depend on sigma.
  const ContrastFamily fam = sparse_family(12, Which::Beta);
  const NullDistribution unit = homoskedastic_null(12, cov, fam);
  const NullDistribution own = max_null(f, cov, fam);
  for (std::size_t b = 0; b < unit.draws.size(); b += 97) CHECK(unit.draws[b] == doctest::Approx(own.draws[b]));

  f.theta.setZero();
  const TestReport zero = test_sparse(f, cov, Which::Alpha, 0.05);
  CHECK(zero.statistic == 0.0);
  CHECK_FALSE(zero.reject);
  CHECK(zero.p_value == 1.0);
}

TEST_CASE("support recovery and similarity") {
  ModelFit f = small_fit(15, 31);
  const std::vector<int> s2 = recover_support(f, 2.0, Which::Alpha);
  const std::vector<int> s3 = recover_support(f, 3.0, Which::Alpha);
  CHECK(std::includes(s2.begin(), s2.end(), s3.begin(), s3.end()));
  CHECK(s2.size() >= s3.size());
  const std::vector<int> b1 = recover_support(f, 1.0, Which::Beta);
  for (int i : b1) CHECK(i < 14);
  f.theta.setZero();
  CHECK(recover_support(f, 2.0, Which::Alpha).empty());
  CHECK_THROWS_AS(recover_support(f, 0.0, Which::Alpha), Error);

  CHECK(similarity({1, 2, 3}, {3, 2, 1}) == 1.0);
  CHECK(similarity({4, 5}, {1, 2}) == 0.0);
  CHECK(similarity({0, 1}, {0, 1, 2, 3, 4, 5, 6, 7}) == doctest::Approx(0.5));
  CHECK(similarity({}, {1}) == 0.0);
  try {
    similarity({1}, {});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyReference);
  }
}

TEST_CASE("heterogeneity tests") {
  ModelFit f = small_fit(12, 37);
  const CovarianceModel cov{CovarianceMode::Homoskedastic, 999, 41};
  std::vector<int> group(10);
  std::iota(group.begin(), group.end(), 0);

  const TestReport consecutive = test_heterogeneity(f, cov, group, 0, 0.05);
  const TestReport full = test_heterogeneity_full(f, cov, group, 0.05);
  CHECK(full.statistic >= consecutive.statistic);
  const TestReport relabeled = test_heterogeneity(f, cov, group, 3, 0.05);
  CHECK(relabeled.statistic >= consecutive.statistic);
  CHECK(relabeled.m_tilde == 3);

  const std::vector<int> pair{2, 5};
  CHECK(test_heterogeneity(f, cov, pair, 0, 0.05).statistic ==
        doctest::Approx(test_heterogeneity_full(f, cov, pair, 0.05).statistic));

  ModelFit shifted = f;
  shifted.theta.head(12).array() += 2.5;
  CHECK(test_heterogeneity(shifted, cov, group, 2, 0.05).statistic ==
        doctest::Approx(test_heterogeneity(f, cov, group, 2, 0.05).statistic));

  ModelFit flat = f;
  flat.theta.head(12).setConstant(0.4);
  CHECK(test_heterogeneity(flat, cov, group, 2, 0.05).statistic == doctest::Approx(0.0));
  CHECK(test_heterogeneity_full(flat, cov, group, 0.05).statistic == doctest::Approx(0.0));

  try {
    test_heterogeneity(f, cov, {3}, 0, 0.05);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GroupTooSmall);
  }
  CHECK(test_heterogeneity(f, cov, {0, 4, 6}, 1, 0.05, Which::Beta).statistic >= 0);
  CHECK_THROWS_AS(test_heterogeneity(f, cov, {0, 11}, 1, 0.05, Which::Beta), Error);
}

TEST_CASE("relabelings") {
  const std::vector<int> g{4, 7, 9};
  const auto r = relabelings(g, 10, 5);
  CHECK(r.front() == g);
  CHECK(r.size() == 6);  // original plus the 5 other orderings
  std::set<std::vector<int>> distinct(r.begin(), r.end());
  CHECK(distinct.size() == r.size());
  CHECK(relabelings(g, 0, 5).size() == 1);
  std::vector<int> big(20);
  std::iota(big.begin(), big.end(), 0);
  const auto rb = relabelings(big, 4, 5);
  CHECK(rb.size() == 5);
  CHECK(rb == relabelings(big, 4, 5));
  for (auto p : rb) {
    std::sort(p.begin(), p.end());
    CHECK(p == big);
  }
}
