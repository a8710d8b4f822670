#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dyadnet/estimator.hpp"

namespace dyadnet {

enum class CovarianceMode { Homoskedastic, Heteroskedastic };

struct CovarianceModel {
  CovarianceMode mode = CovarianceMode::Homoskedastic;
  int draws = 10000;
  std::uint64_t seed = 0;
};

// Independent engine for (seed, stream tag, draw index).
std::mt19937_64 draw_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

namespace streams {
constexpr std::uint64_t kTheta = 1;
constexpr std::uint64_t kEta = 2;
constexpr std::uint64_t kRelabel = 3;
constexpr std::uint64_t kWeightedTheta = 5;
constexpr std::uint64_t kWeightedXi = 6;
}  // namespace streams

double normal_quantile(double p);

// Lower-tail empirical quantile of sorted draws: the ceil(prob * B)-th order
// statistic, or 0 when that rank is 0.
double empirical_quantile(const std::vector<double>& sorted, double prob);

// sqrt(n-1) V^{-1} U'(w .* xi), xi iid N(0,1) from the (seed, stream, b) engine.
VectorXd sample_theta_draw(const PairIndexing& idx, const VectorXd& weights, std::uint64_t seed,
                           std::uint64_t stream, int b);

// Per-pair weights of the theta sampler under the covariance model.
VectorXd theta_weights(const ModelFit& fit, CovarianceMode mode);
// Covariance of the eta sampler.
MatrixXd eta_covariance(const ModelFit& fit, CovarianceMode mode);
// Symmetric square root factor L with L L' = cov (eigenvalues clamped at 0).
MatrixXd psd_factor(const MatrixXd& cov);

VectorXd sample_G1(const ModelFit& fit, const CovarianceModel& cov, int b);
VectorXd sample_G2(const ModelFit& fit, const CovarianceModel& cov, int b);

// Diagonal of (n-1) sigma^2 V^{-1}, or of the sandwich in heteroskedastic mode.
VectorXd zeta_diag(const ModelFit& fit, CovarianceMode mode = CovarianceMode::Homoskedastic);
VectorXd zeta_diag(int n, double sigma2);

// Variance of c'G1 for a sparse theta contrast.
double theta_contrast_variance(const ModelFit& fit, CovarianceMode mode,
                               const std::vector<std::pair<int, double>>& terms);

enum class ContrastBlock { Theta, Eta };
enum class CiMethod { Resampled, ExactNormal };

struct ContrastRow {
  std::vector<std::pair<int, double>> terms;  // (column, weight)
};

struct ContrastSpec {
  ContrastBlock block = ContrastBlock::Theta;
  std::vector<ContrastRow> rows;
};

struct Interval {
  double estimate = 0;
  double lower = 0;
  double upper = 0;
  double half_width = 0;
};

Interval ci_scalar(const ModelFit& fit, const CovarianceModel& cov, ContrastBlock block,
                   const ContrastRow& row, double level, CiMethod method = CiMethod::Resampled);
// All rows share one set of draws.
std::vector<Interval> ci_batch(const ModelFit& fit, const CovarianceModel& cov, const ContrastSpec& spec,
                               double level, CiMethod method = CiMethod::Resampled);

struct TestReport {
  double statistic = 0;
  double critical_value = 0;
  double p_value = 1;
  bool reject = false;
  int draws = 0;
  std::uint64_t seed = 0;
  int m_tilde = 0;
  double level = 0.05;
  std::string contrast;
};

// Max of standardized theta contrasts: theta_first - theta_second, with
// second = -1 meaning a single coordinate.
struct ContrastFamily {
  std::vector<int> first;
  std::vector<int> second;
  std::string description;
  int m_tilde = 0;
};

// Sorted draws of the max functional. In homoskedastic mode the draws do not
// depend on sigma, so a null built for one fit serves any fit with the same n,
// seed and family.
struct NullDistribution {
  std::vector<double> draws;
  std::uint64_t seed = 0;
  double critical_value(double level) const;
  double p_value(double statistic) const;
};

enum class Which { Alpha, Beta };

ContrastFamily sparse_family(int n, Which which);
// Original ordering plus m_tilde relabelings of the group, consecutive pairs.
ContrastFamily heterogeneity_family(int n, const std::vector<int>& group, int m_tilde, Which which,
                                    std::uint64_t seed);
ContrastFamily heterogeneity_full_family(int n, const std::vector<int>& group, Which which);
std::vector<std::vector<int>> relabelings(const std::vector<int>& group, int m_tilde, std::uint64_t seed);

NullDistribution max_null(const ModelFit& fit, const CovarianceModel& cov, const ContrastFamily& fam);
// Homoskedastic null for n nodes built with unit noise scale.
NullDistribution homoskedastic_null(int n, const CovarianceModel& cov, const ContrastFamily& fam);
double max_statistic(const ModelFit& fit, CovarianceMode mode, const ContrastFamily& fam);
TestReport max_test(const ModelFit& fit, const CovarianceModel& cov, const ContrastFamily& fam,
                    double level, const NullDistribution* null = nullptr);

TestReport test_sparse(const ModelFit& fit, const CovarianceModel& cov, Which which, double level);
TestReport test_heterogeneity(const ModelFit& fit, const CovarianceModel& cov,
                              const std::vector<int>& group, int m_tilde, double level,
                              Which which = Which::Alpha);
TestReport test_heterogeneity_full(const ModelFit& fit, const CovarianceModel& cov,
                                   const std::vector<int>& group, double level,
                                   Which which = Which::Alpha);

// Node ids i with |theta_i| > sqrt(t zeta_i log(m) / (n-1)), m = n for alpha
// and n-1 for beta.
std::vector<int> recover_support(const ModelFit& fit, double t, Which which,
                                 CovarianceMode mode = CovarianceMode::Homoskedastic);
double similarity(const std::vector<int>& s_hat, const std::vector<int>& s0);

}  // namespace dyadnet
