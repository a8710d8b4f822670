#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dyadnet/estimator.hpp"
#include "dyadnet/inference.hpp"
#include "dyadnet/network.hpp"
#include "dyadnet/weighted_extension.hpp"

namespace dyadnet {

enum class NoiseKind { Normal, Logistic, Mixture, UniformHetero, Constant };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Normal;
  double variance = 1.0;              // Normal
  double scale = 0.5;                 // Logistic
  std::vector<double> weights, means, variances;  // Mixture (variances, not SDs)
  double value = 0.0;                 // Constant

  static NoiseSpec normal(double variance);
  static NoiseSpec logistic(double scale);
  static NoiseSpec mixture(std::vector<double> w, std::vector<double> mu, std::vector<double> var);
  static NoiseSpec mnorm1();
  static NoiseSpec mnorm2();
  static NoiseSpec uniform_hetero();
  static NoiseSpec constant(double v);

  void validate() const;
  std::string name() const;
};

// Covariate-conditional noise needs the pair's Z row; z may be null otherwise.
VectorXd draw_noise(const NoiseSpec& spec, const MatrixXd* z, Eigen::Index count, std::mt19937_64& eng);

enum class ScheduleKind { Consistency, Sparse, Support, Heterogeneity, Weighted };

struct Schedule {
  VectorXd alpha;  // n
  VectorXd beta;   // n, last entry 0
};

// knob: rho1, rho2, ignored, rho3, or the common value of the weighted schedule.
Schedule param_schedule(ScheduleKind kind, int n, double knob);
// Noise scale of each design: sd 1 for consistency and weighted, 0.5 for the others.
double design_noise_sd(ScheduleKind kind);

struct DgpSpec {
  int n = 50;
  NoiseSpec noise = NoiseSpec::normal(1.0);
  ScheduleKind schedule = ScheduleKind::Consistency;
  double knob = 0.0;
  double z_correlation = 0.25;
  Eigen::Vector2d b{0.5, -0.5};
  Eigen::Vector2d eta{-0.5, 0.5};
  std::vector<double> omega;   // weighted thresholds omega_1..omega_{R-1}
  std::vector<double> levels;  // weighted level values pi_0..pi_{R-1}
  std::uint64_t seed = 1;

  // Supplementary weighted design: R = 7, pi_l = l, omega_l = 0.25 (l - 1).
  static DgpSpec weighted_default(int n, NoiseSpec noise, std::uint64_t seed);
};

struct Truth {
  VectorXd alpha, beta, eta;
  VectorXd omega;            // weighted only
  std::vector<double> levels;
  VectorXd density;          // true density of x1 given Z at each pair
};

struct SimulatedNetwork {
  DirectedNetwork net;
  Truth truth;
};

double true_density(double x1, double z1, double z2, const DgpSpec& spec);
// Draws covariates, noise and adjacency from the stream of spec.seed.
SimulatedNetwork generate_network(const DgpSpec& spec);

// Monte-Carlo studies.
enum class StudyKind { Consistency, Sparse, Support, Heterogeneity, Weighted };

struct StudyConfig {
  StudyKind kind = StudyKind::Consistency;
  DgpSpec dgp;
  int reps = 100;
  std::uint64_t master_seed = 1;
  FitOptions fit = [] {
    FitOptions o;
    o.keep_isolated = true;
    return o;
  }();
  CovarianceModel cov;        // draws and seed for inference
  double level = 0.05;
  CiMethod ci_method = CiMethod::Resampled;
  std::vector<int> m_tilde{0};        // heterogeneity study
  std::vector<double> thresholds{2};  // support study
  bool reuse_null = true;             // homoskedastic nulls are sigma-free
  bool oracle_density = false;        // use the true density instead of NW
  OmegaInterval omega_interval = OmegaInterval::Degree;  // weighted study
  XiMeat xi_meat = XiMeat::LevelDiagonal;                // weighted study
};

struct TargetSummary {
  std::string name;
  double truth = 0;
  double bias = 0;
  double sd = 0;
  double cp = 0;  // percent
  int count = 0;
};

struct RateSummary {
  std::string name;
  double rate = 0;
  int count = 0;
};

struct SupportSummary {
  std::string name;
  double t = 0;
  double mean_similarity = 0, sd_similarity = 0;
  double mean_fp = 0, mean_fn = 0;
  double exact_rate = 0;
  int count = 0;
};

struct McReport {
  StudyKind kind = StudyKind::Consistency;
  int reps = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<TargetSummary> targets;
  std::vector<RateSummary> rates;
  std::vector<SupportSummary> support;
  double mean_bandwidth = 0;
  double mean_density = 0;  // edge density
  double wall_seconds = 0;
};

// Replication r uses the DGP seed derived from (master seed, r).
std::uint64_t replication_seed(std::uint64_t master, int r);
McReport run_mc(const StudyConfig& config);

const char* to_string(StudyKind kind);
const char* to_string(ScheduleKind kind);

}  // namespace dyadnet
