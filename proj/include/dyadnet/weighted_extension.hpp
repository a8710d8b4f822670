#pragma once

#include <memory>
#include <vector>

#include "dyadnet/estimator.hpp"
#include "dyadnet/inference.hpp"

namespace dyadnet {

// Gram of the degree design with alpha_n and beta_n both dropped,
// [[(n-1) I, J - I], [J - I, (n-1) I]] with blocks of size n-1.
double reduced_vinv_entry(int i, int j, int n);
VectorXd apply_reduced_Vinv(int n, const VectorXd& w);
VectorXd apply_reduced_U(const PairIndexing& idx, const VectorXd& theta);
VectorXd apply_reduced_Ut(const PairIndexing& idx, const VectorXd& v);

// Y_l = (I(A >= pi_l) - I(s x1 > 0)) / fhat for l = 1..R-1 (1-based level).
VectorXd transform_y_weighted(const VectorXd& a, const VectorXd& x1, const VectorXd& fhat, int sign,
                              const std::vector<double>& levels, int level);

// Checks that every A value is a declared level and that no level is empty.
void validate_levels(const VectorXd& a, const std::vector<double>& levels);
// Distinct values of A in ascending order.
std::vector<double> infer_levels(const VectorXd& a);

struct WeightedModelFit {
  std::shared_ptr<const DirectedNetwork> data;
  std::vector<int> kept_nodes;
  std::shared_ptr<const GramSummary> gram;
  std::vector<double> levels;
  VectorXd alpha;   // n, last entry 0
  VectorXd beta;    // n, last entry 0
  VectorXd eta;     // p
  VectorXd omega;   // R-1
  // Binary-layout coefficients of the level-averaged response; alpha and
  // omega follow from them by moving alpha_n into the common threshold.
  VectorXd theta_avg;
  int sign = 1;
  double bandwidth = 0;
  VectorXd fhat;
  MatrixXd yhat;        // N x (R-1)
  VectorXd residual;    // level-averaged residual
  double sigma_weps2 = 0;
  VectorXd sigma_wq2;   // per level
  MatrixXd q;           // N x (R-1) residuals against the NW mean, per level
  MatrixXd ztdz;        // Z'DZ of the binary design

  int n() const { return data->n; }
  int thresholds() const { return static_cast<int>(levels.size()) - 1; }
};

WeightedModelFit fit_weighted(const DirectedNetwork& net, const std::vector<double>& levels,
                              const FitOptions& options);
WeightedModelFit fit_weighted_given_density(const DirectedNetwork& net, const std::vector<double>& levels,
                                            const VectorXd& fhat, int sign,
                                            std::optional<double> q_bandwidth, const FitOptions& options);

// Meat of the (omega, eta) sandwich. LevelDiagonal uses Omega = diag of the
// per-level variances; PairClustered keeps the covariance of the level
// residuals within a pair, which share fhat and I(s x1 > 0).
enum class XiMeat { LevelDiagonal, PairClustered };

// Covariance of (omega, eta): N (Zs'D Zs)^{-1} Zs'D Omega D Zs (Zs'D Zs)^{-1},
// where Zs stacks the level indicators and Z and D projects out the reduced
// degree design.
MatrixXd weighted_xi_covariance(const WeightedModelFit& fit, XiMeat meat = XiMeat::LevelDiagonal);

// One draw of the degree sampler in the binary layout of the averaged model.
VectorXd sample_G5(const WeightedModelFit& fit, const CovarianceModel& cov, int b);
VectorXd sample_G6(const WeightedModelFit& fit, const CovarianceModel& cov, int b,
                   XiMeat meat = XiMeat::LevelDiagonal);

enum class OmegaInterval { Degree, Sandwich };

struct WeightedIntervals {
  std::vector<Interval> alpha;  // nodes 0..n-2
  std::vector<Interval> beta;   // nodes 0..n-2
  std::vector<Interval> omega;  // levels 1..R-1
  std::vector<Interval> eta;
};

WeightedIntervals weighted_inference(const WeightedModelFit& fit, const CovarianceModel& cov, double level,
                                     OmegaInterval omega_method = OmegaInterval::Degree,
                                     XiMeat meat = XiMeat::LevelDiagonal);

}  // namespace dyadnet
