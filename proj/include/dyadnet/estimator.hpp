#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "dyadnet/design_algebra.hpp"
#include "dyadnet/kernel_smoothing.hpp"
#include "dyadnet/network.hpp"

namespace dyadnet {

struct FitOptions {
  std::optional<int> sign;            // +1/-1 overrides sign detection
  int sign_bins = 7;
  double tau_min = 0.5;
  std::optional<double> bandwidth;    // skips bandwidth selection
  BandwidthGrid grid;
  KernelFamily kernel = KernelFamily::Biweight2;
  double m_floor = 1e-3;
  double c4_threshold = 1e-8;         // minimum eigenvalue of Z'DZ/N
  bool drop_isolated = false;
  bool keep_isolated = false;        // fit nodes with zero in- or out-degree as they are
  bool standardize = false;
};

struct SignDetermination {
  int sign = 1;
  double tau = 0;
  std::vector<double> counts;
};

// Kendall tau-b between the bin index and the counts.
double kendall_tau(const std::vector<double>& counts);
SignDetermination sign_from_counts(const std::vector<double>& counts, double tau_min);
SignDetermination determine_sign(const VectorXd& a, const VectorXd& x1, int bins, double tau_min);

struct TransformedResponse {
  VectorXd yhat;
  VectorXd fhat;
};

// yhat = (A - I(s * x1 > 0)) / fhat.
TransformedResponse transform_y(const VectorXd& a, const VectorXd& x1, const VectorXd& fhat, int sign);

VectorXd estimate_eta(const MatrixXd& z, const VectorXd& yhat, const GramSummary& g,
                      double c4_threshold = 0.0);
VectorXd estimate_theta(const VectorXd& yhat, const MatrixXd& z, const VectorXd& eta,
                        const GramSummary& g);

double sigma_eps2(const VectorXd& residuals);
double sigma_q2(const VectorXd& yhat, const VectorXd& fitted_mean);

struct ModelFit {
  std::shared_ptr<const DirectedNetwork> data;  // the network actually fitted
  std::vector<int> kept_nodes;                  // input node index of each fitted node
  std::shared_ptr<const GramSummary> gram;
  VectorXd theta;  // (alpha_1..alpha_n, beta_1..beta_{n-1})
  VectorXd alpha;  // n
  VectorXd beta;   // n, last entry 0
  VectorXd eta;    // p
  int sign = 1;
  double sign_tau = 0;
  double bandwidth = 0;
  std::optional<BandwidthSelection> selection;
  VectorXd yhat, fhat;
  VectorXd eps;     // yhat - U theta - Z eta
  VectorXd q;       // yhat - NW mean of yhat
  double sigma_eps2 = 0;
  double sigma_q2 = 0;
  double c4 = 0;
  MatrixXd ztdz;    // Z'DZ

  int n() const { return data->n; }
  Eigen::Index pairs() const { return data->pairs(); }
};

ModelFit fit(const DirectedNetwork& net, const FitOptions& options);

// Pipeline stages shared with the weighted fit.
struct PreparedNetwork {
  std::shared_ptr<DirectedNetwork> net;
  std::vector<int> kept;
};
// Validation, isolated-node handling (edges are A > baseline), standardization.
PreparedNetwork prepare_network(const DirectedNetwork& input, const FitOptions& options, bool binary,
                                double baseline);

struct DensityStage {
  int sign = 1;
  double tau = 0;
  double bandwidth = 0;
  std::optional<BandwidthSelection> selection;
  VectorXd fhat;
};
// Sign (from edge_weight counts unless overridden), bandwidth, and the NW
// density of s * x1 at every pair.
DensityStage estimate_density(const DirectedNetwork& net, const VectorXd& edge_weight,
                              const FitOptions& options);
// NW mean of values at every pair, conditioning on (s * x1, Z).
VectorXd nw_fitted_mean(const DirectedNetwork& net, int sign, double h, const VectorXd& values,
                        const FitOptions& options);

// Runs the pipeline with a supplied density (e.g. the true one); the bandwidth
// is used only for the Q residuals, which are skipped when it is absent.
ModelFit fit_given_density(const DirectedNetwork& net, const VectorXd& fhat, int sign,
                           std::optional<double> q_bandwidth, const FitOptions& options);

// Factors for the heteroskedastic covariances.
struct HeteroComponents {
  VectorXd eps_weights;  // per-pair weights of the theta sampler
  VectorXd q_weights;    // per-pair weights of the eta sampler
  MatrixXd ztdz;         // Z'DZ
  MatrixXd meat;         // Z'D diag(q^2) DZ
  MatrixXd eta_cov;      // N (Z'DZ)^{-1} meat (Z'DZ)^{-1}
};

HeteroComponents hetero_cov_components(const ModelFit& fit);

}  // namespace dyadnet
