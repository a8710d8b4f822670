#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dyadnet/design_algebra.hpp"

namespace dyadnet {

// Pair-indexed directed network. Rows follow PairIndexing order.
struct DirectedNetwork {
  int n = 0;
  std::vector<std::string> labels;  // external node ids, size n
  VectorXd a;                       // adjacency (binary or level values)
  VectorXd x1;                      // special regressor
  MatrixXd z;                       // remaining pairwise covariates
  std::string x1_name = "x1";
  std::vector<std::string> z_names;
  std::vector<bool> discrete;       // per Z column

  PairIndexing indexing() const { return PairIndexing(n); }
  Eigen::Index pairs() const { return static_cast<Eigen::Index>(n) * (n - 1); }

  // Shapes, finiteness, and (when binary) A in {0, 1}.
  void validate(bool binary) const;
};

// Nodes whose out- or in-degree is zero, counting A > baseline as an edge.
std::vector<int> isolated_nodes(const DirectedNetwork& net, double baseline = 0.0);

// Restrict to a node subset (kept in the given order).
DirectedNetwork subnetwork(const DirectedNetwork& net, const std::vector<int>& nodes);

// Repeatedly removes isolated nodes; kept receives the surviving original ids.
DirectedNetwork drop_isolated(const DirectedNetwork& net, std::vector<int>& kept,
                              double baseline = 0.0);

// Centers and scales the continuous Z columns (the special regressor is left alone).
void standardize_continuous(DirectedNetwork& net);

}  // namespace dyadnet
