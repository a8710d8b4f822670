#include "dyadnet/network.hpp"

#include <cmath>
#include <numeric>

#include "dyadnet/error.hpp"

namespace dyadnet {

void DirectedNetwork::validate(bool binary) const {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "network needs at least 3 nodes");
  const Eigen::Index N = pairs();
  if (a.size() != N || x1.size() != N || z.rows() != N)
    throw Error(ErrorCode::DimensionMismatch, "pair arrays must have n(n-1) rows");
  if (static_cast<Eigen::Index>(discrete.size()) != z.cols())
    throw Error(ErrorCode::DimensionMismatch, "discrete mask length differs from Z columns");
  if (!z_names.empty() && static_cast<Eigen::Index>(z_names.size()) != z.cols())
    throw Error(ErrorCode::DimensionMismatch, "Z names length");
  if (!labels.empty() && static_cast<int>(labels.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "label count");
  if (!a.allFinite() || !x1.allFinite() || !z.allFinite())
    throw Error(ErrorCode::ParseError, "non-finite values in network data");
  if (binary)
    for (Eigen::Index r = 0; r < N; ++r)
      if (a[r] != 0.0 && a[r] != 1.0) throw Error(ErrorCode::InvalidArgument, "adjacency is not binary");
}

std::vector<int> isolated_nodes(const DirectedNetwork& net, double baseline) {
  const PairIndexing idx = net.indexing();
  std::vector<int> out_deg(net.n, 0), in_deg(net.n, 0);
  for (Eigen::Index r = 0; r < net.pairs(); ++r)
    if (net.a[r] > baseline) {
      const auto [i, j] = idx.pair_of(r);
      ++out_deg[i];
      ++in_deg[j];
    }
  std::vector<int> iso;
  for (int i = 0; i < net.n; ++i)
    if (out_deg[i] == 0 || in_deg[i] == 0) iso.push_back(i);
  return iso;
}

DirectedNetwork subnetwork(const DirectedNetwork& net, const std::vector<int>& nodes) {
  const int m = static_cast<int>(nodes.size());
  if (m < 3) throw Error(ErrorCode::IsolatedNodes, "fewer than 3 nodes remain");
  const PairIndexing src = net.indexing();
  const PairIndexing dst(m);
  DirectedNetwork out;
  out.n = m;
  out.x1_name = net.x1_name;
  out.z_names = net.z_names;
  out.discrete = net.discrete;
  out.a.resize(dst.rows());
  out.x1.resize(dst.rows());
  out.z.resize(dst.rows(), net.z.cols());
  for (int u = 0; u < m; ++u) {
    if (!net.labels.empty()) out.labels.push_back(net.labels[nodes[u]]);
    for (int v = 0; v < m; ++v) {
      if (u == v) continue;
      const Eigen::Index rs = src.row_of(nodes[u], nodes[v]);
      const Eigen::Index rd = dst.row_unchecked(u, v);
      out.a[rd] = net.a[rs];
      out.x1[rd] = net.x1[rs];
      out.z.row(rd) = net.z.row(rs);
    }
  }
  return out;
}

DirectedNetwork drop_isolated(const DirectedNetwork& net, std::vector<int>& kept, double baseline) {
  kept.resize(net.n);
  std::iota(kept.begin(), kept.end(), 0);
  DirectedNetwork cur = net;
  for (;;) {
    const std::vector<int> iso = isolated_nodes(cur, baseline);
    if (iso.empty()) return cur;
    std::vector<int> keep_local, keep_orig;
    std::size_t k = 0;
    for (int i = 0; i < cur.n; ++i) {
      if (k < iso.size() && iso[k] == i) {
        ++k;
        continue;
      }
      keep_local.push_back(i);
      keep_orig.push_back(kept[i]);
    }
    cur = subnetwork(cur, keep_local);
    kept = keep_orig;
  }
}

void standardize_continuous(DirectedNetwork& net) {
  for (Eigen::Index c = 0; c < net.z.cols(); ++c) {
    if (net.discrete[c]) continue;
    const double mean = net.z.col(c).mean();
    const double var = (net.z.col(c).array() - mean).square().sum() /
                       static_cast<double>(std::max<Eigen::Index>(1, net.z.rows() - 1));
    const double sd = std::sqrt(var);
    net.z.col(c).array() -= mean;
    if (sd > 0) net.z.col(c) /= sd;
  }
}

}  // namespace dyadnet
