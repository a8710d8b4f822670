#include "dyadnet/design_algebra.hpp"

#include <string>
#include <vector>

#include "dyadnet/error.hpp"

namespace dyadnet {

namespace {

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

// Values of V^{-1} by index class.
struct VinvClasses {
  double aa_diag, aa_off, an, nn, a_own_b, nb, ab_cross, bb_diag, bb_off;
  explicit VinvClasses(int n) {
    const double d = n;
    aa_diag = (2 * d - 1) / (d * (d - 1));
    aa_off = (d * d - 3 * d + 1) / (d * (d - 1) * (d - 2));
    an = 1 / (d - 1);
    nn = (2 * d - 3) / ((d - 1) * (d - 2));
    a_own_b = -1 / d;
    nb = -1 / (d - 2);
    ab_cross = -(d - 1) / (d * (d - 2));
    bb_diag = 2 * (d - 1) / (d * (d - 2));
    bb_off = (d - 1) / (d * (d - 2));
  }
};

}  // namespace

PairIndexing::PairIndexing(int n) : n_(n) {
  require(n >= 3, ErrorCode::InvalidArgument, "need at least 3 nodes, got " + std::to_string(n));
}

Eigen::Index PairIndexing::row_of(int i, int j) const {
  require(i >= 0 && i < n_ && j >= 0 && j < n_, ErrorCode::NodeOutOfRange,
          "pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
  require(i != j, ErrorCode::IdentityPair, "node " + std::to_string(i));
  return row_unchecked(i, j);
}

std::pair<int, int> PairIndexing::pair_of(Eigen::Index row) const {
  require(row >= 0 && row < rows(), ErrorCode::IndexOutOfRange, "row " + std::to_string(row));
  const int i = static_cast<int>(row / (n_ - 1));
  const int k = static_cast<int>(row % (n_ - 1));
  return {i, receiver_unchecked(i, k)};
}

VectorXd apply_U(const PairIndexing& idx, const VectorXd& theta) {
  require(theta.size() == idx.params(), ErrorCode::DimensionMismatch, "theta length");
  const int n = idx.nodes();
  VectorXd out(idx.rows());
  Eigen::Index r = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      out[r++] = theta[i] + (j == n - 1 ? 0.0 : theta[n + j]);
    }
  return out;
}

VectorXd apply_Ut(const PairIndexing& idx, const VectorXd& v) {
  require(v.size() == idx.rows(), ErrorCode::DimensionMismatch, "pair vector length");
  const int n = idx.nodes();
  std::vector<CompensatedSum> col(n);
  VectorXd out(idx.params());
  Eigen::Index r = 0;
  for (int i = 0; i < n; ++i) {
    CompensatedSum row;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      row.add(v[r]);
      col[j].add(v[r]);
      ++r;
    }
    out[i] = row.value();
  }
  for (int j = 0; j + 1 < n; ++j) out[n + j] = col[j].value();
  return out;
}

double vinv_entry(int i, int j, int n) {
  require(n >= 3, ErrorCode::InvalidArgument, "n < 3");
  const int m = 2 * n - 1;
  require(i >= 0 && i < m && j >= 0 && j < m, ErrorCode::IndexOutOfRange, "V^{-1} index");
  if (i > j) std::swap(i, j);
  const VinvClasses c(n);
  const int last = n - 1;
  const bool ia = i < last, ja = j < last;
  const bool ib = i >= n, jb = j >= n;
  if (ia && ja) return i == j ? c.aa_diag : c.aa_off;
  if (ia && j == last) return c.an;
  if (i == last && j == last) return c.nn;
  if (ia && jb) return (j - n == i) ? c.a_own_b : c.ab_cross;
  if (i == last && jb) return c.nb;
  if (ib && jb) return i == j ? c.bb_diag : c.bb_off;
  return 0.0;  // unreachable
}

VectorXd apply_Vinv(int n, const VectorXd& w) {
  require(w.size() == 2 * n - 1, ErrorCode::DimensionMismatch, "V^{-1} argument length");
  const VinvClasses c(n);
  const int last = n - 1;
  CompensatedSum sa, sb;
  for (int i = 0; i < last; ++i) sa.add(w[i]);
  for (int j = 0; j < last; ++j) sb.add(w[n + j]);
  const double SA = sa.value(), SB = sb.value(), wn = w[last];
  VectorXd out(2 * n - 1);
  for (int i = 0; i < last; ++i) {
    const double wa = w[i], wb = w[n + i];
    out[i] = c.aa_diag * wa + c.aa_off * (SA - wa) + c.an * wn + c.a_own_b * wb +
             c.ab_cross * (SB - wb);
    out[n + i] = c.a_own_b * wa + c.ab_cross * (SA - wa) + c.nb * wn + c.bb_diag * wb +
                 c.bb_off * (SB - wb);
  }
  out[last] = c.an * SA + c.nn * wn + c.nb * SB;
  return out;
}

MatrixXd apply_Vinv(int n, const MatrixXd& w) {
  MatrixXd out(w.rows(), w.cols());
  for (Eigen::Index c = 0; c < w.cols(); ++c) out.col(c) = apply_Vinv(n, VectorXd(w.col(c)));
  return out;
}

GramSummary::GramSummary(const PairIndexing& idx, const MatrixXd& z) : idx_(idx) {
  require(z.rows() == idx.rows(), ErrorCode::DimensionMismatch, "Z rows");
  const Eigen::Index p = z.cols();
  utz_.resize(idx.params(), p);
  ztz_.resize(p, p);
  for (Eigen::Index c = 0; c < p; ++c) utz_.col(c) = apply_Ut(idx, VectorXd(z.col(c)));
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = a; b < p; ++b) {
      CompensatedSum s;
      for (Eigen::Index r = 0; r < z.rows(); ++r) s.add(z(r, a) * z(r, b));
      ztz_(a, b) = ztz_(b, a) = s.value();
    }
  vinv_utz_ = apply_Vinv(idx.nodes(), utz_);
}

MatrixXd ztdz(const MatrixXd& z, const GramSummary& g) {
  require(z.cols() == g.covariates() && z.rows() == g.indexing().rows(),
          ErrorCode::DimensionMismatch, "Z shape");
  MatrixXd out = g.ztz() - g.utz().transpose() * g.vinv_utz();
  return 0.5 * (out + out.transpose());
}

VectorXd ztd_vec(const MatrixXd& z, const VectorXd& v, const GramSummary& g) {
  require(z.cols() == g.covariates() && z.rows() == g.indexing().rows() && v.size() == z.rows(),
          ErrorCode::DimensionMismatch, "Z or v shape");
  const VectorXd utv = apply_Ut(g.indexing(), v);
  VectorXd out(z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    CompensatedSum s;
    for (Eigen::Index r = 0; r < z.rows(); ++r) s.add(z(r, c) * v[r]);
    out[c] = s.value();
  }
  return out - g.vinv_utz().transpose() * utv;
}

void dz_row(const MatrixXd& z, const GramSummary& g, Eigen::Index r, double* out) {
  const PairIndexing& idx = g.indexing();
  const auto [i, j] = idx.pair_of(r);
  const int bc = idx.beta_column(j);
  const MatrixXd& m = g.vinv_utz();
  for (Eigen::Index c = 0; c < z.cols(); ++c)
    out[c] = z(r, c) - m(i, c) - (bc >= 0 ? m(bc, c) : 0.0);
}

MatrixXd ztdwdz(const MatrixXd& z, const VectorXd& w, const GramSummary& g) {
  require(w.size() == z.rows(), ErrorCode::DimensionMismatch, "weight length");
  const Eigen::Index p = z.cols();
  const PairIndexing& idx = g.indexing();
  const MatrixXd& m = g.vinv_utz();
  const int n = idx.nodes();
  std::vector<CompensatedSum> acc(p * p);
  std::vector<double> row(p);
  Eigen::Index r = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const int bc = idx.beta_column(j);
      for (Eigen::Index c = 0; c < p; ++c)
        row[c] = z(r, c) - m(i, c) - (bc >= 0 ? m(bc, c) : 0.0);
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = a; b < p; ++b) acc[a * p + b].add(w[r] * row[a] * row[b]);
      ++r;
    }
  MatrixXd out(p, p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = a; b < p; ++b) out(a, b) = out(b, a) = acc[a * p + b].value();
  return out;
}

double c4_diagnostic(const MatrixXd& z, const GramSummary& g) {
  const MatrixXd m = ztdz(z, g) / static_cast<double>(z.rows());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace dyadnet
