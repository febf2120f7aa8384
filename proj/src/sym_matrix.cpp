#include "mdr/sym_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "mdr/errors.hpp"

namespace mdr {

SymMatrix SymMatrix::from_dense(const MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw ValidationError("SymMatrix: square matrix with dim >= 1 required");
  if (!a.allFinite()) throw ValidationError("SymMatrix: non-finite entries");
  SymMatrix s;
  s.dim_ = a.rows();
  s.dense_ = true;
  s.mat_ = 0.5 * (a + a.transpose());
  return s;
}

SymMatrix SymMatrix::from_triplets(Index dim, std::vector<Triplet> entries) {
  if (dim < 1) throw ValidationError("SymMatrix: dim >= 1 required");
  SymMatrix s;
  s.dim_ = dim;
  s.dense_ = false;
  for (auto& t : entries) {
    if (t.row < 0 || t.col < 0 || t.row >= dim || t.col >= dim)
      throw ValidationError("SymMatrix: triplet index out of range");
    if (!std::isfinite(t.value)) throw ValidationError("SymMatrix: non-finite entry");
    if (t.row > t.col) std::swap(t.row, t.col);
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  // merge duplicates
  for (const auto& t : entries) {
    if (!s.upper_.empty() && s.upper_.back().row == t.row && s.upper_.back().col == t.col)
      s.upper_.back().value += t.value;
    else
      s.upper_.push_back(t);
  }
  s.build_csr();
  return s;
}

void SymMatrix::build_csr() {
  csr_.dim = dim_;
  std::vector<Index> count(dim_, 0);
  for (const auto& t : upper_) {
    ++count[t.row];
    if (t.row != t.col) ++count[t.col];
  }
  csr_.row_ptr.assign(dim_ + 1, 0);
  for (Index i = 0; i < dim_; ++i) csr_.row_ptr[i + 1] = csr_.row_ptr[i] + count[i];
  csr_.col.resize(csr_.row_ptr[dim_]);
  csr_.val.resize(csr_.row_ptr[dim_]);
  std::vector<Index> pos(csr_.row_ptr.begin(), csr_.row_ptr.end() - 1);
  for (const auto& t : upper_) {
    csr_.col[pos[t.row]] = t.col;
    csr_.val[pos[t.row]++] = t.value;
    if (t.row != t.col) {
      csr_.col[pos[t.col]] = t.row;
      csr_.val[pos[t.col]++] = t.value;
    }
  }
  // column indices sorted within each row for deterministic accumulation
  for (Index i = 0; i < dim_; ++i) {
    const Index b = csr_.row_ptr[i], e = csr_.row_ptr[i + 1];
    std::vector<std::pair<Index, double>> row(e - b);
    for (Index k = b; k < e; ++k) row[k - b] = {csr_.col[k], csr_.val[k]};
    std::sort(row.begin(), row.end());
    for (Index k = b; k < e; ++k) {
      csr_.col[k] = row[k - b].first;
      csr_.val[k] = row[k - b].second;
    }
  }
}

Index SymMatrix::nnz() const {
  if (dense_) return (mat_.array() != 0.0).count();
  Index n = 0;
  for (const auto& t : upper_) n += (t.row == t.col) ? 1 : 2;
  return n;
}

MatrixXd SymMatrix::to_dense() const {
  if (dense_) return mat_;
  MatrixXd a = MatrixXd::Zero(dim_, dim_);
  for (const auto& t : upper_) {
    a(t.row, t.col) += t.value;
    if (t.row != t.col) a(t.col, t.row) += t.value;
  }
  return a;
}

VectorXd SymMatrix::diagonal() const {
  if (dense_) return mat_.diagonal();
  VectorXd d = VectorXd::Zero(dim_);
  for (const auto& t : upper_)
    if (t.row == t.col) d[t.row] += t.value;
  return d;
}

VectorXd SymMatrix::apply(const VectorXd& x) const {
  VectorXd y(dim_);
  apply_block(x, y);
  return y;
}

void SymMatrix::apply_block(const Eigen::Ref<const MatrixXd>& x,
                            Eigen::Ref<MatrixXd> y) const {
  if (dense_)
    kern::sym_dense_apply(mat_, x, y);
  else
    kern::csr_apply(csr_, x, y);
}

SymMatrix SymMatrix::conjugate_diag(const VectorXd& d) const {
  if (d.size() != dim_) throw ValidationError("conjugate_diag: size mismatch");
  if (dense_) {
    MatrixXd m = mat_;
    m.array().colwise() *= d.array();
    m.array().rowwise() *= d.transpose().array();
    return SymMatrix::from_dense(m);
  }
  std::vector<Triplet> scaled = upper_;
  for (auto& t : scaled) t.value *= d[t.row] * d[t.col];
  return SymMatrix::from_triplets(dim_, std::move(scaled));
}

}  // namespace mdr
