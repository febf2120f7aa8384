#ifndef MDR_SYM_MATRIX_HPP
#define MDR_SYM_MATRIX_HPP

#include <Eigen/Core>
#include <vector>

#include "mdr/kernels.hpp"

namespace mdr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Triplet {
  Index row, col;
  double value;
};

// Symmetric matrix, dense or sparse-coordinate backed. Dense ingestion
// symmetrizes with (A + A^T)/2; sparse ingestion stores each off-diagonal
// pair once (row <= col) and mirrors on apply. Immutable after construction.
class SymMatrix {
public:
  SymMatrix() = default;

  static SymMatrix from_dense(const MatrixXd& a);
  // Triplets with row <= col (entries with row > col are folded over).
  static SymMatrix from_triplets(Index dim, std::vector<Triplet> entries);

  Index dim() const { return dim_; }
  bool is_dense() const { return dense_; }
  Index nnz() const;  // full (mirrored) count

  const MatrixXd& dense() const { return mat_; }
  MatrixXd to_dense() const;
  VectorXd diagonal() const;

  VectorXd apply(const VectorXd& x) const;
  void apply_block(const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) const;

  // D * A * D for diagonal D (used by rescaling paths).
  SymMatrix conjugate_diag(const VectorXd& d) const;

  const std::vector<Triplet>& upper_entries() const { return upper_; }

private:
  Index dim_ = 0;
  bool dense_ = true;
  MatrixXd mat_;                 // dense storage
  std::vector<Triplet> upper_;   // sparse storage, row <= col
  kern::Csr csr_;                // mirrored pattern for apply
  void build_csr();
};

}  // namespace mdr

#endif
