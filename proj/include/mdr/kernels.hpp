#ifndef MDR_KERNELS_HPP
#define MDR_KERNELS_HPP

#include <Eigen/Core>

namespace mdr {
namespace kern {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Execution mode for the hot loops. Every kernel has a serial reference and
// an OpenMP variant that computes each output element with the identical
// summation order, so the two are bit-for-bit interchangeable (tested).
enum class Mode { Serial, Parallel };

Mode mode();
void set_mode(Mode m);
void set_threads(int n);  // 0 = library default
int threads();

// Y = A * X for symmetric dense A (full storage), X a column block.
void sym_dense_apply(const MatrixXd& A, const Eigen::Ref<const MatrixXd>& X,
                     Eigen::Ref<MatrixXd> Y, Mode m);

// Compressed sparse rows over the full (mirrored) pattern of a symmetric
// matrix; column indices sorted within each row.
struct Csr {
  Eigen::Index dim = 0;
  std::vector<Eigen::Index> row_ptr;
  std::vector<Eigen::Index> col;
  std::vector<double> val;
};

void csr_apply(const Csr& A, const Eigen::Ref<const MatrixXd>& X,
               Eigen::Ref<MatrixXd> Y, Mode m);

// Y = B * diag(w) * B^T * X  — the dictionary-combination product
// M(w) X = sum_i w_i V_i V_i^T X over the stacked factor matrix B = [V_1 ... V_n],
// with w already expanded to factor columns.
void factor_gram_apply(const MatrixXd& B, const VectorXd& w,
                       const Eigen::Ref<const MatrixXd>& X,
                       Eigen::Ref<MatrixXd> Y, Mode m);

// T = B^T * X (tall factor stack against a column block).
void factor_tapply(const MatrixXd& B, const Eigen::Ref<const MatrixXd>& X,
                   Eigen::Ref<MatrixXd> T, Mode m);

// Y = B * T accumulated column-by-column (deterministic order).
void factor_apply(const MatrixXd& B, const Eigen::Ref<const MatrixXd>& T,
                  Eigen::Ref<MatrixXd> Y, Mode m);

// Squared column norms of A, grouped: out[g] = sum of ||A(:,j)||^2 over
// columns j in [group_ptr[g], group_ptr[g+1]).
void grouped_colnorms(const MatrixXd& A, const std::vector<Eigen::Index>& group_ptr,
                      VectorXd& out, Mode m);

// Convenience overloads using the global mode.
inline void sym_dense_apply(const MatrixXd& A, const Eigen::Ref<const MatrixXd>& X,
                            Eigen::Ref<MatrixXd> Y) {
  sym_dense_apply(A, X, Y, mode());
}
inline void csr_apply(const Csr& A, const Eigen::Ref<const MatrixXd>& X,
                      Eigen::Ref<MatrixXd> Y) {
  csr_apply(A, X, Y, mode());
}
inline void factor_gram_apply(const MatrixXd& B, const VectorXd& w,
                              const Eigen::Ref<const MatrixXd>& X,
                              Eigen::Ref<MatrixXd> Y) {
  factor_gram_apply(B, w, X, Y, mode());
}

}  // namespace kern
}  // namespace mdr

#endif
