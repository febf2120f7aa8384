#ifndef MDR_OPERATORS_HPP
#define MDR_OPERATORS_HPP

#include <Eigen/Core>
#include <functional>
#include <memory>

#include "mdr/rng.hpp"
#include "mdr/sym_matrix.hpp"

namespace mdr {

// Abstract symmetric linear map: the universal currency for implicit
// matrices (exponential / square-root / inverse approximants, projections).
struct SpectralOperator {
  Index dim = 0;
  // Column-block apply; single vectors go through one-column blocks.
  std::function<void(const Eigen::Ref<const MatrixXd>&, Eigen::Ref<MatrixXd>)> apply_block;
  double cost_hint = 0.0;  // estimated flops per matvec

  VectorXd apply(const VectorXd& x) const {
    MatrixXd y(dim, 1);
    apply_block(x, y);
    return y.col(0);
  }
  MatrixXd apply_mat(const Eigen::Ref<const MatrixXd>& x) const {
    MatrixXd y(dim, x.cols());
    apply_block(x, y);
    return y;
  }
  // Materialize by application to the identity (desk-scale densification).
  MatrixXd to_dense() const { return apply_mat(MatrixXd::Identity(dim, dim)); }
};

SpectralOperator op_identity(Index d);
SpectralOperator op_from_dense(const MatrixXd& a);
SpectralOperator op_from_sym(std::shared_ptr<const SymMatrix> a);
SpectralOperator op_diag(const VectorXd& d);
// a*X + b*Y for operators X, Y
SpectralOperator op_axpby(double a, SpectralOperator x, double b, SpectralOperator y);
SpectralOperator op_shift(SpectralOperator a, double lambda);  // A + lambda*I
SpectralOperator op_compose(SpectralOperator a, SpectralOperator b);  // A*B
// Projection I - (1/n) 11^T against the all-ones direction.
SpectralOperator op_ones_complement_projector(Index n);
// P*A*P with P the ones-complement projector.
SpectralOperator op_project_ones(SpectralOperator a);

// Explicitly factored PSD matrix M = V V^T.
struct FactoredPSD {
  MatrixXd V;  // d x m, m >= 1
  Index dim() const { return V.rows(); }
  Index width() const { return V.cols(); }
  MatrixXd to_dense() const { return V * V.transpose(); }
};

FactoredPSD factored_from_vector(const VectorXd& v);
// Factor a PSD matrix through its eigendecomposition (small negative
// eigenvalues within tol are clipped).
FactoredPSD factored_from_psd(const MatrixXd& m, double tol = 1e-10);

// Inverse access to an SPD (or kernel-projected PSD) operator:
// solve(v, eps) returns u with ||u - A^-1 v|| <= eps ||A^-1 v||.
struct SolveAccess {
  SpectralOperator base;
  std::function<VectorXd(const VectorXd&, double)> solve;
  double cost_per_digit = 0.0;
};

SolveAccess solve_access_identity(Index d);
SolveAccess solve_access_diag(const VectorXd& d);
// Dense Cholesky-backed solver (exact up to roundoff).
SolveAccess solve_access_dense_spd(const MatrixXd& a);

// Statistical linearity / symmetry probes for operator contracts.
// Returns the worst relative violation over `trials` random probe pairs.
double operator_linearity_defect(const SpectralOperator& op, Rng& rng, int trials = 8);
double operator_symmetry_defect(const SpectralOperator& op, Rng& rng, int trials = 8);

}  // namespace mdr

#endif
