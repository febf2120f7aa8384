#ifndef MDR_EIG_HPP
#define MDR_EIG_HPP

#include <utility>

#include "mdr/operators.hpp"
#include "mdr/rng.hpp"
#include "mdr/sym_matrix.hpp"

namespace mdr {

// Dense-oracle dimension cap; MDR_DENSE_CAP overrides the 2000 default.
Index dense_cap();

// Power method on a PSD operator: returns V with
// 0.9*lmax <= V <= lmax with probability >= 1 - delta, Theta(log(d/delta))
// matvecs. Non-finite matvec output raises NumericError.
double power_top_eig(const SpectralOperator& op, double delta, Rng& rng);

// Full symmetric eigendecomposition extremes (the verification oracle).
// Dimension above the cap raises CapExceededError.
std::pair<double, double> exact_extreme_eigs(const SymMatrix& k);
std::pair<double, double> exact_extreme_eigs(const MatrixXd& k);

VectorXd exact_eigenvalues(const MatrixXd& k);

// lmax/lmin at oracle precision; lmin <= 0 raises NotPositiveDefiniteError.
// Laplacian-like inputs are handled by deflating the all-ones direction.
double condition_number(const SymMatrix& k, bool laplacian_like = false);
double condition_number(const MatrixXd& k, bool laplacian_like = false);

// Generalized eigenvalue extremes of (M, B): eigenvalues of B^-1/2 M B^-1/2
// for SPD B. With restrict_to_ones_complement, both matrices are reduced to
// the complement of the all-ones direction first (graph pseudoinverse work).
std::pair<double, double> generalized_eig_range(const MatrixXd& m, const MatrixXd& b,
                                                bool restrict_to_ones_complement = false);

}  // namespace mdr

#endif
