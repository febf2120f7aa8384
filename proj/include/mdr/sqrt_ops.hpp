#ifndef MDR_SQRT_OPS_HPP
#define MDR_SQRT_OPS_HPP

#include "mdr/operators.hpp"
#include "mdr/pcg.hpp"
#include "mdr/poly.hpp"
#include "mdr/rng.hpp"

namespace mdr {

// u with ||u - M^(1/2) b||_2 <= eps ||M^(1/2) b||_2 for SPD M with
// kappa(M) <= kappa; a 2-approximate top eigenvalue is taken internally.
VectorXd apply_sqrt(const SpectralOperator& m, double kappa, const VectorXd& b,
                    double eps, double delta, Rng& rng);
// Block variant sharing one polynomial construction.
MatrixXd apply_sqrt_block(const SpectralOperator& m, double kappa,
                          const Eigen::Ref<const MatrixXd>& b, double eps, double delta,
                          Rng& rng);

// Rational approximation r(x) = C * prod (x + num_shifts) / prod (x + den_shifts)
// of x^(-1/2) on [lo, hi], Zolotarev-type nodes from elliptic integrals,
// grid-validated at construction (degree grows until the target is met).
struct RationalSqrtInv {
  VectorXd numerator_shifts;
  VectorXd denominator_shifts;
  double scale = 1.0;
  double lo = 0.0, hi = 1.0;
  double rel_error = 0.0;    // validated sup of |r(x) sqrt(x) - 1| on the grid
  double per_solve_delta = 0.0;
  int degree() const { return static_cast<int>(denominator_shifts.size()); }
  double eval(double x) const;
};

RationalSqrtInv make_rational_inv_sqrt(double lo, double hi, double eps, int degree_cap = 80);

// Solver family for shifted systems (M + shift*I)^-1.
using ShiftedSolveFamily = std::function<SolveAccess(double)>;
ShiftedSolveFamily dense_shifted_family(const MatrixXd& m);

struct InvSqrtInfo {
  int degree = 0;
  double per_solve_delta = 0.0;
  double probe_defect = 0.0;  // worst ||R^2 v - B^-1 v|| / ||B^-1 v||
};

// Operator R with ||(R - B^-1/2) v|| <= eps ||B^-1/2 v||, realized as the
// rational form with numerator shifts applied exactly and denominator
// inverses via pcg_solve against the supplied preconditioner family.
// The composed contract ||R^2 v - B^-1 v|| <= 3 eps ||B^-1 v|| is checked on
// random probes at construction and violations fail loudly.
SpectralOperator inv_sqrt_operator(const SpectralOperator& b,
                                   const ShiftedSolveFamily& precond, double kappa,
                                   double beta, double eps, Rng& rng,
                                   InvSqrtInfo* info = nullptr, int probes = 2);

}  // namespace mdr

#endif
