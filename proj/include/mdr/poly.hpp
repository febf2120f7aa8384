#ifndef MDR_POLY_HPP
#define MDR_POLY_HPP

#include "mdr/operators.hpp"

namespace mdr {

// Chebyshev-basis polynomial on [lo, hi] with a recorded approximation
// guarantee; evaluation is Clenshaw (scalar or operator block form).
struct PolyApprox {
  enum class Kind { NegExp, Sqrt };
  Kind kind = Kind::NegExp;
  VectorXd coeffs;  // Chebyshev coefficients, coeffs[0] already halved into a0 form
  double lo = 0.0, hi = 1.0;
  double guarantee = 0.0;  // additive sup-error on [lo, hi]

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  double eval(double x) const;
  // Y = p(Op) X with Op assumed symmetric with spectrum in [lo, hi].
  MatrixXd apply(const SpectralOperator& op, const Eigen::Ref<const MatrixXd>& x) const;
};

// Polynomial p with |p(x) - exp(-x)| <= exp(-R) on [lo, hi]; the construction
// is the truncated Chebyshev expansion with the degree chosen by the explicit
// coefficient-tail bound. Degree above the cap raises BudgetError.
PolyApprox poly_exp_neg(double R, double hi, double lo = 0.0, int degree_cap = 20000);
// Same, with a direct additive target.
PolyApprox poly_exp_neg_additive(double additive, double hi, double lo = 0.0,
                                 int degree_cap = 20000);

// Chebyshev interpolant of sqrt on [1/kappa, 1] with
// max |p(x) - sqrt(x)| <= delta * kappa^-1/2 (the multiplicative-guarantee
// calibration); grid-validated at construction.
PolyApprox cheb_sqrt(double kappa, double delta, int degree_cap = 40000);
// sqrt interpolant on a general positive interval with an additive target.
PolyApprox cheb_sqrt_interval(double lo, double hi, double additive,
                              int degree_cap = 40000);

}  // namespace mdr

#endif
