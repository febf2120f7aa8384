#ifndef MDR_EXP_ESTIMATORS_HPP
#define MDR_EXP_ESTIMATORS_HPP

#include "mdr/dictionary.hpp"
#include "mdr/poly.hpp"

namespace mdr {

// Shared result of the sketched negative-exponential pass: numerators
// {<M_i, exp(-S)>} and the denominator Tr exp(-S), computed from one
// sketch application of the exp polynomial.
struct DictExpResult {
  VectorXd inner;
  double trace = 0.0;
  Index sketch_rows = 0;
  int degree = 0;
  bool exact_path = false;  // sketch skipped because it would not compress
};

// eps-multiplicative estimate of Tr exp(-S) for PSD S with
// lambda_min(S) <= R and lambda_max(S) <= kappa * R (caller-certified).
double trace_exp_estimate(const SpectralOperator& s, double R, double kappa, double eps,
                          double delta, std::uint64_t seed);

// (eps, c)-approximations to all {<M_i, exp(-S)>} for S psd, S <= kappa*I.
VectorXd dict_exp_inner_estimates(const MatrixDictionary& dict, const SpectralOperator& s,
                                  double kappa, double eps, double c, double delta,
                                  std::uint64_t seed);

// Solver-facing combined pass over a spectrum window [lo, hi] (the window
// may start slightly below zero after the solver's eigenvalue shift).
DictExpResult dict_exp_with_trace(const MatrixDictionary& dict, const SpectralOperator& s,
                                  double lo, double hi, double eps, double c, double delta,
                                  std::uint64_t seed);

// tau with |tau - lambda_min(S)| <= R for R = log(d)/eps, via the power
// method on p(S) - 0.5*exp(-20R)*I. `shift` subtracts a known lower bound
// before exponentiating (the estimate is returned in the original scale);
// lmax_bound = 0 means estimate it internally.
double lambda_min_additive(const SpectralOperator& s, double kappa, double eps,
                           double delta, std::uint64_t seed, double lmax_bound = 0.0,
                           double shift = 0.0);

}  // namespace mdr

#endif
