#include "mdr/exp_estimators.hpp"

#include <cmath>

#include "mdr/errors.hpp"
#include "mdr/jl.hpp"
#include "mdr/kernels.hpp"

namespace mdr {

namespace {

// Polynomial q(x) ~ exp(-x/2) on [lo, hi]: build exp(-y) on [lo/2, hi/2]
// and stretch the interval; Chebyshev bases compose affinely.
PolyApprox half_exponent_poly(double additive, double lo, double hi) {
  PolyApprox p = poly_exp_neg_additive(additive, hi / 2.0, lo / 2.0);
  p.lo = lo;
  p.hi = hi;
  return p;
}

}  // namespace

DictExpResult dict_exp_with_trace(const MatrixDictionary& dict, const SpectralOperator& s,
                                  double lo, double hi, double eps, double c, double delta,
                                  std::uint64_t seed) {
  if (eps <= 0.0 || c <= 0.0) throw ValidationError("dict_exp: eps, c > 0 required");
  const Index d = dict.dim();
  const Index F = dict.factor_cols();
  const double mbar = static_cast<double>(dict.max_width());
  const double additive = std::min(c / (12.0 * std::max(1.0, mbar)), eps / 9.0);
  PolyApprox p = half_exponent_poly(additive, std::min(lo, 0.0), std::max(hi, lo + 1e-9));

  DictExpResult res;
  res.degree = p.degree();
  const Index k = jl_rows(std::max<Index>(d, dict.size() * dict.max_width()), eps / 3.0,
                          delta);
  res.sketch_rows = k;
  if (F + d <= k) {
    // Sketching would not compress; apply the polynomial to the factor
    // columns and the identity directly (same contract, error only from p).
    res.exact_path = true;
    MatrixXd y = p.apply(s, dict.factor_stack());
    kern::grouped_colnorms(y, dict.group_ptr(), res.inner, kern::mode());
    MatrixXd t = p.apply(s, MatrixXd::Identity(d, d));
    res.trace = t.squaredNorm();
    return res;
  }
  JlSketch q = make_jl_rows(d, k, seed);
  MatrixXd qt = p.apply(s, q.Q.transpose());  // d x k
  // Rows have norm 1/sqrt(k), so the unbiased estimators carry a factor d.
  res.trace = static_cast<double>(d) * qt.squaredNorm();
  MatrixXd g = qt.transpose() * dict.factor_stack();  // k x F
  kern::grouped_colnorms(g, dict.group_ptr(), res.inner, kern::mode());
  res.inner *= static_cast<double>(d);
  return res;
}

double trace_exp_estimate(const SpectralOperator& s, double R, double kappa, double eps,
                          double delta, std::uint64_t seed) {
  if (R <= 0.0 || kappa <= 0.0) throw ValidationError("trace_exp: R, kappa > 0");
  if (eps <= 0.0 || eps >= 1.0) throw ValidationError("trace_exp: eps in (0,1)");
  const Index d = s.dim;
  const double additive = eps / 9.0 * std::exp(-std::min(R, 650.0));
  PolyApprox p = half_exponent_poly(additive, 0.0, kappa * R);
  const Index k = jl_rows(d, eps / 3.0, delta);
  if (k >= d) {
    MatrixXd t = p.apply(s, MatrixXd::Identity(d, d));
    return t.squaredNorm();
  }
  JlSketch q = make_jl_rows(d, k, seed);
  MatrixXd qt = p.apply(s, q.Q.transpose());
  return static_cast<double>(d) * qt.squaredNorm();
}

VectorXd dict_exp_inner_estimates(const MatrixDictionary& dict, const SpectralOperator& s,
                                  double kappa, double eps, double c, double delta,
                                  std::uint64_t seed) {
  return dict_exp_with_trace(dict, s, 0.0, kappa, eps, c, delta, seed).inner;
}

double lambda_min_additive(const SpectralOperator& s, double kappa, double eps,
                           double delta, std::uint64_t seed, double lmax_bound,
                           double shift) {
  const Index d = s.dim;
  if (d < 1) throw ValidationError("lambda_min_additive: empty operator");
  const double R = std::log(std::max<double>(d, 2)) / eps;
  Rng rng(seed);
  SpectralOperator m = shift != 0.0 ? op_shift(s, -shift) : s;
  if (lmax_bound <= 0.0) {
    Rng prng = rng.derive(0x11);
    lmax_bound = power_top_eig(m, std::min(0.25, delta / 3.0), prng) / 0.9;
    (void)kappa;
  } else {
    lmax_bound -= shift;
  }
  lmax_bound = std::max(lmax_bound, 1e-6);
  // Additive floor representable in doubles; the shift keeps the signal
  // exp(-lambda_min + shift) well above it.
  const double expo = std::min(20.0 * R, 640.0);
  const double half_floor = 0.5 * std::exp(-expo);
  PolyApprox p = poly_exp_neg_additive(half_floor, lmax_bound * 1.02 + 1.0, -0.25 * R - 1e-3);

  const int steps =
      static_cast<int>(std::ceil(10.0 * std::log(static_cast<double>(d) /
                                                 std::min(delta, 0.5)))) + 5;
  VectorXd v = rng.unit_vec(d);
  auto apply_shifted_exp = [&](const VectorXd& x) {
    MatrixXd y = p.apply(m, x);
    return VectorXd(y.col(0) - half_floor * x);
  };
  for (int it = 0; it < steps; ++it) {
    VectorXd w = apply_shifted_exp(v);
    if (!w.allFinite()) throw NumericError("lambda_min_additive: non-finite output");
    const double n = w.norm();
    if (n <= 0.0) throw NumericError("lambda_min_additive: power method collapsed");
    v = w / n;
  }
  const double value = std::max(apply_shifted_exp(v).norm(), 1e-300);
  return shift - std::log(value);
}

}  // namespace mdr
