#include "mdr/poly.hpp"

#include <cmath>
#include <vector>

#include "mdr/errors.hpp"

namespace mdr {

namespace {

// Scaled modified Bessel values e^{-h} I_k(h), k = 0..kmax, via Miller's
// downward recurrence with the e^h = I_0 + 2 sum I_k normalization.
std::vector<double> scaled_bessel_i(double h, int kmax) {
  std::vector<double> out(kmax + 1, 0.0);
  if (h <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  const int start = kmax + 12 + static_cast<int>(2.0 * std::sqrt(static_cast<double>(kmax) + h));
  std::vector<double> f(start + 2, 0.0);
  f[start + 1] = 0.0;
  f[start] = 1e-280;
  for (int k = start; k >= 1; --k) {
    f[k - 1] = f[k + 1] + (2.0 * k / h) * f[k];
    if (f[k - 1] > 1e270) {
      for (int j = k - 1; j <= start + 1; ++j) f[j] *= 1e-270;
    }
  }
  double norm = f[0];
  for (int k = 1; k <= start; ++k) norm += 2.0 * f[k];
  for (int k = 0; k <= kmax; ++k) out[k] = f[k] / norm;
  return out;
}

double clenshaw(const VectorXd& c, double y) {
  double b1 = 0.0, b2 = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
    const double b = 2.0 * y * b1 - b2 + c[k];
    b2 = b1;
    b1 = b;
  }
  return y * b1 - b2 + c[0];
}

}  // namespace

double PolyApprox::eval(double x) const {
  const double y = (2.0 * x - lo - hi) / (hi - lo);
  return clenshaw(coeffs, y);
}

MatrixXd PolyApprox::apply(const SpectralOperator& op,
                           const Eigen::Ref<const MatrixXd>& x) const {
  const double a = 2.0 / (hi - lo);
  const double b = (hi + lo) / (hi - lo);
  auto ymap = [&](const MatrixXd& in) {
    MatrixXd out(in.rows(), in.cols());
    op.apply_block(in, out);
    return MatrixXd(a * out - b * in);
  };
  MatrixXd b1 = MatrixXd::Zero(x.rows(), x.cols());
  MatrixXd b2 = b1;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 1; --k) {
    MatrixXd next = 2.0 * ymap(b1) - b2 + coeffs[k] * x;
    b2.swap(b1);
    b1.swap(next);
  }
  return ymap(b1) - b2 + coeffs[0] * x;
}

PolyApprox poly_exp_neg_additive(double additive, double hi, double lo, int degree_cap) {
  if (!(hi > lo)) throw ValidationError("poly_exp_neg: hi > lo required");
  if (additive <= 0.0) throw ValidationError("poly_exp_neg: additive > 0 required");
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  // Coefficients a_k = 2 (-1)^k e^{-lo} ive_k(h); choose the degree from the
  // explicit tail bound sum_{k>D} |a_k| <= additive.
  const double tail_target = 0.5 * additive * std::exp(std::min(lo, 700.0));
  int kmax = 8 + static_cast<int>(std::ceil(
                 std::sqrt(2.0 * h * std::log(3.0 / std::min(tail_target, 0.5))) +
                 std::log(3.0 / std::min(tail_target, 0.5))));
  kmax = std::min(kmax, degree_cap + 64);
  std::vector<double> ive = scaled_bessel_i(h, kmax);
  double tail = 0.0;
  int deg = kmax;
  std::vector<double> suffix(kmax + 2, 0.0);
  for (int k = kmax; k >= 1; --k) suffix[k] = suffix[k + 1] + 2.0 * ive[k];
  for (int k = 1; k <= kmax + 1; ++k) {
    if (suffix[k] <= tail_target) {
      deg = k - 1;
      tail = suffix[k];
      break;
    }
  }
  if (deg > degree_cap)
    throw BudgetError("poly_exp_neg: required degree exceeds cap", deg);
  PolyApprox p;
  p.kind = PolyApprox::Kind::NegExp;
  p.lo = lo;
  p.hi = hi;
  p.guarantee = additive;
  p.coeffs.resize(deg + 1);
  const double elo = std::exp(-lo);
  p.coeffs[0] = elo * ive[0];
  for (int k = 1; k <= deg; ++k)
    p.coeffs[k] = 2.0 * elo * ive[k] * ((k % 2) ? -1.0 : 1.0);
  (void)tail;
  // Construction-time spot check on a scalar grid. Targets below the
  // double-precision noise floor of Clenshaw evaluation are checked at
  // that floor instead.
  double worst = 0.0;
  for (int g = 0; g <= 1000; ++g) {
    const double x = lo + (hi - lo) * g / 1000.0;
    worst = std::max(worst, std::abs(p.eval(x) - std::exp(-x)));
  }
  const double fp_floor = 5e-14 * (p.coeffs.cwiseAbs().sum() + 1.0);
  if (worst > std::max(1.05 * additive, fp_floor))
    throw NumericError("poly_exp_neg: grid check failed, sup error " + std::to_string(worst));
  return p;
}

PolyApprox poly_exp_neg(double R, double hi, double lo, int degree_cap) {
  if (R <= 0.0) throw ValidationError("poly_exp_neg: R > 0 required");
  return poly_exp_neg_additive(std::exp(-R), hi, lo, degree_cap);
}

namespace {

PolyApprox cheb_interpolate_sqrt(double lo, double hi, int deg) {
  const int n = deg + 1;
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  std::vector<double> fv(n);
  for (int j = 0; j < n; ++j) {
    const double theta = M_PI * (j + 0.5) / n;
    fv[j] = std::sqrt(c + h * std::cos(theta));
  }
  PolyApprox p;
  p.kind = PolyApprox::Kind::Sqrt;
  p.lo = lo;
  p.hi = hi;
  p.coeffs.resize(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += fv[j] * std::cos(k * M_PI * (j + 0.5) / n);
    p.coeffs[k] = (k == 0 ? 1.0 : 2.0) * acc / n;
  }
  return p;
}

double sqrt_grid_error(const PolyApprox& p, int points) {
  double worst = 0.0;
  for (int g = 0; g <= points; ++g) {
    const double x = p.lo + (p.hi - p.lo) * g / points;
    worst = std::max(worst, std::abs(p.eval(x) - std::sqrt(x)));
  }
  return worst;
}

}  // namespace

PolyApprox cheb_sqrt_interval(double lo, double hi, double additive, int degree_cap) {
  if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("cheb_sqrt: 0 < lo < hi required");
  if (additive <= 0.0) throw ValidationError("cheb_sqrt: additive > 0 required");
  const double kappa = hi / lo;
  // Bernstein-ellipse estimate, then grid-validate and grow if short.
  int deg = 4 + static_cast<int>(std::ceil(
                0.5 * std::sqrt(kappa) *
                std::log(4.0 * std::sqrt(hi) / additive * std::sqrt(kappa))));
  deg = std::min(deg, degree_cap);
  for (;;) {
    PolyApprox p = cheb_interpolate_sqrt(lo, hi, deg);
    p.guarantee = additive;
    if (sqrt_grid_error(p, 1500) <= additive) return p;
    if (deg >= degree_cap)
      throw BudgetError("cheb_sqrt: degree cap reached before meeting target", deg * 2);
    deg = std::min(degree_cap, deg * 2);
  }
}

PolyApprox cheb_sqrt(double kappa, double delta, int degree_cap) {
  if (kappa < 1.0) throw ValidationError("cheb_sqrt: kappa >= 1 required");
  if (delta <= 0.0 || delta >= 1.0) throw ValidationError("cheb_sqrt: delta in (0,1)");
  if (kappa == 1.0) kappa = 1.0 + 1e-12;
  return cheb_sqrt_interval(1.0 / kappa, 1.0, delta / std::sqrt(kappa), degree_cap);
}

}  // namespace mdr
