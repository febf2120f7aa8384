#include "mdr/sqrt_ops.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <map>
#include <memory>

#include "mdr/eig.hpp"
#include "mdr/errors.hpp"

namespace mdr {

namespace {

double agm(double a, double b) {
  for (int i = 0; i < 64 && std::abs(a - b) > 1e-16 * a; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return 0.5 * (a + b);
}

// Complete elliptic integral of the first kind, modulus k.
double ellip_k(double k) {
  const double kp = std::sqrt(std::max(0.0, 1.0 - k * k));
  return M_PI / (2.0 * agm(1.0, kp));
}

// Jacobi amplitude via the descending AGM ladder (A&S 16.4).
void jacobi_sn_cn(double u, double k, double& sn, double& cn) {
  if (k < 1e-12) {
    sn = std::sin(u);
    cn = std::cos(u);
    return;
  }
  std::vector<double> a{1.0}, c{k};
  double b = std::sqrt(std::max(0.0, 1.0 - k * k));
  int n = 0;
  while (std::abs(c.back()) > 1e-15 * a.back() && n < 60) {
    const double an = 0.5 * (a.back() + b);
    const double cn_ = 0.5 * (a.back() - b);
    b = std::sqrt(a.back() * b);
    a.push_back(an);
    c.push_back(cn_);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int i = n; i >= 1; --i)
    phi = 0.5 * (phi + std::asin(std::clamp(c[i] * std::sin(phi) / a[i], -1.0, 1.0)));
  sn = std::sin(phi);
  cn = std::cos(phi);
}

double rational_grid_error(const RationalSqrtInv& r, int points) {
  double worst = 0.0;
  for (int g = 0; g <= points; ++g) {
    const double x = r.lo * std::pow(r.hi / r.lo, static_cast<double>(g) / points);
    worst = std::max(worst, std::abs(r.eval(x) * std::sqrt(x) - 1.0));
  }
  return worst;
}

}  // namespace

double RationalSqrtInv::eval(double x) const {
  double v = scale;
  const int ln = static_cast<int>(numerator_shifts.size());
  const int ld = static_cast<int>(denominator_shifts.size());
  for (int j = 0; j < std::max(ln, ld); ++j) {
    if (j < ln) v *= x + numerator_shifts[j];
    if (j < ld) v /= x + denominator_shifts[j];
  }
  return v;
}

RationalSqrtInv make_rational_inv_sqrt(double lo, double hi, double eps, int degree_cap) {
  if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("rational_inv_sqrt: 0 < lo < hi");
  if (eps <= 0.0 || eps >= 1.0) throw ValidationError("rational_inv_sqrt: eps in (0,1)");
  const double l0 = std::sqrt(lo / hi);
  const double k1 = std::sqrt(std::max(0.0, 1.0 - l0 * l0));
  const double kp = ellip_k(k1);
  int m = std::max(3, static_cast<int>(std::ceil(
                       std::log(5.0 / eps) * std::log(20.0 * hi / lo) / 9.8)));
  for (;;) {
    RationalSqrtInv r;
    r.lo = lo;
    r.hi = hi;
    r.numerator_shifts.resize(m);
    r.denominator_shifts.resize(m);
    for (int j = 1; j <= 2 * m; ++j) {
      double sn, cn;
      jacobi_sn_cn(j * kp / (2.0 * m + 1.0), k1, sn, cn);
      const double cc = l0 * l0 * (sn * sn) / std::max(cn * cn, 1e-300);
      if (j % 2 == 0)
        r.numerator_shifts[j / 2 - 1] = hi * cc;
      else
        r.denominator_shifts[(j - 1) / 2] = hi * cc;
    }
    // Balance the relative error: pick C from the extremes of the
    // unscaled product times sqrt(x) on a log grid.
    r.scale = 1.0;
    double gmin = 1e300, gmax = -1e300;
    for (int g = 0; g <= 800; ++g) {
      const double x = lo * std::pow(hi / lo, g / 800.0);
      const double v = r.eval(x) * std::sqrt(x);
      gmin = std::min(gmin, v);
      gmax = std::max(gmax, v);
    }
    r.scale = 2.0 / (gmax + gmin);
    r.rel_error = rational_grid_error(r, 1200);
    if (r.rel_error <= eps) return r;
    if (m >= degree_cap)
      throw BudgetError("rational_inv_sqrt: degree cap before target", m * 2);
    m = std::min(degree_cap, m + std::max(2, m / 2));
  }
}

MatrixXd apply_sqrt_block(const SpectralOperator& m, double kappa,
                          const Eigen::Ref<const MatrixXd>& b, double eps, double delta,
                          Rng& rng) {
  if (kappa < 1.0) throw ValidationError("apply_sqrt: kappa >= 1 required");
  if (b.cols() == 0 || b.norm() == 0.0) return MatrixXd::Zero(b.rows(), b.cols());
  Rng prng = rng.derive(0x517);
  const double v = power_top_eig(m, std::min(0.25, delta), prng);
  if (v <= 0.0) return MatrixXd::Zero(b.rows(), b.cols());
  const double hi = 1.13 * v;
  const double lo = v / (1.2 * kappa);
  // Pointwise multiplicative sqrt error transfers to the vector contract by
  // operator monotonicity.
  PolyApprox p = cheb_sqrt_interval(lo, hi, eps * std::sqrt(lo));
  return p.apply(m, b);
}

VectorXd apply_sqrt(const SpectralOperator& m, double kappa, const VectorXd& b,
                    double eps, double delta, Rng& rng) {
  return apply_sqrt_block(m, kappa, b, eps, delta, rng).col(0);
}

ShiftedSolveFamily dense_shifted_family(const MatrixXd& m) {
  auto base = std::make_shared<MatrixXd>(0.5 * (m + m.transpose()));
  auto cache = std::make_shared<std::map<double, std::shared_ptr<Eigen::LLT<MatrixXd>>>>();
  return [base, cache](double shift) -> SolveAccess {
    auto it = cache->find(shift);
    if (it == cache->end()) {
      MatrixXd shifted = *base;
      shifted.diagonal().array() += shift;
      auto llt = std::make_shared<Eigen::LLT<MatrixXd>>(shifted);
      if (llt->info() != Eigen::Success)
        throw NotPositiveDefiniteError("dense_shifted_family: Cholesky failed");
      it = cache->emplace(shift, llt).first;
    }
    auto llt = it->second;
    SolveAccess s;
    s.base = op_shift(op_from_dense(*base), shift);
    s.cost_per_digit = static_cast<double>(base->rows()) * base->rows();
    s.solve = [llt](const VectorXd& v, double) -> VectorXd { return llt->solve(v); };
    return s;
  };
}

SpectralOperator inv_sqrt_operator(const SpectralOperator& b,
                                   const ShiftedSolveFamily& precond, double kappa,
                                   double beta, double eps, Rng& rng, InvSqrtInfo* info,
                                   int probes) {
  if (beta < 1.0) throw ValidationError("inv_sqrt_operator: beta >= 1 required");
  Rng prng = rng.derive(0xB0);
  const double v = power_top_eig(b, 0.05, prng);
  if (v <= 0.0) throw NotPositiveDefiniteError("inv_sqrt_operator: zero operator");
  const double hi = 1.13 * v;
  const double lo = v / (1.25 * beta);
  auto rat = std::make_shared<RationalSqrtInv>(
      make_rational_inv_sqrt(lo, hi, eps / 3.0));
  const int L = rat->degree();
  // Per-solve accuracy eps/(3(L+1) kappa(B)^{2(L+1)}), computed in logs and
  // clamped below; the construction probes catch any shortfall.
  const double log_delta = std::log(eps) - std::log(3.0 * (L + 1)) -
                           2.0 * (L + 1) * std::log(beta);
  const double delta_solve = std::max(1e-12, std::exp(std::max(log_delta, -27.6)));
  rat->per_solve_delta = delta_solve;

  auto bop = std::make_shared<SpectralOperator>(b);
  const double beta_cap = beta * 1.3;
  // Preconditioners per denominator shift, built once.
  auto solvers = std::make_shared<std::vector<SolveAccess>>();
  auto shifted = std::make_shared<std::vector<SpectralOperator>>();
  for (int j = 0; j < L; ++j) {
    solvers->push_back(precond(rat->denominator_shifts[j]));
    shifted->push_back(op_shift(b, rat->denominator_shifts[j]));
  }

  SpectralOperator r;
  r.dim = b.dim;
  r.cost_hint = b.cost_hint * (2.0 * L + 2.0) * 50.0;
  r.apply_block = [bop, solvers, shifted, rat, delta_solve, beta_cap](
                      const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    const int L = rat->degree();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      VectorXd u = x.col(c);
      // Interleave numerator multiplies with denominator solves; the
      // Zolotarev shifts alternate, keeping intermediate norms tame.
      for (int j = 0; j < L; ++j) {
        PcgOptions opts;
        opts.kappa_a = beta_cap;
        opts.max_iter = 4000;
        u = pcg_solve((*shifted)[j], (*solvers)[j], u, delta_solve, opts);
        const double lam = rat->numerator_shifts[j];
        VectorXd t = bop->apply(u);
        u = t + lam * u;
      }
      y.col(c) = rat->scale * u;
    }
  };

  double worst = 0.0;
  for (int t = 0; t < probes; ++t) {
    Rng probe_rng = rng.derive(0xC0 + t);
    VectorXd z = probe_rng.unit_vec(b.dim);
    VectorXd rz = r.apply(r.apply(z));
    PcgOptions opts;
    opts.kappa_a = beta_cap;
    opts.max_iter = 4000;
    VectorXd binv = pcg_solve(b, precond(0.0), z, std::min(eps / 10.0, 1e-8), opts);
    worst = std::max(worst, (rz - binv).norm() / std::max(binv.norm(), 1e-300));
  }
  if (probes > 0 && worst > 3.0 * eps)
    throw NumericError("inv_sqrt_operator: composed probe defect " + std::to_string(worst) +
                       " exceeds 3*eps");
  if (info) {
    info->degree = L;
    info->per_solve_delta = delta_solve;
    info->probe_defect = worst;
  }
  (void)kappa;
  return r;
}

}  // namespace mdr
