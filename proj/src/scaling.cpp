#include "mdr/scaling.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "mdr/errors.hpp"

namespace mdr {

namespace {

// Shared per-phase machinery: the square root of K materialized once through
// apply_sqrt on the identity block (the probe images A e_j of the lemma
// machinery for the full standard basis).
struct AwaCache {
  MatrixXd k;
  double kscale = 1.0;
  MatrixXd ahat;  // ~ K^(1/2), symmetrized
};

AwaCache build_awa_cache(const ImplicitSqrtAccess& acc, double eps, double delta,
                         Rng& rng) {
  AwaCache c;
  c.k = acc.K;
  c.kscale = std::max(1.0, acc.kappa_scale);
  const Index d = acc.K.rows();
  // Inner accuracy eps/(3 N kappa) with the probe-count polynomial
  // N = 100 d^2/delta; it enters only logarithmically in the degree.
  const double probe_n = 100.0 * static_cast<double>(d) * d / std::max(delta, 1e-6);
  const double inner = std::max(1e-11, eps / (3.0 * probe_n * c.kscale));
  Rng srng = rng.derive(0xAAA);
  MatrixXd a = apply_sqrt_block(op_from_dense(acc.K), c.kscale,
                                MatrixXd::Identity(d, d), inner, delta, srng);
  c.ahat = 0.5 * (a + a.transpose());
  return c;
}

SpectralOperator awa_operator(const AwaCache& c, const VectorXd& wdiag, double shift) {
  auto ahat = std::make_shared<MatrixXd>(c.ahat);
  auto w = std::make_shared<VectorXd>(wdiag);
  SpectralOperator op;
  op.dim = c.k.rows();
  op.cost_hint = 2.0 * static_cast<double>(c.k.rows()) * c.k.rows();
  op.apply_block = [ahat, w, shift](const Eigen::Ref<const MatrixXd>& x,
                                    Eigen::Ref<MatrixXd> y) {
    MatrixXd t = (*ahat) * x;
    t.array().colwise() *= w->array();
    y.noalias() = (*ahat) * t;
    if (shift != 0.0) y -= shift * x;
  };
  return op;
}

PolyApprox half_exp_window(double additive, double lo, double hi) {
  PolyApprox p = poly_exp_neg_additive(additive, hi / 2.0, lo / 2.0);
  p.lo = lo;
  p.hi = hi;
  return p;
}

MatrixXd dense_power(const MatrixXd& m, int e) {
  MatrixXd acc = MatrixXd::Identity(m.rows(), m.cols());
  MatrixXd base = m;
  int k = e;
  while (k > 0) {
    if (k & 1) acc = acc * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return acc;
}

MatrixXd rescaled_k(const MatrixXd& k, const VectorXd& w) {
  // W^(1/2) K W^(1/2), spectrally identical to A W A
  MatrixXd m = k;
  VectorXd s = w.cwiseMax(0.0).cwiseSqrt();
  m.array().colwise() *= s.array();
  m.array().rowwise() *= s.transpose().array();
  return m;
}

}  // namespace

VectorXd apply_poly_of_AWA(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                           const PolyApprox& poly, const VectorXd& u, double eps,
                           double delta, Rng& rng) {
  const Index d = acc.K.rows();
  if (wdiag.size() != d || u.size() != d)
    throw ValidationError("apply_poly_of_AWA: size mismatch");
  // P = c0 I + A N A for N = ptilde(W K) W, ptilde(y) = (p(y) - p(0))/y
  // (exact polynomial division realized by re-interpolation).
  const double c0 = poly.eval(0.0);
  const int nodes = poly.degree() + 1;
  PolyApprox ptilde;
  ptilde.lo = poly.lo;
  ptilde.hi = poly.hi;
  {
    const double c = 0.5 * (poly.lo + poly.hi), h = 0.5 * (poly.hi - poly.lo);
    std::vector<double> fv(nodes);
    for (int j = 0; j < nodes; ++j) {
      const double x = c + h * std::cos(M_PI * (j + 0.5) / nodes);
      fv[j] = std::abs(x) > 1e-10 ? (poly.eval(x) - c0) / x : 0.0;
    }
    ptilde.coeffs.resize(nodes);
    for (int k = 0; k < nodes; ++k) {
      double accum = 0.0;
      for (int j = 0; j < nodes; ++j) accum += fv[j] * std::cos(k * M_PI * (j + 0.5) / nodes);
      ptilde.coeffs[k] = (k == 0 ? 1.0 : 2.0) * accum / nodes;
    }
  }
  const double probe_n = 100.0 * static_cast<double>(d) * d / std::max(delta, 1e-6);
  const double inner = std::max(1e-11, eps / (3.0 * probe_n * std::max(acc.kappa_scale, 1.0)));
  SpectralOperator kop = op_from_dense(acc.K);
  Rng r1 = rng.derive(0x41);
  VectorXd v = apply_sqrt(kop, acc.kappa_scale, u, inner, delta / 3.0, r1);  // ~ A u
  // N v = ptilde(WK) (W v) via Clenshaw in the (non-symmetric, real-spectrum)
  // operator WK, which is similar to A W A.
  SpectralOperator wk;
  wk.dim = d;
  const MatrixXd* kp = &acc.K;
  const VectorXd* wp = &wdiag;
  wk.apply_block = [kp, wp](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    y.noalias() = (*kp) * x;
    y.array().colwise() *= wp->array();
  };
  VectorXd nv = ptilde.apply(wk, VectorXd(wdiag.asDiagonal() * v));
  Rng r2 = rng.derive(0x42);
  VectorXd anv = apply_sqrt(kop, acc.kappa_scale, nv, inner, delta / 3.0, r2);
  return c0 * u + anv;
}

double bilinear_through_A(const ImplicitSqrtAccess& acc, const VectorXd& u,
                          const VectorXd& v, double eps, double delta, Rng& rng) {
  const Index d = acc.K.rows();
  if (v.norm() == 0.0) return 0.0;
  const double probe_n = 100.0 * static_cast<double>(d) * d / std::max(delta, 1e-6);
  const double inner =
      std::max(1e-12, eps / (probe_n * std::sqrt(std::max(acc.kappa_scale, 1.0))));
  Rng r1 = rng.derive(0x43);
  VectorXd w = apply_sqrt(op_from_dense(acc.K), acc.kappa_scale, u, inner, delta, r1);
  return w.dot(v);
}

double sqrt_trace_exp(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                      double shift, double lo, double hi, double eps, double delta,
                      Rng& rng) {
  AwaCache c = build_awa_cache(acc, eps, delta, rng);
  PolyApprox q = half_exp_window(eps / 9.0 * std::exp(-std::min(-lo + 1.0, 600.0)), lo, hi);
  SpectralOperator m = awa_operator(c, wdiag, shift);
  MatrixXd t = q.apply(m, MatrixXd::Identity(c.k.rows(), c.k.rows()));
  return t.squaredNorm();
}

VectorXd sqrt_dict_inner(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                         double shift, double lo, double hi, double eps, double c,
                         double delta, Rng& rng) {
  AwaCache cache = build_awa_cache(acc, eps, delta, rng);
  PolyApprox q = half_exp_window(std::min(c / 12.0, eps / 9.0), lo, hi);
  SpectralOperator m = awa_operator(cache, wdiag, shift);
  MatrixXd y = q.apply(m, cache.ahat);  // columns ~ exp(-(M - sI)/2) a_i
  VectorXd out(cache.k.rows());
  for (Index i = 0; i < cache.k.rows(); ++i) out[i] = y.col(i).squaredNorm();
  return out;
}

double sqrt_lambda_min(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                       double eps, double delta, Rng& rng) {
  AwaCache c = build_awa_cache(acc, eps, delta, rng);
  return lambda_min_additive(awa_operator(c, wdiag, 0.0), 0.0, eps, delta,
                             rng.derive(0x99).seed());
}

double packing_moments_trace(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                             int p) {
  // Tr((A W A)^p) = Tr((W K)^p): explicit in K and W.
  MatrixXd wk = wdiag.asDiagonal() * acc.K;
  const double scale = std::max(wk.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
  wk /= scale;
  return dense_power(wk, p).trace() * std::pow(scale, p);
}

VectorXd packing_moments_inner(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                               int p) {
  // <a_i a_i^T, (AWA)^(p-1)> = diag(K (WK)^(p-2) W K)_i for p >= 3.
  const Index d = acc.K.rows();
  if (p == 1) return acc.K.diagonal();
  MatrixXd wk = wdiag.asDiagonal() * acc.K;
  const double scale = std::max(wk.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
  wk /= scale;
  MatrixXd x = dense_power(wk, p - 2);
  MatrixXd y = acc.K * x * ((wdiag / scale).asDiagonal() * acc.K);
  return y.diagonal() * std::pow(scale, p - 2);
}

namespace {

// Implicit estimator set for the row dictionary of A = K^(1/2).
MdrEstimators implicit_estimators(const AwaCache& cache, const MatrixXd& k_explicit) {
  MdrEstimators est;
  auto cptr = std::make_shared<AwaCache>(cache);
  auto kptr = std::make_shared<MatrixXd>(k_explicit);

  est.line6 = [cptr](const VectorXd& u, double shift, double lo, double hi, double eps,
                     double c, double delta, std::uint64_t seed) {
    (void)delta;
    (void)seed;
    const Index d = cptr->k.rows();
    PolyApprox q = half_exp_window(std::min(c / 12.0, eps / 9.0), std::min(lo, 0.0),
                                   std::max(hi, lo + 1e-9));
    SpectralOperator m = awa_operator(*cptr, u, shift);
    MatrixXd block(d, 2 * d);
    block.leftCols(d) = cptr->ahat;
    block.rightCols(d) = MatrixXd::Identity(d, d);
    MatrixXd y = q.apply(m, block);
    DictExpResult res;
    res.exact_path = true;
    res.degree = q.degree();
    res.inner.resize(d);
    for (Index i = 0; i < d; ++i) res.inner[i] = y.col(i).squaredNorm();
    res.trace = y.rightCols(d).squaredNorm();
    return res;
  };
  est.line13 = [cptr](const VectorXd& u, double shift, double lmax_bound, double eps,
                      double delta, std::uint64_t seed) {
    return lambda_min_additive(awa_operator(*cptr, u, 0.0), 0.0, eps, delta, seed,
                               lmax_bound, shift);
  };
  est.packing_moments = [cptr](const VectorXd& w, int p) {
    PackingGradient g;
    MatrixXd wk = w.asDiagonal() * cptr->k;
    const double scale = std::max(wk.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    wk /= scale;
    MatrixXd x = dense_power(wk, p - 2 >= 0 ? p - 2 : 0);
    if (p >= 3) {
      MatrixXd xwk = x * wk;
      g.trace_pm1 = xwk.trace();
      g.trace_p = (xwk * wk).trace();
      MatrixXd y = cptr->k * x * ((w / scale).asDiagonal() * cptr->k);
      g.inner_pm1 = y.diagonal() / scale;  // quantities of M/scale at power p-1
    } else {
      g.trace_pm1 = static_cast<double>(cptr->k.rows());
      g.trace_p = wk.trace();
      g.inner_pm1 = cptr->k.diagonal() / scale;
    }
    g.norm_scale = scale;
    return g;
  };
  est.gain_extremes = [kptr](const VectorXd& w) {
    return exact_extreme_eigs(rescaled_k(*kptr, w));
  };
  est.constraint_lmax = [kptr](const VectorXd& w) {
    return exact_extreme_eigs(rescaled_k(*kptr, w)).second;
  };
  return est;
}

}  // namespace

VectorXd well_conditioned_rescale(const ImplicitSqrtAccess& acc, double kappa_star,
                                  double eps, double delta, std::uint64_t seed,
                                  const MdrConfig* base, MdrCertificate* cert_out) {
  const Index d = acc.K.rows();
  if (d == 1) return VectorXd::Constant(1, 1.0 / acc.K(0, 0));
  Rng rng(seed);
  AwaCache cache = build_awa_cache(acc, std::min(eps, 0.05), delta / 4.0, rng);
  // The dictionary rows a_i have |a_i|^2 = K_ii; normalization is exact.
  VectorXd norms = acc.K.diagonal();
  MdrEstimators raw = implicit_estimators(cache, acc.K);
  // Wrap the hooks to work over normalized items: weights w over normalized
  // items correspond to diagonal w_i / K_ii over the raw rows.
  MdrEstimators est;
  auto unnorm = [norms](const VectorXd& w) -> VectorXd {
    return w.cwiseQuotient(norms);
  };
  est.line6 = [raw, unnorm, norms](const VectorXd& u, double shift, double lo, double hi,
                                   double eps2, double c, double delta2,
                                   std::uint64_t seed2) {
    DictExpResult r = raw.line6(unnorm(u), shift, lo, hi, eps2, c, delta2, seed2);
    r.inner = r.inner.cwiseQuotient(norms);
    return r;
  };
  est.line13 = [raw, unnorm](const VectorXd& u, double shift, double lmax_bound,
                             double eps2, double delta2, std::uint64_t seed2) {
    return raw.line13(unnorm(u), shift, lmax_bound, eps2, delta2, seed2);
  };
  est.packing_moments = [raw, unnorm, norms](const VectorXd& w, int p) {
    PackingGradient g = raw.packing_moments(unnorm(w), p);
    g.inner_pm1 = g.inner_pm1.cwiseQuotient(norms);
    return g;
  };
  est.gain_extremes = [raw, unnorm](const VectorXd& w) {
    return raw.gain_extremes(unnorm(w));
  };
  est.constraint_lmax = [raw, unnorm](const VectorXd& w) {
    return raw.constraint_lmax(unnorm(w));
  };

  MdrCertificate cert = solve_identity_raw(d, d, eps, delta, rng.derive(0x77).seed(),
                                           base, est, kappa_star, d);
  if (cert_out) *cert_out = cert;
  return cert.w.cwiseQuotient(norms);
}

ScalingResult inner_scale(const MatrixXd& a, double eps, double delta,
                          std::uint64_t seed, const MdrConfig* base) {
  const Index n = a.rows(), d = a.cols();
  if (n < d) throw ValidationError("inner_scale: n >= d required");
  ScalingResult out;
  out.mode = "inner";
  MatrixXd gram = a.transpose() * a;
  if (d <= dense_cap()) {
    auto [lo, hi] = exact_extreme_eigs(gram);
    if (lo <= 1e-12 * std::max(1.0, hi))
      throw RankError("inner_scale: rank-deficient input");
    out.kappa_before = hi / lo;
  }
  if (d == 1) {
    out.w = VectorXd::Ones(n);
    out.kappa_after = 1.0;
    return out;
  }
  std::vector<FactoredPSD> items;
  items.reserve(n);
  for (Index i = 0; i < n; ++i) items.push_back(factored_from_vector(a.row(i).transpose()));
  Rng drng(splitmix64(seed ^ 0x1111));
  MatrixDictionary dict = MatrixDictionary::build(std::move(items), delta / 4.0, drng);
  MdrCertificate cert = solve_identity(dict, eps, delta, seed, base);
  out.w = dict.raw_weights(cert.w);
  out.kappa_after = cert.kappa_hat;
  out.telemetry = cert.telemetry;
  return out;
}

ScalingResult jacobi_scale(const SymMatrix& k) {
  const Index d = k.dim();
  VectorXd diag = k.diagonal();
  for (Index i = 0; i < d; ++i)
    if (diag[i] <= 0.0)
      throw NotPositiveDefiniteError("jacobi_scale: nonpositive diagonal entry");
  ScalingResult out;
  out.mode = "jacobi";
  out.w = diag.cwiseInverse();
  if (d <= dense_cap()) {
    out.kappa_before = condition_number(k);
    MatrixXd m = k.to_dense();
    VectorXd s = out.w.cwiseSqrt();
    m.array().colwise() *= s.array();
    m.array().rowwise() *= s.transpose().array();
    out.kappa_after = condition_number(m);
  } else {
    out.kappa_exact = false;
    Rng rng(17);
    out.kappa_after = 0.0;
  }
  return out;
}

SymMatrix jacobi_lower_bound_family(Index d) {
  if (d < 1) throw ValidationError("jacobi_lower_bound_family: d >= 1");
  const double rd = std::sqrt(static_cast<double>(d));
  MatrixXd m = MatrixXd::Zero(2 * d, 2 * d);
  m.topLeftCorner(d, d).setConstant(1.0);
  m.topLeftCorner(d, d).diagonal().array() += rd;
  m.bottomRightCorner(d, d).setConstant(-1.0 / (rd + d));
  m.bottomRightCorner(d, d).diagonal().array() += 1.0 + 1.0 / (rd + d);
  return SymMatrix::from_dense(m);
}

ScalingResult outer_scale(const SymMatrix& k, double eps, double delta,
                          std::uint64_t seed, const MdrConfig* base) {
  const Index d = k.dim();
  ScalingResult out;
  out.mode = "outer";
  if (d == 1) {
    out.w = VectorXd::Constant(1, 1.0 / k.dense()(0, 0));
    out.kappa_before = 1.0;
    out.kappa_after = 1.0;
    return out;
  }
  if (d > dense_cap())
    throw CapExceededError("outer_scale: dimension above the dense certification cap");
  MatrixXd kd = k.to_dense();
  out.kappa_before = condition_number(kd);

  // (i) Jacobi pre-scaling: kappa(K1) <= (kappa_o*)^2.
  ScalingResult jac = jacobi_scale(k);
  VectorXd w_total = jac.w;
  MatrixXd k1 = rescaled_k(kd, w_total);

  Rng root(seed);
  // (ii) homotopy over K1 + lambda I with lambda_0 = V/eps.
  Rng prng = root.derive(0x0F);
  const double v = power_top_eig(op_from_dense(k1), std::min(delta / 8.0, 0.2), prng);
  double lam = v / (0.9 * eps);
  const double lmin_k1 = exact_extreme_eigs(k1).first;
  const double lam_exit = eps * lmin_k1 / (1.0 + eps);

  VectorXd w_bar = VectorXd::Ones(d);  // cumulative scaling on K1
  double kappa_hint = 0.0;
  int phase = 0;
  while (lam > lam_exit && phase < 80) {
    lam *= 0.5;
    ++phase;
    MatrixXd kph = rescaled_k(k1, w_bar);
    kph.diagonal() += lam * w_bar;  // W^(1/2)(K1 + lam I)W^(1/2)
    ImplicitSqrtAccess acc;
    acc.K = kph;
    acc.kappa_scale = 1.02 * condition_number(kph);
    MdrCertificate cert;
    VectorXd wp = well_conditioned_rescale(acc, kappa_hint, eps, delta / 16.0,
                                           root.derive(0x500 + phase).seed(), base,
                                           &cert);
    w_bar = w_bar.cwiseProduct(wp);
    kappa_hint = cert.kappa_hat;
    out.homotopy_log.push_back({lam, 1.0, cert.kappa_hat});
    out.telemetry.iterations += cert.telemetry.iterations;
    out.telemetry.packing_calls += cert.telemetry.packing_calls;
  }

  out.w = w_total.cwiseProduct(w_bar);
  out.kappa_after = condition_number(rescaled_k(kd, out.w));
  // Jacobi is itself feasible; never return anything worse.
  if (out.kappa_after > jac.kappa_after) {
    out.w = jac.w;
    out.kappa_after = jac.kappa_after;
    out.telemetry.exit_reason = "jacobi fallback";
  }
  return out;
}

}  // namespace mdr
