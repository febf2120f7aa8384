#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdr/eig.hpp"
#include "mdr/errors.hpp"
#include "mdr/scaling.hpp"
#include "test_helpers.hpp"

using namespace mdr;
using mdr_test::dense_sqrt;
using mdr_test::random_spd;

namespace {

MatrixXd rescale(const MatrixXd& k, const VectorXd& w) {
  VectorXd s = w.cwiseSqrt();
  return s.asDiagonal() * k * s.asDiagonal();
}

}  // namespace

TEST_CASE("inner_scale examples") {
  const double eps = 0.3;

  ScalingResult r1 = inner_scale(MatrixXd::Identity(4, 4), eps, 0.05, 7);
  CHECK(r1.kappa_after <= 1.0 + eps);

  MatrixXd a2(3, 2);
  a2 << 1, 0, 0, 1, 10, 0;
  ScalingResult r2 = inner_scale(a2, eps, 0.05, 8);
  MatrixXd gram = a2.transpose() * r2.w.asDiagonal() * a2;
  CHECK(condition_number(gram) <= (1.0 + eps) * (1.0 + 1e-9));

  MatrixXd a3(2, 2);
  a3 << 1, 0, 0, 2;
  ScalingResult r3 = inner_scale(a3, eps, 0.05, 9);
  CHECK(r3.kappa_after <= 1.0 + eps);

  MatrixXd sing(3, 2);
  sing << 1, 0, 2, 0, 3, 0;
  CHECK_THROWS_AS(inner_scale(sing, eps, 0.05, 10), RankError);
}

TEST_CASE("inner_scale certified ratio is scale invariant") {
  Rng rng(31);
  const Index n = 12, d = 4;
  MatrixXd a(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  const double eps = 0.4;
  ScalingResult r1 = inner_scale(a, eps, 0.05, 32);
  VectorXd dcol(d);
  for (Index j = 0; j < d; ++j) dcol[j] = std::pow(10.0, rng.uniform(-1.5, 1.5));
  ScalingResult r2 = inner_scale(a * dcol.asDiagonal(), eps, 0.05, 33);
  const double f = (1.0 + eps) * (1.0 + eps);
  CHECK(r1.kappa_after <= f * r2.kappa_after * (1.0 + 1e-9));
  CHECK(r2.kappa_after <= f * r1.kappa_after * (1.0 + 1e-9));
}

TEST_CASE("jacobi examples") {
  MatrixXd k1 = VectorXd{{1.0, 100.0}}.asDiagonal();
  ScalingResult r1 = jacobi_scale(SymMatrix::from_dense(k1));
  CHECK(r1.kappa_after == doctest::Approx(1.0));

  MatrixXd k2(2, 2);
  k2 << 4, 1, 1, 1;
  ScalingResult r2 = jacobi_scale(SymMatrix::from_dense(k2));
  MatrixXd m = rescale(k2, r2.w);
  CHECK(m(0, 1) == doctest::Approx(0.5));
  CHECK(m(0, 0) == doctest::Approx(1.0));
  CHECK(r2.kappa_after == doctest::Approx(3.0));

  MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(jacobi_scale(SymMatrix::from_dense(bad)), NotPositiveDefiniteError);
}

TEST_CASE("jacobi lower-bound family") {
  // d = 16: kappa(jacobi) = d + sqrt(d) - 1 = 19 exactly
  {
    SymMatrix fam = jacobi_lower_bound_family(16);
    ScalingResult r = jacobi_scale(fam);
    CHECK(r.kappa_after == doctest::Approx(16.0 + 4.0 - 1.0).epsilon(1e-9));
  }
  // d = 4: rescaled block eigenvalues from the closed form
  {
    const Index d = 4;
    SymMatrix fam = jacobi_lower_bound_family(d);
    ScalingResult r = jacobi_scale(fam);
    VectorXd ev = exact_eigenvalues(rescale(fam.to_dense(), r.w));
    // expected: {2/5, 2/3 x3, 6/5 x3, 2}
    CHECK(ev[0] == doctest::Approx(2.0 / 5.0));
    CHECK(ev[1] == doctest::Approx(2.0 / 3.0));
    CHECK(ev[3] == doctest::Approx(2.0 / 3.0));
    CHECK(ev[4] == doctest::Approx(6.0 / 5.0));
    CHECK(ev[6] == doctest::Approx(6.0 / 5.0));
    CHECK(ev[7] == doctest::Approx(2.0));
    // improved scaling: top block a further 1/sqrt(d) down
    VectorXd wimp = r.w;
    for (Index i = 0; i < d; ++i) wimp[i] /= std::sqrt(static_cast<double>(d));
    const double kimp = condition_number(rescale(fam.to_dense(), wimp));
    CHECK(r.kappa_after / kimp >= 0.5 * std::sqrt(static_cast<double>(d)));
  }
}

TEST_CASE("prodkappa bound on random SPD pairs") {
  for (int t = 0; t < 100; ++t) {
    Rng rng(4300 + t);
    const Index d = 3 + (t % 18);
    MatrixXd a = random_spd(d, 0.2, 5.0, rng);
    MatrixXd b = random_spd(d, 0.1, 8.0, rng);
    MatrixXd as = dense_sqrt(a);
    CHECK(condition_number(MatrixXd(as * b * as)) <=
          condition_number(a) * condition_number(b) * (1.0 + 1e-9));
  }
}

TEST_CASE("jacobi quadratic and sparsity bounds against a planted scaling") {
  for (int t = 0; t < 25; ++t) {
    Rng rng(4500 + t);
    const Index d = 4 + (t % 10);
    MatrixXd g = random_spd(d, 1.0, 1.0 + 8.0 * rng.uniform(), rng);
    VectorXd dd(d);
    for (Index i = 0; i < d; ++i) dd[i] = std::pow(10.0, rng.uniform(-2.0, 2.0));
    MatrixXd k = dd.asDiagonal() * g * dd.asDiagonal();
    ScalingResult jac = jacobi_scale(SymMatrix::from_dense(k));
    const double planted = condition_number(g);  // feasible scaling w = d^-2
    CHECK(jac.kappa_after <= planted * planted * (1.0 + 1e-9));
    const double m = static_cast<double>(d);  // dense rows
    const double nnz = static_cast<double>(d) * d;
    CHECK(jac.kappa_after <= std::min(m, std::sqrt(nnz)) * planted * (1.0 + 1e-9));
  }
}

TEST_CASE("apply_poly_of_AWA examples") {
  Rng rng(61);

  // degree 0: P = I
  {
    ImplicitSqrtAccess acc{random_spd(5, 0.5, 2.0, rng), 4.0};
    PolyApprox p;
    p.coeffs = VectorXd::Constant(1, 1.0);
    p.lo = 0.0;
    p.hi = 4.0;
    VectorXd u = rng.unit_vec(5);
    Rng r1(62);
    VectorXd w = apply_poly_of_AWA(acc, VectorXd::Ones(5), p, u, 0.05, 0.05, r1);
    CHECK((w - u).norm() <= 0.05 * u.norm() + 1e-9);
  }

  // scalar: K = (4), W = (1): P = AWA = 4
  {
    ImplicitSqrtAccess acc{MatrixXd::Constant(1, 1, 4.0), 1.0};
    PolyApprox p;  // p(x) = x on [0, 5] in Chebyshev form: x = c + h T_1
    p.lo = 0.0;
    p.hi = 5.0;
    p.coeffs = VectorXd::Zero(2);
    p.coeffs[0] = 2.5;
    p.coeffs[1] = 2.5;
    VectorXd u = VectorXd::Constant(1, 1.0);
    Rng r1(63);
    VectorXd w = apply_poly_of_AWA(acc, VectorXd::Ones(1), p, u, 0.02, 0.05, r1);
    CHECK(w[0] == doctest::Approx(4.0).epsilon(0.02));
  }

  // d = 8, degree 3 polynomial vs the dense square-root oracle
  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    Rng rr(6400 + t);
    const Index d = 8;
    MatrixXd k = random_spd(d, 0.5, 3.0, rr);
    ImplicitSqrtAccess acc{k, 6.5};
    VectorXd wd(d);
    for (Index i = 0; i < d; ++i) wd[i] = rr.uniform(0.2, 1.5);
    MatrixXd a = dense_sqrt(k);
    MatrixXd awa = a * wd.asDiagonal() * a;
    const double hi = exact_extreme_eigs(awa).second * 1.05;
    // p(x) = x^3 as a Chebyshev interpolant on [0, hi]
    PolyApprox p;
    p.lo = 0.0;
    p.hi = hi;
    const int nodes = 8;
    p.coeffs = VectorXd::Zero(nodes);
    for (int kk = 0; kk < nodes; ++kk) {
      double acc2 = 0.0;
      for (int j = 0; j < nodes; ++j) {
        const double x = 0.5 * hi * (1.0 + std::cos(M_PI * (j + 0.5) / nodes));
        acc2 += x * x * x * std::cos(kk * M_PI * (j + 0.5) / nodes);
      }
      p.coeffs[kk] = (kk == 0 ? 1.0 : 2.0) * acc2 / nodes;
    }
    VectorXd u = rr.unit_vec(d);
    Rng r2(6500 + t);
    VectorXd w = apply_poly_of_AWA(acc, wd, p, u, 0.05, 0.05, r2);
    VectorXd truth = awa * awa * awa * u;
    if ((w - truth).norm() <= 0.05 * truth.norm() + 1e-9) ++ok;
  }
  CHECK(ok >= 19);
}

TEST_CASE("bilinear_through_A examples") {
  Rng rng(71);
  ImplicitSqrtAccess acc{VectorXd{{4.0, 9.0}}.asDiagonal(), 9.0 / 4.0 * 1.01};
  Rng r0(72);
  CHECK(bilinear_through_A(acc, rng.unit_vec(2), VectorXd::Zero(2), 0.1, 0.05, r0) ==
        0.0);
  Rng r1(73);
  const double b = bilinear_through_A(acc, VectorXd::Unit(2, 0), VectorXd::Unit(2, 0),
                                      0.05, 0.05, r1);
  CHECK(b == doctest::Approx(2.0).epsilon(0.05));

  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    Rng rr(7400 + t);
    const Index d = 10;
    MatrixXd k = random_spd(d, 0.5, 4.0, rr);
    ImplicitSqrtAccess acc2{k, 8.5};
    VectorXd u = rr.unit_vec(d), v = rr.normal_vec(d);
    Rng r2(7500 + t);
    const double est = bilinear_through_A(acc2, u, v, 0.05, 0.05, r2);
    const double truth = u.dot(dense_sqrt(k) * v);
    if (std::abs(est - truth) <= 0.05 * std::abs(truth) + 1e-9) ++ok;
  }
  CHECK(ok >= 19);
}

TEST_CASE("well_conditioned_rescale") {
  const double eps = 0.4;

  // K = I: near-uniform weights
  {
    ImplicitSqrtAccess acc{MatrixXd::Identity(4, 4), 1.01};
    VectorXd w = well_conditioned_rescale(acc, 1.0, eps, 0.05, 81);
    CHECK(condition_number(rescale(acc.K, w)) <= 1.0 + eps);
  }

  // K = [[2,1],[1,2]]: kappa* = 3 by symmetry
  {
    MatrixXd k(2, 2);
    k << 2, 1, 1, 2;
    ImplicitSqrtAccess acc{k, 3.1};
    VectorXd w = well_conditioned_rescale(acc, 3.0, eps, 0.05, 82);
    CHECK(condition_number(rescale(k, w)) <= (1.0 + eps) * 3.0 * (1.0 + 1e-9));
  }

  // random bounded-spectrum K vs a log-grid searched diagonal
  {
    Rng rng(83);
    const Index d = 6;
    MatrixXd k = random_spd(d, 1.0, 2.7, rng);  // kappa(K) <= 2.7
    ImplicitSqrtAccess acc{k, 3.0};
    VectorXd w = well_conditioned_rescale(acc, 1.5, eps, 0.05, 84);
    const double ours = condition_number(rescale(k, w));
    // grid-search oracle over per-axis log grid (coordinate descent passes)
    VectorXd wg = VectorXd::Ones(d);
    double best = condition_number(k);
    for (int pass = 0; pass < 6; ++pass) {
      for (Index i = 0; i < d; ++i) {
        double best_wi = wg[i];
        for (int g = 0; g < 10; ++g) {
          VectorXd trial = wg;
          trial[i] = std::pow(10.0, -1.0 + 2.0 * g / 9.0);
          const double c = condition_number(rescale(k, trial));
          if (c < best) {
            best = c;
            best_wi = trial[i];
          }
        }
        wg[i] = best_wi;
      }
    }
    CHECK(ours <= (1.0 + eps) * best * 1.1 * (1.0 + 1e-9));
  }
}

TEST_CASE("outer_scale examples") {
  const double eps = 0.4;

  ScalingResult r1 = outer_scale(SymMatrix::from_dense(VectorXd{{1.0, 9.0}}.asDiagonal()),
                                 eps, 0.05, 91);
  CHECK(r1.kappa_after <= 1.0 + eps);

  MatrixXd k2(2, 2);
  k2 << 2, 1, 1, 2;
  ScalingResult r2 = outer_scale(SymMatrix::from_dense(k2), eps, 0.05, 92);
  CHECK(r2.kappa_after <= (1.0 + eps) * 3.0 * (1.0 + 1e-9));
  CHECK(r2.kappa_after >= 3.0 / (1.0 + eps));

  VectorXd dd(2);
  dd << 1.0, 1000.0;
  MatrixXd k3 = dd.asDiagonal() * k2 * dd.asDiagonal();
  ScalingResult r3 = outer_scale(SymMatrix::from_dense(k3), eps, 0.05, 93);
  CHECK(r3.kappa_after <= (1.0 + eps) * 3.0 * (1.0 + 1e-9));

  // never worse than jacobi by more than (1+eps)
  ScalingResult jac = jacobi_scale(SymMatrix::from_dense(k3));
  CHECK(r3.kappa_after <= (1.0 + eps) * jac.kappa_after * (1.0 + 1e-9));
}
