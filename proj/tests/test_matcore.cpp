#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "mdr/eig.hpp"
#include "mdr/errors.hpp"
#include "mdr/matrix_market.hpp"
#include "mdr/pcg.hpp"
#include "test_helpers.hpp"

using namespace mdr;
using mdr_test::random_spd;

TEST_CASE("power_top_eig basic ranges") {
  Rng rng(1);
  CHECK(power_top_eig(op_identity(5), 0.01, rng) == doctest::Approx(1.0).epsilon(0.11));

  VectorXd d3(3);
  d3 << 1, 2, 4;
  Rng rng2(2);
  double v = power_top_eig(op_diag(d3), 0.01, rng2);
  CHECK(v >= 3.6);
  CHECK(v <= 4.0 + 1e-9);

  VectorXd u(4);
  u << 1.5, -1.5, 1.5, 1.5;  // norm 3
  MatrixXd uu = u * u.transpose();
  Rng rng3(3);
  double r1 = power_top_eig(op_from_dense(uu), 0.01, rng3);
  CHECK(r1 >= 8.1);
  CHECK(r1 <= 9.0 + 1e-9);
}

TEST_CASE("power_top_eig hits [0.9, 1] of lambda_max on random PSD") {
  int ok = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng rng(1000 + t);
    MatrixXd a = random_spd(50, 0.1, 25.0, rng);
    auto [lo, hi] = exact_extreme_eigs(a);
    (void)lo;
    Rng prng(5000 + t);
    double v = power_top_eig(op_from_dense(a), 0.05, prng);
    if (v >= 0.9 * hi - 1e-9 && v <= hi + 1e-9) ++ok;
  }
  CHECK(ok >= 190);
}

TEST_CASE("power_top_eig propagates numeric failure") {
  SpectralOperator bad;
  bad.dim = 3;
  bad.apply_block = [](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    y = x * std::numeric_limits<double>::quiet_NaN();
  };
  Rng rng(9);
  CHECK_THROWS_AS(power_top_eig(bad, 0.1, rng), NumericError);
}

TEST_CASE("exact_extreme_eigs examples") {
  MatrixXd d = VectorXd{{3.0, 1.0, 7.0}}.asDiagonal();
  auto [lo, hi] = exact_extreme_eigs(d);
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi == doctest::Approx(7.0));

  MatrixXd m(2, 2);
  m << 1, 0.5, 0.5, 1;
  auto [l2, h2] = exact_extreme_eigs(m);
  CHECK(l2 == doctest::Approx(0.5));
  CHECK(h2 == doctest::Approx(1.5));

  MatrixXd path2(2, 2);
  path2 << 1, -1, -1, 1;
  auto [l3, h3] = exact_extreme_eigs(path2);
  CHECK(l3 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(h3 == doctest::Approx(2.0));
}

TEST_CASE("condition_number examples") {
  CHECK(condition_number(MatrixXd::Identity(4, 4)) == doctest::Approx(1.0));
  MatrixXd d = VectorXd{{1.0, 100.0}}.asDiagonal();
  CHECK(condition_number(d) == doctest::Approx(100.0));
  MatrixXd m(2, 2);
  m << 4, 1, 1, 1;
  const double s = std::sqrt(13.0);
  CHECK(condition_number(m) == doctest::Approx((5 + s) / (5 - s)).epsilon(1e-10));
  MatrixXd sing(2, 2);
  sing << 1, 1, 1, 1;
  CHECK_THROWS_AS(condition_number(sing), NotPositiveDefiniteError);
}

TEST_CASE("pcg examples") {
  Rng rng(11);
  VectorXd b = rng.normal_vec(6);
  VectorXd x = pcg_solve(op_identity(6), solve_access_identity(6), b, 1e-10);
  CHECK((x - b).norm() <= 1e-10 * b.norm());

  VectorXd d(3);
  d << 1, 10, 100;
  VectorXd ones = VectorXd::Ones(3);
  PcgOptions opts;
  opts.kappa_a = 100.0;
  VectorXd y = pcg_solve(op_diag(d), solve_access_diag(d), ones, 1e-9, opts);
  CHECK(std::abs(y[0] - 1.0) <= 1e-8);
  CHECK(std::abs(y[1] - 0.1) <= 1e-8);
  CHECK(std::abs(y[2] - 0.01) <= 1e-8);

  // path Laplacian on 5 nodes + 1e-3 I, diagonal preconditioner
  MatrixXd l = MatrixXd::Zero(5, 5);
  for (int i = 0; i + 1 < 5; ++i) {
    l(i, i) += 1;
    l(i + 1, i + 1) += 1;
    l(i, i + 1) -= 1;
    l(i + 1, i) -= 1;
  }
  l.diagonal().array() += 1e-3;
  Rng rng2(17);
  VectorXd rhs = rng2.normal_vec(5);
  PcgOptions lopts;
  lopts.kappa_a = 2.001 / 1e-3;
  VectorXd sol = pcg_solve(op_from_dense(l), solve_access_diag(l.diagonal()), rhs, 1e-6,
                           lopts);
  CHECK((l * sol - rhs).norm() <= 1e-6 * rhs.norm());
}

TEST_CASE("pcg relative-error contract on random SPD systems") {
  for (int t = 0; t < 100; ++t) {
    Rng rng(900 + t);
    const Index d = 4 + (t % 97);
    MatrixXd a = random_spd(d, 0.05, 20.0, rng);
    VectorXd b = rng.normal_vec(d);
    PcgOptions opts;
    opts.kappa_a = 400.0 * 1.01;
    VectorXd x = pcg_solve(op_from_dense(a), solve_access_diag(a.diagonal()), b, 1e-7,
                           opts);
    VectorXd exact = a.llt().solve(b);
    CHECK((x - exact).norm() <= 1e-7 * exact.norm() + 1e-13);
  }
}

TEST_CASE("pcg budget error carries residual") {
  MatrixXd a = MatrixXd::Identity(40, 40);
  a.diagonal().tail(1)[0] = 1e8;
  Rng rng(5);
  VectorXd b = rng.normal_vec(40);
  PcgOptions opts;
  opts.max_iter = 1;
  opts.kappa_a = 1e8;
  bool threw = false;
  try {
    pcg_solve(op_from_dense(a), solve_access_identity(40), b, 1e-12, opts);
  } catch (const NoConvergenceError& e) {
    threw = true;
    CHECK(e.residual > 0.0);
  }
  CHECK(threw);
}

TEST_CASE("operator linearity and symmetry probes") {
  Rng rng(77);
  MatrixXd a = random_spd(12, 0.2, 5.0, rng);
  SpectralOperator op = op_from_dense(a);
  Rng probe(78);
  CHECK(operator_linearity_defect(op, probe) <= 1e-8);
  CHECK(operator_symmetry_defect(op, probe) <= 1e-8);

  SpectralOperator proj = op_ones_complement_projector(9);
  Rng probe2(79);
  CHECK(operator_linearity_defect(proj, probe2) <= 1e-8);
  CHECK(operator_symmetry_defect(proj, probe2) <= 1e-8);
}

TEST_CASE("matrix market round trips") {
  Rng rng(21);
  MatrixXd a = random_spd(7, 0.5, 4.0, rng);
  SymMatrix s = SymMatrix::from_dense(a);
  const char* path = "mm_dense_test.mtx";
  write_matrix_market(path, s);
  SymMatrix r = read_matrix_market(path);
  CHECK((r.to_dense() - s.to_dense()).cwiseAbs().maxCoeff() <= 1e-15);
  std::remove(path);

  std::vector<Triplet> t{{0, 0, 2.0}, {0, 2, -0.5}, {1, 1, 3.0}, {2, 2, 1.0}};
  SymMatrix sp = SymMatrix::from_triplets(3, t);
  write_matrix_market(path, sp);
  SymMatrix rp = read_matrix_market(path);
  CHECK((rp.to_dense() - sp.to_dense()).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path);

  VectorXd v = rng.normal_vec(5);
  write_vector("vec_test.mtx", v);
  VectorXd u = read_vector("vec_test.mtx");
  CHECK((u - v).cwiseAbs().maxCoeff() == 0.0);
  std::remove("vec_test.mtx");
}

TEST_CASE("matrix market parse errors name the location") {
  const char* path = "mm_bad_test.mtx";
  FILE* f = std::fopen(path, "w");
  std::fputs("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 1 bogus\n", f);
  std::fclose(f);
  bool threw = false;
  try {
    read_matrix_market(path);
  } catch (const IoError& e) {
    threw = true;
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  CHECK(threw);
  std::remove(path);
}
