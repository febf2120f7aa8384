#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdr/kernels.hpp"
#include "mdr/sym_matrix.hpp"
#include "test_helpers.hpp"

using namespace mdr;
using mdr_test::random_spd;

TEST_CASE("serial and parallel kernels agree bitwise") {
  Rng rng(42);
  const Index d = 63, C = 7;
  MatrixXd a = random_spd(d, 0.5, 8.0, rng);
  MatrixXd x(d, C);
  for (Index i = 0; i < d; ++i)
    for (Index c = 0; c < C; ++c) x(i, c) = rng.normal();

  MatrixXd ys(d, C), yp(d, C);
  kern::sym_dense_apply(a, x, ys, kern::Mode::Serial);
  kern::sym_dense_apply(a, x, yp, kern::Mode::Parallel);
  CHECK((ys - yp).cwiseAbs().maxCoeff() == 0.0);

  MatrixXd b(d, 29);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < 29; ++j) b(i, j) = rng.normal();
  VectorXd w(29);
  for (Index j = 0; j < 29; ++j) w[j] = rng.uniform(0.0, 2.0);
  kern::factor_gram_apply(b, w, x, ys, kern::Mode::Serial);
  kern::factor_gram_apply(b, w, x, yp, kern::Mode::Parallel);
  CHECK((ys - yp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("factor_gram_apply matches the dense product") {
  Rng rng(7);
  const Index d = 20, F = 11, C = 3;
  MatrixXd b(d, F), x(d, C);
  for (Index i = 0; i < d; ++i) {
    for (Index f = 0; f < F; ++f) b(i, f) = rng.normal();
    for (Index c = 0; c < C; ++c) x(i, c) = rng.normal();
  }
  VectorXd w(F);
  for (Index f = 0; f < F; ++f) w[f] = rng.uniform(0.0, 3.0);
  MatrixXd y(d, C);
  kern::factor_gram_apply(b, w, x, y, kern::Mode::Parallel);
  MatrixXd ref = b * w.asDiagonal() * b.transpose() * x;
  CHECK((y - ref).norm() <= 1e-12 * ref.norm());
}

TEST_CASE("sparse apply mirrors the stored triangle") {
  std::vector<Triplet> t{{0, 0, 2.0}, {0, 1, -1.0}, {1, 1, 2.0}, {1, 2, -1.0}, {2, 2, 2.0}};
  SymMatrix s = SymMatrix::from_triplets(3, t);
  MatrixXd dense = s.to_dense();
  Rng rng(3);
  VectorXd x = rng.normal_vec(3);
  CHECK((s.apply(x) - dense * x).norm() <= 1e-14);

  MatrixXd xb(3, 4);
  for (Index i = 0; i < 3; ++i)
    for (Index c = 0; c < 4; ++c) xb(i, c) = rng.normal();
  MatrixXd ys(3, 4), yp(3, 4);
  s.apply_block(xb, ys);
  kern::Mode saved = kern::mode();
  kern::set_mode(kern::Mode::Serial);
  s.apply_block(xb, yp);
  kern::set_mode(saved);
  CHECK((ys - yp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grouped column norms") {
  MatrixXd a(3, 4);
  a << 1, 0, 2, 0, 0, 3, 0, 1, 0, 0, 0, 2;
  std::vector<Index> ptr{0, 2, 4};
  VectorXd out;
  kern::grouped_colnorms(a, ptr, out, kern::Mode::Serial);
  CHECK(out[0] == doctest::Approx(1 + 9));
  CHECK(out[1] == doctest::Approx(4 + 1 + 4));
}
