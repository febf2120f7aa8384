#ifndef MDR_TEST_HELPERS_HPP
#define MDR_TEST_HELPERS_HPP

#include <Eigen/Dense>

#include "mdr/rng.hpp"

namespace mdr_test {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Random SPD matrix with eigenvalues drawn log-uniformly from [lo, hi].
inline MatrixXd random_spd(Eigen::Index d, double lo, double hi, mdr::Rng& rng) {
  MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  VectorXd ev(d);
  for (Eigen::Index i = 0; i < d; ++i)
    ev[i] = lo * std::pow(hi / lo, rng.uniform());
  ev[0] = lo;
  if (d > 1) ev[d - 1] = hi;
  return q * ev.asDiagonal() * q.transpose();
}

// Random orthogonal matrix.
inline MatrixXd random_orthogonal(Eigen::Index d, mdr::Rng& rng) {
  MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  return qr.householderQ();
}

inline MatrixXd dense_exp_neg(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  return es.eigenvectors() *
         (-es.eigenvalues().array()).exp().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

inline MatrixXd dense_sqrt(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace mdr_test

#endif
