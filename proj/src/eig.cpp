#include "mdr/eig.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdlib>

#include "mdr/errors.hpp"

namespace mdr {

Index dense_cap() {
  static Index cap = [] {
    if (const char* env = std::getenv("MDR_DENSE_CAP")) {
      long v = std::atol(env);
      if (v > 0) return static_cast<Index>(v);
    }
    return static_cast<Index>(2000);
  }();
  return cap;
}

double power_top_eig(const SpectralOperator& op, double delta, Rng& rng) {
  if (delta <= 0.0 || delta >= 1.0) throw ValidationError("power_top_eig: delta in (0,1)");
  const Index d = op.dim;
  const int steps = static_cast<int>(std::ceil(10.0 * std::log(static_cast<double>(d) /
                                                               std::min(delta, 0.5)))) + 5;
  VectorXd v = rng.unit_vec(d);
  for (int it = 0; it < steps; ++it) {
    VectorXd w = op.apply(v);
    if (!w.allFinite()) throw NumericError("power_top_eig: non-finite matvec output");
    const double n = w.norm();
    if (n == 0.0) return 0.0;  // hit the kernel exactly
    v = w / n;
  }
  VectorXd w = op.apply(v);
  if (!w.allFinite()) throw NumericError("power_top_eig: non-finite matvec output");
  return w.norm();
}

std::pair<double, double> exact_extreme_eigs(const MatrixXd& k) {
  if (k.rows() > dense_cap())
    throw CapExceededError("exact_extreme_eigs: dimension " + std::to_string(k.rows()) +
                           " exceeds dense cap " + std::to_string(dense_cap()));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (k + k.transpose()),
                                             Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("exact_extreme_eigs: solver failed");
  const VectorXd& ev = es.eigenvalues();
  return {ev[0], ev[ev.size() - 1]};
}

std::pair<double, double> exact_extreme_eigs(const SymMatrix& k) {
  if (k.dim() > dense_cap())
    throw CapExceededError("exact_extreme_eigs: dimension " + std::to_string(k.dim()) +
                           " exceeds dense cap " + std::to_string(dense_cap()));
  return exact_extreme_eigs(k.to_dense());
}

VectorXd exact_eigenvalues(const MatrixXd& k) {
  if (k.rows() > dense_cap()) throw CapExceededError("exact_eigenvalues: above dense cap");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (k + k.transpose()),
                                             Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("exact_eigenvalues: solver failed");
  return es.eigenvalues();
}

namespace {

// Orthonormal basis of the complement of the all-ones direction.
MatrixXd ones_complement_basis(Index n) {
  MatrixXd q = MatrixXd::Zero(n, n - 1);
  // Householder-free explicit basis: q_k = (e_1 + ... + e_k - k e_{k+1}) / sqrt(k(k+1))
  for (Index k = 1; k < n; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (Index i = 0; i < k; ++i) q(i, k - 1) = s;
    q(k, k - 1) = -s * static_cast<double>(k);
  }
  return q;
}

}  // namespace

double condition_number(const MatrixXd& k, bool laplacian_like) {
  MatrixXd work = k;
  if (laplacian_like) {
    MatrixXd q = ones_complement_basis(k.rows());
    work = q.transpose() * k * q;
  }
  auto [lo, hi] = exact_extreme_eigs(work);
  const double tol = 1e-12 * std::max(1.0, std::abs(hi));
  if (lo <= tol)
    throw NotPositiveDefiniteError("condition_number: lambda_min <= 0 for SPD input");
  return hi / lo;
}

double condition_number(const SymMatrix& k, bool laplacian_like) {
  return condition_number(k.to_dense(), laplacian_like);
}

std::pair<double, double> generalized_eig_range(const MatrixXd& m, const MatrixXd& b,
                                                bool restrict_to_ones_complement) {
  MatrixXd mm = 0.5 * (m + m.transpose());
  MatrixXd bb = 0.5 * (b + b.transpose());
  if (restrict_to_ones_complement) {
    MatrixXd q = ones_complement_basis(m.rows());
    mm = q.transpose() * mm * q;
    bb = q.transpose() * bb * q;
  }
  if (mm.rows() > dense_cap()) throw CapExceededError("generalized_eig_range: above cap");
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(mm, bb, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("generalized_eig_range: solver failed");
  const VectorXd& ev = es.eigenvalues();
  return {ev[0], ev[ev.size() - 1]};
}

}  // namespace mdr
