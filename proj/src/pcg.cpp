#include "mdr/pcg.hpp"

#include <cmath>
#include <limits>

#include "mdr/errors.hpp"

namespace mdr {

VectorXd pcg_solve(const SpectralOperator& a, const SolveAccess& p, const VectorXd& b,
                   double eps, const PcgOptions& opts, PcgStats* stats) {
  const Index d = a.dim;
  if (b.size() != d) throw ValidationError("pcg_solve: size mismatch");
  if (eps <= 0.0) throw ValidationError("pcg_solve: eps > 0 required");

  auto project = [&](VectorXd& v) {
    if (opts.project_ones) v.array() -= v.mean();
  };

  VectorXd rhs = b;
  project(rhs);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    if (stats) *stats = {0, 0.0};
    return VectorXd::Zero(d);
  }

  // Residual target: ||x - A^+ b|| <= ||A^+|| ||r|| and ||A^+ b|| >= ||b||/lmax,
  // so ||r||/||b|| <= eps / kappa(A) certifies the relative-error contract.
  // Floored at the roundoff level reachable by double-precision recurrences.
  const double target = std::max(eps * bnorm / std::max(1.0, opts.kappa_a),
                                 200.0 * std::numeric_limits<double>::epsilon() * bnorm);

  const int max_iter = opts.max_iter > 0 ? opts.max_iter
                                         : static_cast<int>(10 * d + 1000);

  VectorXd x = VectorXd::Zero(d);
  VectorXd r = rhs;
  VectorXd z = p.solve(r, 0.1);
  project(z);
  VectorXd q = z;
  double rho = r.dot(z);
  double best_res = r.norm();

  int it = 0;
  int stall = 0;
  for (; it < max_iter; ++it) {
    if (r.norm() <= target) break;
    // Roundoff stagnation: accept if the plain eps-level residual was reached.
    if (stall > 80) {
      if (best_res <= eps * bnorm) break;
      throw NoConvergenceError("pcg_solve: stagnated at relative residual " +
                                   std::to_string(best_res / bnorm),
                               best_res / bnorm);
    }
    VectorXd aq = a.apply(q);
    project(aq);
    if (!aq.allFinite()) throw NumericError("pcg_solve: non-finite matvec output");
    const double qaq = q.dot(aq);
    if (qaq <= 0.0) {
      // Direction fell into the kernel or A is not PSD along q.
      if (r.norm() <= eps * bnorm) break;
      throw NoConvergenceError("pcg_solve: non-positive curvature", r.norm() / bnorm);
    }
    const double alpha = rho / qaq;
    x += alpha * q;
    r -= alpha * aq;
    project(r);
    z = p.solve(r, 0.1);
    project(z);
    const double rho_next = r.dot(z);
    const double beta = rho_next / rho;
    rho = rho_next;
    q = z + beta * q;
    if (r.norm() < best_res * (1.0 - opts.stall_tol * 0.01))
      stall = 0;
    else
      ++stall;
    best_res = std::min(best_res, r.norm());
  }

  const double rel = r.norm() / bnorm;
  if (it >= max_iter && r.norm() > target) {
    throw NoConvergenceError(
        "pcg_solve: iteration budget " + std::to_string(max_iter) +
            " exhausted at relative residual " + std::to_string(rel),
        rel);
  }
  if (stats) *stats = {it, rel};
  return x;
}

}  // namespace mdr
