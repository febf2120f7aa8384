#ifndef MDR_PCG_HPP
#define MDR_PCG_HPP

#include "mdr/operators.hpp"

namespace mdr {

struct PcgOptions {
  int max_iter = 0;        // 0 = auto (10*d + 1000)
  double kappa_a = 0.0;    // known bound on kappa(A); sharpens the stop rule
  bool project_ones = false;  // Laplacian-like kernel handling
  double stall_tol = 0.25;    // declare stagnation if no progress by this factor
};

struct PcgStats {
  int iterations = 0;
  double residual = 0.0;  // ||Ax - b|| / ||b||
};

// Preconditioned conjugate gradient. Returns x with
// ||x - A^+ b||_2 <= eps ||A^+ b||_2 for SPD A (or PSD sharing kernel with b
// in the image, with project_ones); the stop rule is residual-based, tightened
// by kappa_a when provided. Budget exhaustion raises NoConvergenceError
// carrying the relative residual.
VectorXd pcg_solve(const SpectralOperator& a, const SolveAccess& p, const VectorXd& b,
                   double eps, const PcgOptions& opts = {}, PcgStats* stats = nullptr);

}  // namespace mdr

#endif
