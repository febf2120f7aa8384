#ifndef MDR_SCALING_HPP
#define MDR_SCALING_HPP

#include <string>

#include "mdr/mdr_solver.hpp"
#include "mdr/sym_matrix.hpp"

namespace mdr {

struct ScalingResult {
  VectorXd w;  // row weights (inner) or diagonal weights (outer/jacobi)
  double kappa_before = 0.0;
  double kappa_after = 0.0;
  bool kappa_exact = true;  // dense oracle vs iterative estimate above the cap
  std::string mode;
  MdrTelemetry telemetry;
  std::vector<PhaseRecord> homotopy_log;
};

// Row reweighting with kappa(A^T W A) <= (1+eps) kappa_i*(A).
ScalingResult inner_scale(const MatrixXd& a, double eps, double delta,
                          std::uint64_t seed, const MdrConfig* base = nullptr);

// w_i = 1/K_ii; the rescaled matrix has unit diagonal.
ScalingResult jacobi_scale(const SymMatrix& k);

// The 2d x 2d block family blockdiag(sqrt(d) I + 11^T, I - 11^T/(sqrt(d)+d))
// whose Jacobi scaling is a Theta(sqrt(d)) factor off optimal.
SymMatrix jacobi_lower_bound_family(Index d);

// Symmetric diagonal scaling with kappa(W^1/2 K W^1/2) <= (1+eps) kappa_o*(K):
// Jacobi pre-scaling, then the homotopy over K + lambda_k I with the
// implicit-square-root solver per phase.
ScalingResult outer_scale(const SymMatrix& k, double eps, double delta,
                          std::uint64_t seed, const MdrConfig* base = nullptr);

// Implicit access to A = K^(1/2): only K is stored; every A-product flows
// through square-root polynomial application.
struct ImplicitSqrtAccess {
  MatrixXd K;
  double kappa_scale = 1.0;  // certified bound on kappa(K)
};

// w ~ P u for P a polynomial in A W A, realized as
// apply_sqrt . (explicit polynomial in K, W) . apply_sqrt.
VectorXd apply_poly_of_AWA(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                           const PolyApprox& poly, const VectorXd& u, double eps,
                           double delta, Rng& rng);

// eps-multiplicative estimate of u^T A v.
double bilinear_through_A(const ImplicitSqrtAccess& acc, const VectorXd& u,
                          const VectorXd& v, double eps, double delta, Rng& rng);

// Diagonal W with kappa(W^1/2 K W^1/2) <= (1+eps) kappa*, for K already
// well-conditioned (kappa(K) <= 3 kappa*, caller-certified). The tester runs
// against the implicit row dictionary of A = K^(1/2).
VectorXd well_conditioned_rescale(const ImplicitSqrtAccess& acc, double kappa_star,
                                  double eps, double delta, std::uint64_t seed,
                                  const MdrConfig* base = nullptr,
                                  MdrCertificate* cert_out = nullptr);

// Estimator hooks of the implicit tester (exposed for verification):
// eps-multiplicative Tr exp(-(A W A - shift I)) and the row inner products,
// lambda_min to additive O(log d), and the packing p-th moments.
double sqrt_trace_exp(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                      double shift, double lo, double hi, double eps, double delta,
                      Rng& rng);
VectorXd sqrt_dict_inner(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                         double shift, double lo, double hi, double eps, double c,
                         double delta, Rng& rng);
double sqrt_lambda_min(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                       double eps, double delta, Rng& rng);
double packing_moments_trace(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                             int p);
VectorXd packing_moments_inner(const ImplicitSqrtAccess& acc, const VectorXd& wdiag,
                               int p);

}  // namespace mdr

#endif
