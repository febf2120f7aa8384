#ifndef MDR_MDR_SOLVER_HPP
#define MDR_MDR_SOLVER_HPP

#include <optional>
#include <string>
#include <vector>

#include "mdr/dictionary.hpp"
#include "mdr/exp_estimators.hpp"
#include "mdr/packing.hpp"
#include "mdr/sqrt_ops.hpp"

namespace mdr {

// Solver constants. Zeros mean the algorithm-box defaults: step size
// eps/(10 kappa), iteration cap ceil(10 log d / (eta eps)), exit threshold
// 12 log d / eps, oracle-value threshold 1 - eps/5, eps/10 estimator splits.
struct MdrConfig {
  double eps = 0.1;
  double delta = 0.01;
  std::uint64_t seed = 1;

  double eta = 0.0;
  long iter_cap = 0;
  double exit_threshold_mult = 12.0;
  double oracle_value_threshold = 0.0;
  double estimator_split = 10.0;

  // Desk-scale engineering knobs.
  int poll_every = 10;       // dense-oracle certificate polling; 0 disables
  int lmin_check_every = 0;  // 0 = auto from the 12R vs 14R threshold margin
  double kappa_cap = 1e9;    // doubling cap in the incremental search
  int packing_iters = 1500;
  double packing_moment_err = 0.0;  // estimator-backed moment oracles
  bool debug_dense_exp = false;     // d <= 40 cross-check of Line-6 outputs
};

struct MdrTelemetry {
  long iterations = 0;
  long packing_calls = 0;
  long lmin_checks = 0;
  long polls = 0;
  double last_tau = 0.0;
  double gain_lmax_bound = 0.0;  // max certified lambda_max(sum_i [x_t]_i M_i)
  std::vector<double> oracle_values;  // kappa <x_t, v_t> per iteration
  std::string exit_reason;
};

struct PhaseRecord {
  double lambda = 0.0;
  double lower = 0.0;  // certified generalized-eigenvalue range vs the
  double upper = 0.0;  // phase constraint after rescaling
};

struct MdrCertificate {
  bool yes = false;
  VectorXd w;             // weights over the dictionary's normalized items
  double kappa_hat = 0.0; // certified sandwich ratio
  MdrTelemetry telemetry;
  std::vector<PhaseRecord> homotopy_log;
};

// Estimator surface consumed by the tester. The default set runs the
// sketched exponential estimators on the explicit factor stack; the scaling
// module substitutes implicit-square-root variants through the same hooks.
struct MdrEstimators {
  // numerators {<M_i, exp(-(S - shift I))>} and Tr exp(-(S - shift I)),
  // S = sum_i accum_w_i M_i with spectrum window [lo, hi] after the shift
  std::function<DictExpResult(const VectorXd& accum_w, double shift, double lo,
                              double hi, double eps, double c, double delta,
                              std::uint64_t seed)>
      line6;
  // additive-R approximation of lambda_min(S)
  std::function<double(const VectorXd& accum_w, double shift, double lmax_bound,
                       double eps, double delta, std::uint64_t seed)>
      line13;
  // p-th moment oracle over the constraint dictionary
  PackingMomentOracle packing_moments;
  // exact extreme eigenvalues of M(w) when a dense certifier is available
  std::function<std::pair<double, double>(const VectorXd& w)> gain_extremes;
  // exact lambda_max over the constraint dictionary (packing certificates)
  std::function<double(const VectorXd& w)> constraint_lmax;
};

MdrEstimators default_estimators(const MatrixDictionary& gain_dict,
                                 const MatrixDictionary& constraint_dict,
                                 bool debug_dense_exp = false);

enum class MdrAnswer { Yes, No };

struct MdrDecision {
  MdrAnswer answer = MdrAnswer::No;
  VectorXd w;
  double kappa_hat = 0.0;  // certified ratio when the oracle was consulted
  MdrTelemetry telemetry;
};

// Algorithm-1 tester: Yes whenever the sandwich is feasible at (1-eps)kappa
// (with a witness at (1+eps)kappa), No only when the oracle-value test
// fires; probability >= 1-delta over the estimator randomness.
// constraint_dict, when given, replaces the packing feasibility matrices
// (the computational-statistical tradeoff modification).
MdrDecision decide_structured_mpc(const MatrixDictionary& dict, double kappa,
                                  const MdrConfig& cfg,
                                  const MdrEstimators* est = nullptr,
                                  const MatrixDictionary* constraint_dict = nullptr);

// Dictionary-free core (implicit items): everything flows through the
// estimator hooks. constraint_dim = 0 means the gain dimension.
MdrDecision decide_structured_mpc_raw(Index dim, Index n, double kappa,
                                      const MdrConfig& cfg, const MdrEstimators& est,
                                      Index constraint_dim = 0);

MdrCertificate solve_identity_raw(Index dim, Index n, double eps, double delta,
                                  std::uint64_t seed, const MdrConfig* base,
                                  const MdrEstimators& est, double kappa_hint = 0.0,
                                  Index constraint_dim = 0);

// Identity-constraint optimizer: weights with I-relative sandwich ratio
// <= (1+eps) kappa*, found by doubling then binary refinement.
// fold_weights rescales items by a warm start before solving.
MdrCertificate solve_identity(const MatrixDictionary& dict, double eps, double delta,
                              std::uint64_t seed, const MdrConfig* base = nullptr,
                              const MdrEstimators* est = nullptr,
                              double kappa_hint = 0.0,
                              const VectorXd* fold_weights = nullptr);

// (M(w) + shift I)^-1 solver family over normalized item weights.
using DictShiftedSolver = std::function<SolveAccess(const VectorXd& w, double shift)>;

// Dense-backed default (Cholesky of the combined matrix per shift).
DictShiftedSolver dense_dict_solver(const MatrixDictionary& dict);

struct GeneralSolveInputs {
  SpectralOperator b;
  std::optional<MatrixXd> b_dense;  // enables oracle phase certification
  DictShiftedSolver dict_solver;
  double alpha = 0.0;
  double beta = 0.0;
  bool project_ones = false;
  std::optional<VectorXd> warm_start;  // weights over normalized items
};

// General-constraint solver via the homotopy over B + lambda_k M(1) with
// inverse-square-root conjugation per phase.
MdrCertificate solve_general(const MatrixDictionary& dict, const GeneralSolveInputs& in,
                             double eps, double delta, std::uint64_t seed,
                             const MdrConfig* base = nullptr);

}  // namespace mdr

#endif
