#ifndef MDR_PACKING_HPP
#define MDR_PACKING_HPP

#include <functional>
#include <optional>

#include "mdr/dictionary.hpp"

namespace mdr {

// Quantities the packing tester consumes per iteration: p-th moment trace,
// the (p-1)-power trace, and all dictionary inner products against M^{p-1},
// for M = sum_i w_i M_i with explicitly given nonnegative weights. The
// default oracle computes them exactly from dense powers at desk scale;
// the scaling module substitutes sketched estimators through this hook.
struct PackingGradient {
  // Quantities of M / norm_scale; the tester undoes the normalization where
  // it matters (p-th powers overflow doubles otherwise).
  double trace_p = 0.0;
  double trace_pm1 = 0.0;
  VectorXd inner_pm1;
  double norm_scale = 1.0;
};
using PackingMomentOracle = std::function<PackingGradient(const VectorXd& w, int p)>;

PackingMomentOracle exact_moment_oracle(const MatrixDictionary& dict);

struct PackingOptions {
  int max_iters = 1500;
  double step_scale = 1.0;
  int p = 0;      // 0 = auto: odd with d^(1/p) <= 1 + eps/6, capped at p_cap
  int p_cap = 199;
  double oracle_rel_err = 0.0;  // moment oracle multiplicative error margin
  std::optional<VectorXd> warm_start;  // simplex point
  // Exact lambda_max of M(w): sharpens the Feasible certificate when the
  // soft-max bound alone is blunted by the p cap.
  std::function<double(const VectorXd& w)> exact_lmax;
};

enum class PackingAnswer { Feasible, Infeasible };

struct PackingTestResult {
  PackingAnswer answer = PackingAnswer::Infeasible;
  VectorXd w;               // simplex witness (Feasible case)
  double certified_lambda_max = 0.0;  // p-norm upper bound at the witness
  int iterations = 0;
};

// eps-approximate tester for: does w in the simplex exist with
// sum_i w_i M_i <= C*I? Returns Feasible (with witness) whenever the
// (1-eps)C problem is feasible, Infeasible whenever the (1+eps)C problem is
// not, either in between; exhausted budget without a certificate raises
// BudgetError.
PackingTestResult packing_test(const MatrixDictionary& dict, double C, double eps,
                               double delta, Rng& rng,
                               const PackingMomentOracle* oracle = nullptr,
                               const PackingOptions& opts = {});

struct PackingInstance {
  const MatrixDictionary* dict = nullptr;
  VectorXd v;               // nonnegative objective
  double opt_minus = 0.0;   // bracket; 0 = use analytic default
  double opt_plus = 0.0;
};

struct PackingSolution {
  VectorXd w;
  double value = 0.0;
  double certified_feasibility_slack = 0.0;  // realized lambda_max(M(w))
  int tester_calls = 0;
  int budget_errors = 0;  // grid points conservatively treated as infeasible
};

// (1-eps)-approximate packing optimization via binary search over a
// multiplicative grid on [opt_minus, opt_plus], each point resolved by
// packing_test at accuracy eps/3.
PackingSolution packing_opt(const PackingInstance& inst, double eps, double delta,
                            Rng& rng, const PackingMomentOracle* oracle = nullptr,
                            const PackingOptions& opts = {});

// Dictionary-free core of packing_opt: everything flows through the moment
// oracle (and opts.exact_lmax for witness certification). Used by callers
// whose dictionary items are implicit.
PackingSolution packing_opt_raw(Index dim, Index n, const VectorXd& v, double opt_minus,
                                double opt_plus, double eps,
                                const PackingMomentOracle& oracle,
                                const PackingOptions& opts);

// Exact small-scale oracle: simultaneously-diagonal instances with n <= 12
// solved as an LP by vertex enumeration; general instances with d <= 6,
// n <= 4 by adaptive grid refinement. Anything else raises
// UnsupportedInstanceError.
PackingSolution exact_packing_opt(const PackingInstance& inst);

}  // namespace mdr

#endif
