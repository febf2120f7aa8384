#include "mdr/packing.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "mdr/errors.hpp"

namespace mdr {

namespace {

MatrixXd dense_power_even(const MatrixXd& m, int e) {
  MatrixXd acc = MatrixXd::Identity(m.rows(), m.cols());
  MatrixXd base = m;
  int k = e;
  while (k > 0) {
    if (k & 1) acc = acc * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return acc;
}

int auto_p(Index d, double eps) {
  // d^(1/p) <= 1 + eps/6 keeps the soft-max inflation inside the margins.
  int p = static_cast<int>(std::ceil(std::log(std::max<double>(d, 2)) /
                                     std::log1p(eps / 6.0))) + 1;
  if (p % 2 == 0) ++p;
  return std::max(p, 3);
}

// Tester over transformed weights: is lambda_max(sum_u u_i s_i M_i) <= 1
// feasible over the simplex, for per-item multipliers s_i > 0?
PackingTestResult scaled_packing_test(Index dim, Index n, const VectorXd& s,
                                      double eps, const PackingMomentOracle& oracle,
                                      const PackingOptions& opts) {
  const int p = opts.p > 0 ? opts.p : std::min(auto_p(dim, eps), opts.p_cap | 1);
  const double mom_err = opts.oracle_rel_err;
  const double upper_margin = 1.0 + mom_err;
  const double lower_margin = (1.0 - mom_err) / (1.0 + mom_err);
  const double inflation = std::pow(static_cast<double>(dim), 1.0 / p);

  VectorXd u = VectorXd::Ones(n);
  if (opts.warm_start && opts.warm_start->size() == n)
    u = opts.warm_start->cwiseMax(1e-12);
  u /= u.sum();

  PackingTestResult res;
  double best_upper = 1e300;
  double eta_scale = opts.step_scale;
  for (int it = 0; it < opts.max_iters; ++it) {
    const VectorXd wh = u.cwiseProduct(s);
    PackingGradient g = oracle(wh, p);
    if (!(g.trace_p > 0.0) || !(g.trace_pm1 > 0.0) || !g.inner_pm1.allFinite() ||
        !(g.norm_scale > 0.0))
      throw NumericError("packing_test: degenerate moment oracle output");
    const double upper = g.norm_scale * std::pow(g.trace_p, 1.0 / p);  // >= lambda_max
    res.iterations = it + 1;
    const double thresh = 1.0 + 2.0 * eps / 3.0;
    if (upper * upper_margin <= thresh) {
      res.answer = PackingAnswer::Feasible;
      res.w = u;
      res.certified_lambda_max = upper * upper_margin;
      return res;
    }
    // The p cap blunts the soft-max by d^(1/p); when an exact top-eigenvalue
    // hook is available and the bound is within that slack, certify exactly.
    if (opts.exact_lmax && upper * upper_margin <= thresh * inflation * 1.05) {
      const double lmax = opts.exact_lmax(wh);
      if (lmax * upper_margin <= thresh) {
        res.answer = PackingAnswer::Feasible;
        res.w = u;
        res.certified_lambda_max = lmax * upper_margin;
        return res;
      }
    }
    // Loads <s_i M_i, Y> for Y = M^{p-1}/Tr M^{p-1}; if even the smallest
    // exceeds 1 - eps, no simplex point is (1-eps)-feasible.
    VectorXd loads = g.inner_pm1.cwiseProduct(s) / g.trace_pm1;
    if (loads.minCoeff() * lower_margin >= 1.0 - eps) {
      res.answer = PackingAnswer::Infeasible;
      res.certified_lambda_max = loads.minCoeff() * lower_margin;
      return res;
    }
    // Step size ~ eps-scaled against the max relative load, opened up or
    // backed off by observed progress; the exits above stay certificates,
    // so adaptivity affects speed only.
    if (upper > best_upper * 1.02)
      eta_scale = std::max(0.05, eta_scale * 0.7);
    else if (upper < best_upper)
      eta_scale = std::min(40.0, eta_scale * 1.1);
    best_upper = std::min(best_upper, upper);
    const double lmax_load = loads.maxCoeff();
    const double eta = eta_scale * std::max(eps, 0.05) / std::max(lmax_load, 1e-12);
    u = u.array() * (-eta * loads.array()).exp();
    const double total = u.sum();
    if (!(total > 0.0)) throw NumericError("packing_test: weights collapsed");
    u /= total;
  }
  throw BudgetError("packing_test: iteration budget exhausted; best certified bound " +
                        std::to_string(best_upper),
                    best_upper);
}

void choose_subsets(Index start, Index total, Index k, std::vector<Index>& buf,
                    const std::function<void(const std::vector<Index>&)>& emit) {
  if (k == 0) {
    emit(buf);
    return;
  }
  for (Index i = start; i + k <= total; ++i) {
    buf.push_back(i);
    choose_subsets(i + 1, total, k - 1, buf, emit);
    buf.pop_back();
  }
}

}  // namespace

PackingMomentOracle exact_moment_oracle(const MatrixDictionary& dict) {
  auto dictp = &dict;
  return [dictp](const VectorXd& w, int p) -> PackingGradient {
    MatrixXd m = dictp->combined_dense(w);
    // Normalize by a lambda_max upper bound so high powers stay in range.
    const double scale = std::max(m.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    m /= scale;
    const MatrixXd x = dense_power_even(m, p - 1);
    PackingGradient g;
    g.norm_scale = scale;
    g.trace_pm1 = x.trace();
    g.trace_p = x.cwiseProduct(m).sum();
    g.inner_pm1 = dictp->inner_products(x);
    return g;
  };
}

PackingTestResult packing_test(const MatrixDictionary& dict, double C, double eps,
                               double delta, Rng& rng, const PackingMomentOracle* oracle,
                               const PackingOptions& opts) {
  (void)rng;
  (void)delta;
  if (eps <= 0.0 || eps >= 1.0) throw ValidationError("packing_test: eps in (0,1)");
  if (C <= 0.0) throw ValidationError("packing_test: C > 0 required");
  PackingMomentOracle def;
  if (!oracle) {
    def = exact_moment_oracle(dict);
    oracle = &def;
  }
  VectorXd s = VectorXd::Constant(dict.size(), 1.0 / C);
  PackingOptions topts = opts;
  if (!topts.exact_lmax && dict.dim() <= dense_cap()) {
    const MatrixDictionary* dp = &dict;
    topts.exact_lmax = [dp](const VectorXd& w) {
      return exact_extreme_eigs(dp->combined_dense(w)).second;
    };
  }
  return scaled_packing_test(dict.dim(), dict.size(), s, eps, *oracle, topts);
}

PackingSolution packing_opt_raw(Index dim, Index n, const VectorXd& v, double opt_minus,
                                double opt_plus, double eps,
                                const PackingMomentOracle& oracle,
                                const PackingOptions& opts) {
  if (v.size() != n || v.minCoeff() < 0.0)
    throw ValidationError("packing_opt: objective must be nonnegative");

  PackingSolution sol;
  sol.w = VectorXd::Zero(n);
  if (v.maxCoeff() == 0.0) return sol;

  const double lo = opt_minus;
  const double hi = opt_plus;
  if (!(lo > 0.0) || hi < lo) throw BracketError("packing_opt: empty bracket");

  const double ratio = 1.0 + eps / 3.0;
  const int K = std::max(1, static_cast<int>(std::ceil(std::log(hi / lo) /
                                                       std::log(ratio))));

  std::vector<Index> active;
  for (Index i = 0; i < n; ++i)
    if (v[i] > 0.0) active.push_back(i);
  const Index na = static_cast<Index>(active.size());

  auto expand = [&](const VectorXd& sub) {
    VectorXd full = VectorXd::Zero(n);
    for (Index j = 0; j < na; ++j) full[active[j]] = sub[j];
    return full;
  };
  PackingMomentOracle sub_oracle = [&](const VectorXd& w, int p) {
    PackingGradient g2 = oracle(expand(w), p);
    VectorXd inner(na);
    for (Index j = 0; j < na; ++j) inner[j] = g2.inner_pm1[active[j]];
    g2.inner_pm1 = inner;
    return g2;
  };
  PackingOptions sopts = opts;
  if (opts.exact_lmax) {
    auto base_lmax = opts.exact_lmax;
    sopts.exact_lmax = [&, base_lmax](const VectorXd& w) { return base_lmax(expand(w)); };
  }
  if (opts.warm_start && opts.warm_start->size() == n) {
    VectorXd sub(na);
    for (Index j = 0; j < na; ++j) sub[j] = (*opts.warm_start)[active[j]];
    sopts.warm_start = sub;
  } else {
    sopts.warm_start.reset();
  }

  std::optional<VectorXd> warm = sopts.warm_start;
  bool lower_budget_error = false;
  auto test_value = [&](double g, std::optional<VectorXd>& witness, bool* budget) -> bool {
    VectorXd s(na);
    for (Index j = 0; j < na; ++j) s[j] = g / v[active[j]];
    ++sol.tester_calls;
    PackingOptions topts = sopts;
    topts.warm_start = warm;
    try {
      PackingTestResult r = scaled_packing_test(dim, na, s, eps / 3.0, sub_oracle, topts);
      if (r.answer == PackingAnswer::Feasible) {
        witness = r.w;
        warm = r.w;
        return true;
      }
      return false;
    } catch (const BudgetError&) {
      ++sol.budget_errors;
      if (budget) *budget = true;
      return false;  // conservative for the value search
    }
  };

  std::optional<VectorXd> best_w;
  double best_g = 0.0;
  {
    std::optional<VectorXd> w0;
    if (!test_value(lo, w0, &lower_budget_error)) {
      if (lower_budget_error)
        throw BudgetError("packing_opt: tester budget at the lower endpoint");
      throw BracketError("packing_opt: lower bracket endpoint infeasible");
    }
    best_w = w0;
    best_g = lo;
  }
  int klo = 0, khi = K;
  while (klo < khi) {
    const int mid = (klo + khi + 1) / 2;
    const double g = std::min(lo * std::pow(ratio, mid), hi);
    std::optional<VectorXd> w;
    if (test_value(g, w, nullptr)) {
      klo = mid;
      best_w = w;
      best_g = g;
    } else {
      khi = mid - 1;
    }
  }

  VectorXd w = VectorXd::Zero(n);
  for (Index j = 0; j < na; ++j)
    w[active[j]] = best_g * (*best_w)[j] / v[active[j]];
  double slack;
  if (opts.exact_lmax) {
    slack = opts.exact_lmax(w);
  } else {
    const int p = std::min(auto_p(dim, eps), opts.p_cap | 1);
    PackingGradient g = oracle(w, p);
    slack = g.norm_scale * std::pow(g.trace_p, 1.0 / p);
  }
  if (slack > 1.0 + 1e-9) {
    w /= slack * (1.0 + 1e-12);
    slack = opts.exact_lmax ? opts.exact_lmax(w) : 1.0;
  }
  sol.w = w;
  sol.value = v.dot(w);
  sol.certified_feasibility_slack = slack;
  return sol;
}

PackingSolution packing_opt(const PackingInstance& inst, double eps, double delta,
                            Rng& rng, const PackingMomentOracle* oracle,
                            const PackingOptions& opts) {
  (void)rng;
  (void)delta;
  if (!inst.dict) throw ValidationError("packing_opt: missing dictionary");
  const MatrixDictionary& dict = *inst.dict;
  PackingMomentOracle def;
  if (!oracle) {
    def = exact_moment_oracle(dict);
    oracle = &def;
  }
  PackingOptions topts = opts;
  if (!topts.exact_lmax && dict.dim() <= dense_cap()) {
    const MatrixDictionary* dp = &dict;
    topts.exact_lmax = [dp](const VectorXd& w) {
      return exact_extreme_eigs(dp->combined_dense(w)).second;
    };
  }
  // Analytic bracket from the normalization invariant lambda_max(M_i) in [1,2].
  const double lo = inst.opt_minus > 0.0 ? inst.opt_minus : inst.v.maxCoeff() / 2.0;
  const double hi = inst.opt_plus > 0.0 ? inst.opt_plus : inst.v.sum();
  return packing_opt_raw(dict.dim(), dict.size(), inst.v, lo, hi, eps, *oracle, topts);
}

PackingSolution exact_packing_opt(const PackingInstance& inst) {
  if (!inst.dict) throw ValidationError("exact_packing_opt: missing dictionary");
  const MatrixDictionary& dict = *inst.dict;
  const Index n = dict.size();
  const Index d = dict.dim();
  if (inst.v.size() != n) throw ValidationError("exact_packing_opt: objective size");

  PackingSolution sol;
  sol.w = VectorXd::Zero(n);
  if (inst.v.cwiseAbs().maxCoeff() == 0.0) return sol;

  if (n == 1) {
    const double lmax = exact_extreme_eigs(dict.items()[0].to_dense()).second;
    sol.w[0] = 1.0 / lmax;
    sol.value = inst.v[0] / lmax;
    sol.certified_feasibility_slack = 1.0;
    return sol;
  }

  bool diagonal = true;
  std::vector<VectorXd> diags;
  for (const auto& it : dict.items()) {
    MatrixXd m = it.to_dense();
    if ((m - MatrixXd(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
      diagonal = false;
    diags.push_back(m.diagonal());
  }

  if (diagonal && n <= 12) {
    MatrixXd a(d, n);
    for (Index i = 0; i < n; ++i) a.col(i) = diags[i];
    double best = 0.0;
    VectorXd bestw = VectorXd::Zero(n);
    for (Index r = 1; r <= std::min(n, d); ++r) {
      std::vector<Index> fbuf;
      choose_subsets(0, n, r, fbuf, [&](const std::vector<Index>& freev) {
        std::vector<Index> sbuf;
        choose_subsets(0, d, r, sbuf, [&](const std::vector<Index>& tight) {
          MatrixXd m(r, r);
          for (Index x = 0; x < r; ++x)
            for (Index y = 0; y < r; ++y) m(x, y) = a(tight[x], freev[y]);
          Eigen::FullPivLU<MatrixXd> lu(m);
          if (!lu.isInvertible()) return;
          VectorXd wf = lu.solve(VectorXd::Ones(r));
          if (wf.minCoeff() < -1e-10) return;
          VectorXd w = VectorXd::Zero(n);
          for (Index y = 0; y < r; ++y) w[freev[y]] = std::max(0.0, wf[y]);
          if (((a * w).array() > 1.0 + 1e-8).any()) return;
          const double val = inst.v.dot(w);
          if (val > best) {
            best = val;
            bestw = w;
          }
        });
      });
    }
    sol.w = bestw;
    sol.value = best;
    sol.certified_feasibility_slack = (a * bestw).maxCoeff();
    return sol;
  }

  if (d <= 6 && n <= 4) {
    VectorXd ub(n);
    for (Index i = 0; i < n; ++i)
      ub[i] = 1.0 / exact_extreme_eigs(dict.items()[i].to_dense()).second;
    VectorXd center = 0.5 * ub, radius = 0.5 * ub;
    VectorXd bestw = VectorXd::Zero(n);
    double best = 0.0;
    const int per_axis = 9;
    for (int level = 0; level < 10; ++level) {
      std::vector<Index> idx(n, 0);
      bool done = false;
      while (!done) {
        VectorXd w(n);
        for (Index i = 0; i < n; ++i) {
          const double f = static_cast<double>(idx[i]) / (per_axis - 1);
          w[i] = std::max(0.0, center[i] + radius[i] * (2.0 * f - 1.0));
        }
        if (exact_extreme_eigs(dict.combined_dense(w)).second <= 1.0 + 1e-9) {
          const double val = inst.v.dot(w);
          if (val > best) {
            best = val;
            bestw = w;
          }
        }
        Index pos = 0;
        while (pos < n) {
          if (++idx[pos] < per_axis) break;
          idx[pos] = 0;
          ++pos;
        }
        if (pos == n) done = true;
      }
      center = bestw;
      radius *= 2.0 / (per_axis - 1);
    }
    sol.w = bestw;
    sol.value = best;
    sol.certified_feasibility_slack =
        exact_extreme_eigs(dict.combined_dense(bestw)).second;
    return sol;
  }

  throw UnsupportedInstanceError("exact_packing_opt: instance outside oracle envelope");
}

}  // namespace mdr
