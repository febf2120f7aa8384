#include "mdr/mdr_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "mdr/errors.hpp"

namespace mdr {

namespace {

double log_d(Index d) { return std::log(std::max<double>(d, 2)); }

struct DecideState {
  VectorXd accum;   // eta*kappa*sum_s x_s over gain items
  VectorXd x_sum;   // sum_s x_s
  double lmax_running = 0.0;  // bound on lambda_max(-S_t)
  double shift = 0.0;         // certified lower bound on lambda_min(-S_t)
  long t = 0;
};

}  // namespace

MdrEstimators default_estimators(const MatrixDictionary& gain_dict,
                                 const MatrixDictionary& constraint_dict,
                                 bool debug_dense_exp) {
  MdrEstimators est;
  const MatrixDictionary* gain = &gain_dict;
  est.line6 = [gain, debug_dense_exp](const VectorXd& u, double shift, double lo,
                                      double hi, double eps, double c, double delta,
                                      std::uint64_t seed) {
    SpectralOperator s = gain->combined_apply(u);
    if (shift != 0.0) s = op_shift(s, -shift);
    DictExpResult res = dict_exp_with_trace(*gain, s, lo, hi, eps, c, delta, seed);
    if (debug_dense_exp && gain->dim() <= 40) {
      // Cross-check of the sketched estimates against a dense exponential;
      // gross disagreement is an estimator bug.
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(gain->combined_dense(u));
      MatrixXd e = es.eigenvectors() *
                   (-(es.eigenvalues().array() - shift)).exp().matrix().asDiagonal() *
                   es.eigenvectors().transpose();
      VectorXd truth = gain->inner_products(e);
      const double tr = e.trace();
      if (std::abs(res.trace - tr) > 0.5 * tr)
        throw NumericError("line6 debug: trace cross-check failed");
      for (Index i = 0; i < gain->size(); ++i)
        if (std::abs(res.inner[i] - truth[i]) > 0.5 * truth[i] + 2.0 * c * tr)
          throw NumericError("line6 debug: inner-product cross-check failed");
    }
    return res;
  };
  est.line13 = [gain](const VectorXd& u, double shift, double lmax_bound, double eps,
                      double delta, std::uint64_t seed) {
    return lambda_min_additive(gain->combined_apply(u), 0.0, eps, delta, seed,
                               lmax_bound, shift);
  };
  est.packing_moments = exact_moment_oracle(constraint_dict);
  if (gain_dict.dim() <= dense_cap()) {
    est.gain_extremes = [gain](const VectorXd& w) {
      return exact_extreme_eigs(gain->combined_dense(w));
    };
  }
  if (constraint_dict.dim() <= dense_cap()) {
    const MatrixDictionary* cons = &constraint_dict;
    est.constraint_lmax = [cons](const VectorXd& w) {
      return exact_extreme_eigs(cons->combined_dense(w)).second;
    };
  }
  return est;
}

MdrDecision decide_structured_mpc_raw(Index d, Index n, double kappa,
                                      const MdrConfig& cfg, const MdrEstimators& est,
                                      Index constraint_dim) {
  if (!(kappa > 1.0)) throw ValidationError("decide_structured_mpc: kappa > 1 required");
  const double eps = cfg.eps;
  if (eps <= 0.0 || eps >= 1.0) throw ValidationError("decide_structured_mpc: eps in (0,1)");
  if (constraint_dim <= 0) constraint_dim = d;

  const double eta = cfg.eta > 0.0 ? cfg.eta : eps / (10.0 * kappa);
  const long T = cfg.iter_cap > 0
                     ? cfg.iter_cap
                     : static_cast<long>(std::ceil(10.0 * log_d(d) / (eta * eps)));
  const double R = log_d(d) / eps;
  const double exit_thr = cfg.exit_threshold_mult * log_d(d) / eps;
  const double no_thr =
      cfg.oracle_value_threshold > 0.0 ? cfg.oracle_value_threshold : 1.0 - eps / 5.0;
  const long lmin_every =
      cfg.lmin_check_every > 0
          ? cfg.lmin_check_every
          : std::max<long>(1, static_cast<long>(R / (4.0 * eta * kappa)));
  const double split = cfg.estimator_split;

  Rng root(cfg.seed);
  DecideState st;
  st.accum = VectorXd::Zero(n);
  st.x_sum = VectorXd::Zero(n);
  MdrDecision out;
  MdrTelemetry& tel = out.telemetry;

  std::optional<VectorXd> pack_warm;

  auto certify = [&](const VectorXd& w) -> std::optional<double> {
    if (!est.gain_extremes) return std::nullopt;
    auto [lo, hi] = est.gain_extremes(w);
    ++tel.polls;
    if (lo > 0.0 && hi <= (1.0 + eps) * kappa * lo * (1.0 + 1e-12)) return hi / lo;
    return std::nullopt;
  };

  for (long t = 0; t < T; ++t) {
    tel.iterations = t + 1;
    // Line 6: entrywise (eps/10, eps/(10 kappa n))-approximations to <M_i, Y_t>.
    const double lo_win = -0.05 * R - 1e-6;
    const double hi_win = std::max(st.lmax_running - st.shift, 0.0) + 0.05;
    DictExpResult e6 = est.line6(st.accum, st.shift, lo_win, hi_win, eps / split,
                                 eps / (10.0 * kappa * n), cfg.delta / (4.0 * T),
                                 root.derive(0x600 + t).seed());
    if (!(e6.trace > 0.0) || !e6.inner.allFinite())
      throw NumericError("decide_structured_mpc: estimator failure at iteration " +
                         std::to_string(t));
    VectorXd v = (e6.inner / e6.trace).cwiseMax(0.0);

    // Line 7: packing oracle at objective kappa * v_t.
    PackingOptions popts;
    popts.max_iters = cfg.packing_iters;
    popts.oracle_rel_err = cfg.packing_moment_err;
    popts.warm_start = pack_warm;
    popts.exact_lmax = est.constraint_lmax;
    VectorXd x;
    double slack = 1.0;
    double value = 0.0;
    try {
      PackingSolution ps = packing_opt_raw(
          constraint_dim, n, kappa * v, (1.0 - eps / 5.0) * (1.0 - eps / 10.0),
          (1.0 + eps / 4.0) * kappa + eps, eps / 10.0, est.packing_moments, popts);
      ++tel.packing_calls;
      x = ps.w;
      slack = ps.certified_feasibility_slack;
      value = ps.value;
      pack_warm = x;
    } catch (const BracketError&) {
      // Even the (1 - eps/5)-level objective is infeasible: the Line-9 test
      // fires with certainty.
      tel.exit_reason = "oracle value below threshold (bracket)";
      out.answer = MdrAnswer::No;
      return out;
    }
    tel.oracle_values.push_back(value);
    if (value < no_thr) {
      tel.exit_reason = "oracle value below threshold";
      out.answer = MdrAnswer::No;
      return out;
    }

    st.accum += (eta * kappa) * x;
    st.x_sum += x;
    st.lmax_running += eta * kappa * std::max(slack, 1.0);
    tel.gain_lmax_bound = std::max(tel.gain_lmax_bound, slack * kappa);
    st.t = t + 1;

    // Line 13 on its cadence: per-iteration drift is at most eta*kappa, so
    // the 12R threshold against the 13R/14R envelope tolerates the gap.
    if ((t + 1) % lmin_every == 0 || t + 1 == T) {
      const double tau =
          est.line13(st.accum, st.shift, st.lmax_running + 0.1, eps,
                     cfg.delta / (4.0 * T), root.derive(0xD00 + t).seed());
      ++tel.lmin_checks;
      tel.last_tau = tau;
      st.shift = std::max(st.shift, std::max(0.0, tau - 1.05 * R));
      if (tau >= exit_thr) {
        VectorXd xbar = st.x_sum / static_cast<double>(t + 1);
        auto cert = certify(xbar);
        if (cert || !est.gain_extremes) {
          tel.exit_reason = "lambda_min threshold";
          out.answer = MdrAnswer::Yes;
          out.w = xbar;
          out.kappa_hat = cert ? *cert : 0.0;
          return out;
        }
        // Certificate refused the early exit; keep iterating.
      }
    }

    // Certificate polling: averaged weights (and the fresh iterate) checked
    // directly against the dense oracle.
    if (cfg.poll_every > 0 && est.gain_extremes &&
        ((t + 1) % cfg.poll_every == 0 || t == 0)) {
      VectorXd xbar = st.x_sum / static_cast<double>(t + 1);
      if (auto cert = certify(xbar)) {
        tel.exit_reason = "oracle certificate (average)";
        out.answer = MdrAnswer::Yes;
        out.w = xbar;
        out.kappa_hat = *cert;
        return out;
      }
      if (t > 0) {
        if (auto cert = certify(x)) {
          tel.exit_reason = "oracle certificate (iterate)";
          out.answer = MdrAnswer::Yes;
          out.w = x;
          out.kappa_hat = *cert;
          return out;
        }
      }
    }
  }

  VectorXd xbar = st.x_sum / static_cast<double>(T);
  if (est.gain_extremes) {
    if (auto cert = certify(xbar)) {
      tel.exit_reason = "iteration cap (certified)";
      out.answer = MdrAnswer::Yes;
      out.w = xbar;
      out.kappa_hat = *cert;
      return out;
    }
    throw BudgetError("decide_structured_mpc: iteration cap " + std::to_string(T) +
                      " reached without a certificate");
  }
  tel.exit_reason = "iteration cap";
  out.answer = MdrAnswer::Yes;
  out.w = xbar;
  return out;
}

MdrDecision decide_structured_mpc(const MatrixDictionary& dict, double kappa,
                                  const MdrConfig& cfg, const MdrEstimators* est_in,
                                  const MatrixDictionary* constraint_dict) {
  const MatrixDictionary& constraint = constraint_dict ? *constraint_dict : dict;
  if (constraint.size() != dict.size())
    throw ValidationError("decide_structured_mpc: constraint dictionary size mismatch");
  MdrEstimators defaults;
  if (!est_in) {
    defaults = default_estimators(dict, constraint, cfg.debug_dense_exp);
    est_in = &defaults;
  }
  return decide_structured_mpc_raw(dict.dim(), dict.size(), kappa, cfg, *est_in,
                                   constraint.dim());
}

MdrCertificate solve_identity_raw(Index dim, Index n, double eps, double delta,
                                  std::uint64_t seed, const MdrConfig* base,
                                  const MdrEstimators& est, double kappa_hint,
                                  Index constraint_dim) {
  if (eps <= 0.0 || eps >= 1.0) throw ValidationError("solve_identity: eps in (0,1)");
  Rng root(seed);

  MdrConfig cfg = base ? *base : MdrConfig{};
  const double eps_in = std::min(eps / 3.0, 0.3);
  cfg.eps = eps_in;
  cfg.delta = delta / 48.0;

  MdrCertificate cert;
  long probes = 0;
  auto run = [&](double kappa) -> std::optional<MdrDecision> {
    cfg.seed = root.derive(0xA000 + probes).seed();
    ++probes;
    try {
      MdrDecision dec = decide_structured_mpc_raw(dim, n, kappa, cfg, est,
                                                  constraint_dim);
      if (dec.answer == MdrAnswer::Yes) return dec;
      return std::nullopt;
    } catch (const BudgetError&) {
      return std::nullopt;  // uncertified: treat as not-yes for the search
    }
  };

  const double kappa0 =
      std::max(1.0 + 2.0 * eps_in, kappa_hint > 1.0 ? kappa_hint / 2.0 : 0.0);
  std::optional<MdrDecision> best;
  double kappa_yes = 0.0;
  for (double k = kappa0;; k *= 2.0) {
    if (k > cfg.kappa_cap)
      throw InfeasibilitySuspectedError(
          "solve_identity: doubling exceeded the kappa cap");
    if (auto dec = run(k)) {
      best = dec;
      kappa_yes = k;
      break;
    }
  }
  // Binary refinement at multiples of 1 + O(eps) within the doubling gap.
  double lo = kappa_yes / 2.0, hi = kappa_yes;
  int refine = 0;
  while (hi / std::max(lo, 1.0) > 1.0 + eps_in && refine < 14) {
    ++refine;
    const double mid = std::sqrt(hi * std::max(lo, 1.0));
    if (mid <= 1.0 + 1e-12) break;
    if (auto dec = run(mid)) {
      best = dec;
      hi = mid;
    } else {
      lo = mid;
    }
  }

  cert.yes = true;
  cert.telemetry = best->telemetry;
  cert.kappa_hat = best->kappa_hat;
  cert.w = best->w;
  if (est.gain_extremes) {
    auto [glo, ghi] = est.gain_extremes(cert.w);
    if (glo <= 0.0)
      throw NumericError("solve_identity: certified weights are singular");
    cert.kappa_hat = ghi / glo;
  }
  return cert;
}

MdrCertificate solve_identity(const MatrixDictionary& dict, double eps, double delta,
                              std::uint64_t seed, const MdrConfig* base,
                              const MdrEstimators* est, double kappa_hint,
                              const VectorXd* fold_weights) {
  Rng root(seed);
  // Fold a warm start into the items by rescaling (scale invariance).
  const MatrixDictionary* work = &dict;
  MatrixDictionary folded;
  VectorXd fold;
  if (fold_weights) {
    fold = fold_weights->cwiseMax(fold_weights->maxCoeff() * 1e-14);
    std::vector<FactoredPSD> items;
    items.reserve(dict.size());
    for (Index i = 0; i < dict.size(); ++i) {
      FactoredPSD f;
      f.V = dict.items()[i].V * std::sqrt(fold[i]);
      items.push_back(std::move(f));
    }
    Rng drng = root.derive(0xF01D);
    folded = MatrixDictionary::build(std::move(items), delta / 10.0, drng);
    work = &folded;
  }

  MdrEstimators local;
  if (!est || fold_weights) {
    local = default_estimators(*work, *work, base ? base->debug_dense_exp : false);
    est = &local;
  }

  MdrCertificate cert = solve_identity_raw(work->dim(), work->size(), eps, delta,
                                           root.derive(0x1D).seed(), base, *est,
                                           kappa_hint, work->dim());
  if (fold_weights)
    cert.w = cert.w.cwiseProduct(fold).cwiseQuotient(folded.normalizers()).eval();
  return cert;
}

DictShiftedSolver dense_dict_solver(const MatrixDictionary& dict) {
  const MatrixDictionary* dp = &dict;
  return [dp](const VectorXd& w, double shift) -> SolveAccess {
    MatrixXd m = dp->combined_dense(w);
    m.diagonal().array() += shift;
    return solve_access_dense_spd(m);
  };
}

MdrCertificate solve_general(const MatrixDictionary& dict, const GeneralSolveInputs& in,
                             double eps, double delta, std::uint64_t seed,
                             const MdrConfig* base) {
  if (eps <= 0.0 || eps >= 1.0) throw ValidationError("solve_general: eps in (0,1)");
  if (in.alpha <= 0.0 || in.beta < 1.0)
    throw ValidationError("solve_general: alpha > 0 and beta >= 1 required");
  if (!in.dict_solver) throw ValidationError("solve_general: dict_solver required");
  const Index d = dict.dim();
  const Index n = dict.size();
  Rng root(seed);

  const bool dense = in.b_dense.has_value() && d <= dense_cap();
  const VectorXd ones = VectorXd::Ones(n);
  // Warm-start fold: the homotopy regularizer is M(w0), equivalently the
  // item rescaling M_i <- [w0]_i M_i with an all-ones regularizer.
  const VectorXd reg = in.warm_start ? *in.warm_start : ones;
  const MatrixXd mreg_dense = dense ? dict.combined_dense(reg) : MatrixXd();

  MdrCertificate cert;
  const double lam0 = 1.0 / eps;
  const double eps_id = eps / 5.0;

  VectorXd w = (1.0 + lam0) * reg;

  auto phase_dense = [&](double lam) -> MatrixXd {
    return *in.b_dense + lam * mreg_dense;
  };
  auto phase_certify = [&](const VectorXd& wts, double lam, bool record) -> double {
    if (!dense) return 0.0;
    MatrixXd mm = dict.combined_dense(wts);
    auto [glo, ghi] = generalized_eig_range(mm, phase_dense(lam), in.project_ones);
    if (!(glo > 0.0))
      throw HomotopyError("solve_general: phase certificate degenerate",
                          static_cast<int>(cert.homotopy_log.size()));
    if (record) cert.homotopy_log.push_back({lam, glo, ghi});
    return ghi / glo;
  };

  // Phase 0: w = (1 + lambda_0) * 1 is feasible for B + lambda_0 M(1).
  const double ratio0 = phase_certify(w, lam0, true);
  double kappa_run = std::max(1.0, ratio0);

  double lam = lam0;
  int phase = 0;
  const int max_phases = 64;
  while (lam > eps * std::max(kappa_run, 1.0) / (2.0 * in.alpha) && phase < max_phases) {
    ++phase;
    lam *= 0.5;
    SpectralOperator bk = op_axpby(1.0, in.b, lam, dict.combined_apply(reg));
    if (in.project_ones) bk = op_project_ones(bk);

    double beta_k;
    if (dense) {
      beta_k = 1.05 * condition_number(phase_dense(lam), in.project_ones);
    } else {
      beta_k = in.beta * (1.0 + lam * in.alpha);
    }

    // Previous-phase weights give a 3 kappa preconditioner for this phase.
    const VectorXd w_pre = w;
    ShiftedSolveFamily fam = [&in, w_pre](double nu) {
      return in.dict_solver(w_pre, nu);
    };
    const double eps_r = std::min(eps / 20.0, eps / (45.0 * beta_k));
    Rng rrng = root.derive(0xAB00 + phase);
    InvSqrtInfo rinfo;
    SpectralOperator r = inv_sqrt_operator(bk, fam, 3.0 * kappa_run * (1.0 + eps),
                                           beta_k, std::max(eps_r, 1e-9), rrng, &rinfo);

    // Conjugated dictionary R M_i R through the factor stack.
    MatrixXd conj = r.apply_mat(dict.factor_stack());
    std::vector<FactoredPSD> items;
    items.reserve(n);
    for (Index i = 0; i < n; ++i) {
      FactoredPSD f;
      f.V = conj.middleCols(dict.group_ptr()[i],
                            dict.group_ptr()[i + 1] - dict.group_ptr()[i]);
      items.push_back(std::move(f));
    }
    Rng drng = root.derive(0xAC00 + phase);
    MatrixDictionary dict_k = MatrixDictionary::build(std::move(items), delta / 8.0, drng);

    MdrCertificate idc = solve_identity(dict_k, eps_id, delta / 8.0,
                                        root.derive(0xAD00 + phase).seed(), base,
                                        nullptr, kappa_run, &w);
    // Map to weights over the original normalized items.
    VectorXd w_new = idc.w.cwiseQuotient(dict_k.normalizers());

    if (dense) {
      MatrixXd mm = dict.combined_dense(w_new);
      auto [glo, ghi] = generalized_eig_range(mm, phase_dense(lam), in.project_ones);
      if (!(glo > 0.0) || ghi / glo > (1.0 + 2.0 * eps) * 3.0 * kappa_run * (1.0 + eps))
        throw HomotopyError("solve_general: phase contract violated, ratio " +
                                std::to_string(glo > 0.0 ? ghi / glo : -1.0),
                            phase);
      w_new /= glo * (1.0 - 1e-12);
      cert.homotopy_log.push_back({lam, 1.0, ghi / glo});
      kappa_run = std::max(1.0, std::min(ghi / glo, std::max(1.0, idc.kappa_hat)));
    } else {
      // Probe-level check: quadratic forms on random vectors.
      Rng prng = root.derive(0xAE00 + phase);
      SpectralOperator mw = dict.combined_apply(w_new);
      double worst_lo = 1e300;
      for (int probe = 0; probe < 4; ++probe) {
        VectorXd z = prng.unit_vec(d);
        if (in.project_ones) z = op_ones_complement_projector(d).apply(z);
        const double num = z.dot(mw.apply(z));
        const double den = z.dot(bk.apply(z));
        if (den > 0.0) worst_lo = std::min(worst_lo, num / den);
      }
      if (worst_lo < 1e-12)
        throw HomotopyError("solve_general: phase probe failed", phase);
      w_new /= worst_lo;
      cert.homotopy_log.push_back({lam, 1.0, std::max(1.0, idc.kappa_hat)});
      kappa_run = std::max(1.0, idc.kappa_hat);
    }
    w = w_new;
    cert.telemetry.iterations += idc.telemetry.iterations;
    cert.telemetry.packing_calls += idc.telemetry.packing_calls;
  }

  // Drop the regularizer: the last-phase weights satisfy the unregularized
  // sandwich up to the terminal-lambda slack.
  if (dense) {
    MatrixXd mm = dict.combined_dense(w);
    auto [glo, ghi] = generalized_eig_range(mm, *in.b_dense, in.project_ones);
    if (!(glo > 0.0))
      throw HomotopyError("solve_general: final certificate degenerate", phase);
    w /= glo * (1.0 - 1e-12);
    cert.kappa_hat = ghi / glo;
  } else {
    cert.kappa_hat = (1.0 + 2.0 * eps) * kappa_run;
  }
  cert.w = w;
  cert.yes = true;
  return cert;
}

}  // namespace mdr
