#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdr/errors.hpp"
#include "mdr/mdr_solver.hpp"
#include "test_helpers.hpp"

using namespace mdr;
using mdr_test::random_spd;

namespace {

MatrixDictionary basis_dict(Index d) {
  std::vector<FactoredPSD> items;
  for (Index i = 0; i < d; ++i) items.push_back(factored_from_vector(VectorXd::Unit(d, i)));
  return MatrixDictionary::build_prenormalized(std::move(items));
}

MatrixDictionary diag_items_dict(const std::vector<VectorXd>& diags) {
  std::vector<FactoredPSD> items;
  for (const auto& dv : diags) {
    MatrixXd v = MatrixXd::Zero(dv.size(), dv.size());
    for (Index i = 0; i < dv.size(); ++i) v(i, i) = std::sqrt(std::max(0.0, dv[i]));
    items.push_back(FactoredPSD{v});
  }
  return MatrixDictionary::build_prenormalized(std::move(items));
}

}  // namespace

TEST_CASE("decide_structured_mpc examples") {
  MdrConfig cfg;
  cfg.seed = 11;

  // {e1e1^T, e2e2^T}, kappa = 1.5, eps = 0.1 -> Yes at ratio <= 1.65
  cfg.eps = 0.1;
  MatrixDictionary d1 = basis_dict(2);
  auto r1 = decide_structured_mpc(d1, 1.5, cfg);
  CHECK(r1.answer == MdrAnswer::Yes);
  CHECK(r1.kappa_hat <= 1.65 + 1e-9);

  // single item diag(2,1), kappa = 1.5, eps = 0.05 -> No (only ratio is 2)
  cfg.eps = 0.05;
  MatrixDictionary d2 = diag_items_dict({VectorXd{{2.0, 1.0}}});
  auto r2 = decide_structured_mpc(d2, 1.5, cfg);
  CHECK(r2.answer == MdrAnswer::No);

  // {diag(2,1), diag(1,2)}, kappa = 1.1, eps = 0.1 -> Yes (w=(1,1) ratio 1)
  cfg.eps = 0.1;
  MatrixDictionary d3 = diag_items_dict({VectorXd{{2.0, 1.0}}, VectorXd{{1.0, 2.0}}});
  auto r3 = decide_structured_mpc(d3, 1.1, cfg);
  CHECK(r3.answer == MdrAnswer::Yes);
  CHECK(r3.telemetry.gain_lmax_bound <= 1.1 * (1.0 + 1e-6));
}

TEST_CASE("decide yes-certificates always pass the exact recheck") {
  // seeded diagonal instances; every Yes witness is oracle-verified
  for (int t = 0; t < 30; ++t) {
    Rng rng(3100 + t);
    const Index d = 2 + (t % 4);
    const Index n = 2 + (t % 5);
    std::vector<VectorXd> diags;
    for (Index i = 0; i < n; ++i) {
      VectorXd dv(d);
      for (Index j = 0; j < d; ++j) dv[j] = rng.uniform(0.05, 1.0);
      dv[rng.uniform_int(0, static_cast<int>(d) - 1)] = rng.uniform(1.0, 2.0);
      diags.push_back(dv);
    }
    MatrixDictionary dict = diag_items_dict(diags);
    MdrConfig cfg;
    cfg.eps = 0.2;
    cfg.seed = 3200 + t;
    const double kappa = rng.uniform(1.5, 6.0);
    try {
      auto r = decide_structured_mpc(dict, kappa, cfg);
      if (r.answer == MdrAnswer::Yes) {
        auto [lo, hi] = exact_extreme_eigs(dict.combined_dense(r.w));
        CHECK(lo > 0.0);
        CHECK(hi <= (1.0 + cfg.eps) * kappa * lo * (1.0 + 1e-9));
      }
    } catch (const BudgetError&) {
      // uncertified outcome is acceptable; never a bad certificate
    }
  }
}

TEST_CASE("solve_identity examples") {
  const double eps = 0.2;

  MatrixDictionary basis = basis_dict(4);
  auto c1 = solve_identity(basis, eps, 0.05, 21);
  CHECK(c1.yes);
  CHECK(c1.kappa_hat <= 1.0 + eps);

  // {diag(4,1), diag(1,4)}: sum is 5I, kappa* = 1
  std::vector<FactoredPSD> items;
  {
    MatrixXd v1 = MatrixXd::Zero(2, 2), v2 = MatrixXd::Zero(2, 2);
    v1(0, 0) = 2.0;
    v1(1, 1) = 1.0;
    v2(0, 0) = 1.0;
    v2(1, 1) = 2.0;
    items.push_back(FactoredPSD{v1});
    items.push_back(FactoredPSD{v2});
  }
  Rng drng(22);
  MatrixDictionary d2 = MatrixDictionary::build(std::move(items), 0.01, drng);
  auto c2 = solve_identity(d2, eps, 0.05, 23);
  CHECK(c2.kappa_hat <= 1.0 + eps);

  // single ray {diag(3,1)}: ratio pinned at 3
  std::vector<FactoredPSD> ray;
  {
    MatrixXd v = MatrixXd::Zero(2, 2);
    v(0, 0) = std::sqrt(3.0);
    v(1, 1) = 1.0;
    ray.push_back(FactoredPSD{v});
  }
  Rng drng3(24);
  MatrixDictionary d3 = MatrixDictionary::build(std::move(ray), 0.01, drng3);
  auto c3 = solve_identity(d3, eps, 0.05, 25);
  CHECK(c3.kappa_hat >= 3.0 - 1e-9);
  CHECK(c3.kappa_hat <= (1.0 + eps) * 3.0);
}

TEST_CASE("solve_general examples") {
  const double eps = 0.25;

  // B = I: collapses to the identity case
  {
    MatrixDictionary dict = basis_dict(3);
    GeneralSolveInputs in;
    in.b = op_identity(3);
    in.b_dense = MatrixXd::Identity(3, 3);
    in.dict_solver = dense_dict_solver(dict);
    in.alpha = 3.0;
    in.beta = 1.0;
    auto c = solve_general(dict, in, eps, 0.05, 31);
    CHECK(c.yes);
    CHECK(c.kappa_hat <= 1.0 + eps);
    CHECK(!c.homotopy_log.empty());
  }

  // B = diag(1,2,4), standard basis, warm start = diagonal representation
  {
    MatrixDictionary dict = basis_dict(3);
    MatrixXd b = VectorXd{{1.0, 2.0, 4.0}}.asDiagonal();
    GeneralSolveInputs in;
    in.b = op_from_dense(b);
    in.b_dense = b;
    in.dict_solver = dense_dict_solver(dict);
    in.warm_start = VectorXd{{1.0, 2.0, 4.0}};
    in.alpha = 1.0;
    in.beta = 4.0;
    auto c = solve_general(dict, in, eps, 0.05, 32);
    CHECK(c.kappa_hat <= 1.0 + eps);
  }

  // random SPD B with a planted exact item
  {
    Rng rng(33);
    const Index d = 5;
    MatrixXd b = random_spd(d, 1.0, 6.0, rng);
    std::vector<FactoredPSD> items;
    for (Index i = 0; i < d; ++i)
      items.push_back(factored_from_vector(VectorXd::Unit(d, i)));
    const double lmax = exact_extreme_eigs(b).second;
    items.push_back(factored_from_psd(b / lmax));
    Rng drng(34);
    MatrixDictionary dict = MatrixDictionary::build(std::move(items), 0.01, drng);
    GeneralSolveInputs in;
    in.b = op_from_dense(b);
    in.b_dense = b;
    in.dict_solver = dense_dict_solver(dict);
    VectorXd warm = VectorXd::Ones(d + 1);
    warm[d] = lmax;
    in.warm_start = warm;
    in.alpha = 2.5;
    in.beta = 6.5;
    auto c = solve_general(dict, in, eps, 0.05, 35);
    CHECK(c.kappa_hat <= 1.0 + eps);
    // sandwich holds after the final rescale: B <= M(w) <= kappa_hat B
    auto [glo, ghi] = generalized_eig_range(dict.combined_dense(c.w), b);
    CHECK(glo >= 1.0 - 1e-9);
    CHECK(ghi / glo <= (1.0 + eps) * (1.0 + 1e-9));
  }
}

TEST_CASE("mmw regret bound on synthetic fixed gains") {
  // Direct check of the regret inequality with dense exponentials at d <= 20.
  Rng rng(41);
  const Index d = 12;
  const int T = 30;
  const double eta = 0.05;
  std::vector<MatrixXd> gains;
  for (int t = 0; t < T; ++t) {
    MatrixXd g = random_spd(d, 0.0 + 1e-3, 1.0, rng);
    gains.push_back(g / exact_extreme_eigs(g).second);  // ||G_t|| <= 1 so eta G_t ok
  }
  MatrixXd s = MatrixXd::Zero(d, d);
  double lhs_sum = 0.0, rhs_sum = 0.0;
  MatrixXd gsum = MatrixXd::Zero(d, d);
  for (int t = 0; t < T; ++t) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
    MatrixXd expS = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
                    es.eigenvectors().transpose();
    MatrixXd y = expS / expS.trace();
    lhs_sum += (gains[t].cwiseProduct(y)).sum();
    rhs_sum += eta * exact_extreme_eigs(gains[t]).second * (gains[t].cwiseProduct(y)).sum();
    gsum += gains[t];
    s -= eta * gains[t];
  }
  // min over trace-one U of <avg G, U> is lambda_min of the average
  const double lmin_avg = exact_extreme_eigs(gsum / T).first;
  const double lhs = lhs_sum / T - lmin_avg;
  const double rhs = std::log(static_cast<double>(d)) / (eta * T) + rhs_sum / T;
  CHECK(lhs <= rhs + 1e-9);
}

TEST_CASE("no-answers are sound against the exact diagonal oracle") {
  // random diagonal instances where the optimum is computable by LP search
  for (int t = 0; t < 20; ++t) {
    Rng rng(5100 + t);
    const Index d = 2 + (t % 3);
    const Index n = 2 + (t % 4);
    std::vector<VectorXd> diags;
    for (Index i = 0; i < n; ++i) {
      VectorXd dv(d);
      for (Index j = 0; j < d; ++j) dv[j] = rng.uniform(0.1, 1.0);
      dv[rng.uniform_int(0, static_cast<int>(d) - 1)] = rng.uniform(1.0, 2.0);
      diags.push_back(dv);
    }
    MatrixDictionary dict = diag_items_dict(diags);
    // true optimal ratio by fine search over weights (n <= 5, log-grid)
    double best_ratio = 1e300;
    const int steps = 7;
    std::vector<int> idx(n, 0);
    bool done = false;
    while (!done) {
      VectorXd w(n);
      for (Index i = 0; i < n; ++i) w[i] = std::pow(10.0, -2.0 + 3.0 * idx[i] / (steps - 1.0));
      VectorXd comb = VectorXd::Zero(d);
      for (Index i = 0; i < n; ++i) comb += w[i] * diags[i];
      best_ratio = std::min(best_ratio, comb.maxCoeff() / comb.minCoeff());
      Index pos = 0;
      while (pos < n) {
        if (++idx[pos] < steps) break;
        idx[pos] = 0;
        ++pos;
      }
      if (pos == n) done = true;
    }
    MdrConfig cfg;
    cfg.eps = 0.2;
    cfg.seed = 5200 + t;
    const double kappa = std::max(1.05, best_ratio * rng.uniform(0.6, 1.6));
    try {
      auto r = decide_structured_mpc(dict, kappa, cfg);
      if (r.answer == MdrAnswer::No) {
        // No must be sound: the optimum cannot be below (1 - eps) kappa.
        CHECK(best_ratio >= (1.0 - cfg.eps) * kappa * (1.0 - 1e-6));
      }
    } catch (const BudgetError&) {
    }
  }
}
