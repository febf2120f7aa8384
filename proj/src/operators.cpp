#include "mdr/operators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "mdr/errors.hpp"

namespace mdr {

SpectralOperator op_identity(Index d) {
  SpectralOperator op;
  op.dim = d;
  op.cost_hint = static_cast<double>(d);
  op.apply_block = [](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    y = x;
  };
  return op;
}

SpectralOperator op_from_dense(const MatrixXd& a) {
  auto m = std::make_shared<MatrixXd>(0.5 * (a + a.transpose()));
  SpectralOperator op;
  op.dim = a.rows();
  op.cost_hint = static_cast<double>(a.rows()) * a.cols();
  op.apply_block = [m](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    kern::sym_dense_apply(*m, x, y);
  };
  return op;
}

SpectralOperator op_from_sym(std::shared_ptr<const SymMatrix> a) {
  SpectralOperator op;
  op.dim = a->dim();
  op.cost_hint = static_cast<double>(a->nnz());
  op.apply_block = [a](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    a->apply_block(x, y);
  };
  return op;
}

SpectralOperator op_diag(const VectorXd& d) {
  auto v = std::make_shared<VectorXd>(d);
  SpectralOperator op;
  op.dim = d.size();
  op.cost_hint = static_cast<double>(d.size());
  op.apply_block = [v](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    y = x.array().colwise() * v->array();
  };
  return op;
}

SpectralOperator op_axpby(double a, SpectralOperator x, double b, SpectralOperator y) {
  if (x.dim != y.dim) throw ValidationError("op_axpby: dimension mismatch");
  SpectralOperator op;
  op.dim = x.dim;
  op.cost_hint = x.cost_hint + y.cost_hint;
  op.apply_block = [a, x, b, y](const Eigen::Ref<const MatrixXd>& in,
                                Eigen::Ref<MatrixXd> out) {
    MatrixXd t1(in.rows(), in.cols()), t2(in.rows(), in.cols());
    x.apply_block(in, t1);
    y.apply_block(in, t2);
    out = a * t1 + b * t2;
  };
  return op;
}

SpectralOperator op_shift(SpectralOperator a, double lambda) {
  SpectralOperator op;
  op.dim = a.dim;
  op.cost_hint = a.cost_hint + a.dim;
  op.apply_block = [a, lambda](const Eigen::Ref<const MatrixXd>& in,
                               Eigen::Ref<MatrixXd> out) {
    a.apply_block(in, out);
    out += lambda * in;
  };
  return op;
}

SpectralOperator op_compose(SpectralOperator a, SpectralOperator b) {
  if (a.dim != b.dim) throw ValidationError("op_compose: dimension mismatch");
  SpectralOperator op;
  op.dim = a.dim;
  op.cost_hint = a.cost_hint + b.cost_hint;
  op.apply_block = [a, b](const Eigen::Ref<const MatrixXd>& in, Eigen::Ref<MatrixXd> out) {
    MatrixXd t(in.rows(), in.cols());
    b.apply_block(in, t);
    a.apply_block(t, out);
  };
  return op;
}

SpectralOperator op_ones_complement_projector(Index n) {
  SpectralOperator op;
  op.dim = n;
  op.cost_hint = static_cast<double>(n);
  op.apply_block = [n](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
    y = x;
    for (Eigen::Index c = 0; c < x.cols(); ++c) y.col(c).array() -= x.col(c).mean();
  };
  return op;
}

SpectralOperator op_project_ones(SpectralOperator a) {
  SpectralOperator p = op_ones_complement_projector(a.dim);
  return op_compose(p, op_compose(a, p));
}

FactoredPSD factored_from_vector(const VectorXd& v) {
  FactoredPSD f;
  f.V = v;
  return f;
}

FactoredPSD factored_from_psd(const MatrixXd& m, double tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  const VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  Index r = 0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > tol * scale) ++r;
  if (r == 0) r = 1;  // keep a zero column so m >= 1 holds
  FactoredPSD f;
  f.V = MatrixXd::Zero(m.rows(), r);
  Index j = 0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > tol * scale) f.V.col(j++) = es.eigenvectors().col(i) * std::sqrt(ev[i]);
  return f;
}

SolveAccess solve_access_identity(Index d) {
  SolveAccess s;
  s.base = op_identity(d);
  s.cost_per_digit = static_cast<double>(d);
  s.solve = [](const VectorXd& v, double) { return v; };
  return s;
}

SolveAccess solve_access_diag(const VectorXd& d) {
  for (Index i = 0; i < d.size(); ++i)
    if (d[i] <= 0.0) throw NotPositiveDefiniteError("diag solve: nonpositive entry");
  auto inv = std::make_shared<VectorXd>(d.cwiseInverse());
  SolveAccess s;
  s.base = op_diag(d);
  s.cost_per_digit = static_cast<double>(d.size());
  s.solve = [inv](const VectorXd& v, double) -> VectorXd {
    return inv->asDiagonal() * v;
  };
  return s;
}

SolveAccess solve_access_dense_spd(const MatrixXd& a) {
  auto llt = std::make_shared<Eigen::LLT<MatrixXd>>(0.5 * (a + a.transpose()));
  if (llt->info() != Eigen::Success)
    throw NotPositiveDefiniteError("dense solve: Cholesky failed");
  SolveAccess s;
  s.base = op_from_dense(a);
  s.cost_per_digit = static_cast<double>(a.rows()) * a.rows();
  s.solve = [llt](const VectorXd& v, double) -> VectorXd { return llt->solve(v); };
  return s;
}

double operator_linearity_defect(const SpectralOperator& op, Rng& rng, int trials) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    VectorXd x = rng.normal_vec(op.dim), y = rng.normal_vec(op.dim);
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    VectorXd lhs = op.apply(a * x + b * y);
    VectorXd rhs = a * op.apply(x) + b * op.apply(y);
    if (!lhs.allFinite() || !rhs.allFinite())
      throw NumericError("operator probe: non-finite matvec output");
    const double scale = std::max(1.0, rhs.norm());
    worst = std::max(worst, (lhs - rhs).norm() / scale);
  }
  return worst;
}

double operator_symmetry_defect(const SpectralOperator& op, Rng& rng, int trials) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    VectorXd x = rng.normal_vec(op.dim), y = rng.normal_vec(op.dim);
    VectorXd ax = op.apply(x), ay = op.apply(y);
    if (!ax.allFinite() || !ay.allFinite())
      throw NumericError("operator probe: non-finite matvec output");
    const double scale = std::max({1.0, std::abs(x.dot(ay)), std::abs(y.dot(ax))});
    worst = std::max(worst, std::abs(x.dot(ay) - y.dot(ax)) / scale);
  }
  return worst;
}

}  // namespace mdr
