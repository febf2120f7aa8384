#include "mdr/kernels.hpp"

#include <omp.h>

#include <atomic>

namespace mdr {
namespace kern {

namespace {
std::atomic<Mode> g_mode{Mode::Parallel};
}

Mode mode() { return g_mode.load(); }
void set_mode(Mode m) { g_mode.store(m); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int threads() { return omp_get_max_threads(); }

void sym_dense_apply(const MatrixXd& A, const Eigen::Ref<const MatrixXd>& X,
                     Eigen::Ref<MatrixXd> Y, Mode m) {
  const Eigen::Index d = A.rows(), C = X.cols();
  // A symmetric: row i equals column i, so we read columns (contiguous).
  if (m == Mode::Parallel && d * C > 4096) {
#pragma omp parallel for schedule(static) collapse(2)
    for (Eigen::Index c = 0; c < C; ++c)
      for (Eigen::Index i = 0; i < d; ++i) Y(i, c) = A.col(i).dot(X.col(c));
  } else {
    for (Eigen::Index c = 0; c < C; ++c)
      for (Eigen::Index i = 0; i < d; ++i) Y(i, c) = A.col(i).dot(X.col(c));
  }
}

void csr_apply(const Csr& A, const Eigen::Ref<const MatrixXd>& X,
               Eigen::Ref<MatrixXd> Y, Mode m) {
  const Eigen::Index d = A.dim, C = X.cols();
  auto row = [&](Eigen::Index i, Eigen::Index c) {
    double acc = 0.0;
    for (Eigen::Index k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      acc += A.val[k] * X(A.col[k], c);
    return acc;
  };
  if (m == Mode::Parallel && d * C > 2048) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index c = 0; c < C; ++c) Y(i, c) = row(i, c);
  } else {
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index c = 0; c < C; ++c) Y(i, c) = row(i, c);
  }
}

void factor_tapply(const MatrixXd& B, const Eigen::Ref<const MatrixXd>& X,
                   Eigen::Ref<MatrixXd> T, Mode m) {
  const Eigen::Index F = B.cols(), C = X.cols();
  if (m == Mode::Parallel && F * C * B.rows() > 8192) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index f = 0; f < F; ++f)
      for (Eigen::Index c = 0; c < C; ++c) T(f, c) = B.col(f).dot(X.col(c));
  } else {
    for (Eigen::Index f = 0; f < F; ++f)
      for (Eigen::Index c = 0; c < C; ++c) T(f, c) = B.col(f).dot(X.col(c));
  }
}

void factor_apply(const MatrixXd& B, const Eigen::Ref<const MatrixXd>& T,
                  Eigen::Ref<MatrixXd> Y, Mode m) {
  const Eigen::Index d = B.rows(), F = B.cols(), C = T.cols();
  Y.setZero();
  // Row chunks accumulate factor columns in ascending order, so every output
  // element sees the same summation order in both modes.
  auto chunk = [&](Eigen::Index r0, Eigen::Index r1) {
    for (Eigen::Index c = 0; c < C; ++c)
      for (Eigen::Index f = 0; f < F; ++f) {
        const double t = T(f, c);
        if (t == 0.0) continue;
        Y.block(r0, c, r1 - r0, 1).noalias() += t * B.block(r0, f, r1 - r0, 1);
      }
  };
  if (m == Mode::Parallel && d * F * C > 8192) {
    const int nt = omp_get_max_threads();
    const Eigen::Index step = (d + nt - 1) / nt;
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) {
      const Eigen::Index r0 = t * step;
      const Eigen::Index r1 = std::min<Eigen::Index>(d, r0 + step);
      if (r0 < r1) chunk(r0, r1);
    }
  } else {
    chunk(0, d);
  }
}

void factor_gram_apply(const MatrixXd& B, const VectorXd& w,
                       const Eigen::Ref<const MatrixXd>& X,
                       Eigen::Ref<MatrixXd> Y, Mode m) {
  MatrixXd T(B.cols(), X.cols());
  factor_tapply(B, X, T, m);
  T.array().colwise() *= w.array();
  factor_apply(B, T, Y, m);
}

void grouped_colnorms(const MatrixXd& A, const std::vector<Eigen::Index>& group_ptr,
                      VectorXd& out, Mode m) {
  const Eigen::Index G = static_cast<Eigen::Index>(group_ptr.size()) - 1;
  out.resize(G);
  auto one = [&](Eigen::Index g) {
    double acc = 0.0;
    for (Eigen::Index j = group_ptr[g]; j < group_ptr[g + 1]; ++j)
      acc += A.col(j).squaredNorm();
    return acc;
  };
  if (m == Mode::Parallel && A.rows() * A.cols() > 4096) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index g = 0; g < G; ++g) out[g] = one(g);
  } else {
    for (Eigen::Index g = 0; g < G; ++g) out[g] = one(g);
  }
}

}  // namespace kern
}  // namespace mdr
