#include "mdr/dictionary.hpp"

#include "mdr/errors.hpp"
#include "mdr/kernels.hpp"

namespace mdr {

MatrixDictionary MatrixDictionary::build(std::vector<FactoredPSD> raw, double delta,
                                         Rng& rng) {
  if (raw.empty()) throw ValidationError("MatrixDictionary: n >= 1 required");
  MatrixDictionary dict;
  dict.d_ = raw.front().dim();
  const Index n = static_cast<Index>(raw.size());
  dict.norms_.resize(n);
  dict.items_.reserve(n);
  for (Index i = 0; i < n; ++i) {
    if (raw[i].dim() != dict.d_ || raw[i].width() < 1)
      throw ValidationError("MatrixDictionary: inconsistent item shapes");
    // Rank-one items make the power method exact in one step; wider items
    // get the usual 2-approximation, still landing lambda_max in [1, 2].
    SpectralOperator op;
    const MatrixXd v = raw[i].V;
    op.dim = dict.d_;
    op.apply_block = [&v](const Eigen::Ref<const MatrixXd>& x, Eigen::Ref<MatrixXd> y) {
      y.noalias() = v * (v.transpose() * x);
    };
    Rng child = rng.derive(0x5A5A0000ULL + static_cast<std::uint64_t>(i));
    double top = power_top_eig(op, std::min(0.25, delta / (2.0 * n)), child);
    if (top <= 0.0)
      throw ValidationError("MatrixDictionary: zero item cannot be normalized");
    dict.norms_[i] = top;
    FactoredPSD f;
    f.V = raw[i].V / std::sqrt(top);
    dict.items_.push_back(std::move(f));
  }
  dict.finalize();
  return dict;
}

MatrixDictionary MatrixDictionary::build_prenormalized(std::vector<FactoredPSD> items) {
  if (items.empty()) throw ValidationError("MatrixDictionary: n >= 1 required");
  MatrixDictionary dict;
  dict.d_ = items.front().dim();
  dict.norms_ = VectorXd::Ones(static_cast<Index>(items.size()));
  dict.items_ = std::move(items);
  dict.finalize();
  return dict;
}

void MatrixDictionary::finalize() {
  const Index n = static_cast<Index>(items_.size());
  group_ptr_.assign(n + 1, 0);
  for (Index i = 0; i < n; ++i) {
    max_width_ = std::max(max_width_, items_[i].width());
    group_ptr_[i + 1] = group_ptr_[i] + items_[i].width();
  }
  stack_.resize(d_, group_ptr_[n]);
  for (Index i = 0; i < n; ++i)
    stack_.middleCols(group_ptr_[i], items_[i].width()) = items_[i].V;
}

VectorXd MatrixDictionary::expand_weights(const VectorXd& w) const {
  if (w.size() != size()) throw ValidationError("expand_weights: size mismatch");
  VectorXd we(stack_.cols());
  for (Index i = 0; i < size(); ++i)
    we.segment(group_ptr_[i], group_ptr_[i + 1] - group_ptr_[i]).setConstant(w[i]);
  return we;
}

SpectralOperator MatrixDictionary::combined_apply(const VectorXd& w) const {
  auto we = std::make_shared<VectorXd>(expand_weights(w));
  auto stack = std::make_shared<MatrixXd>(stack_);
  SpectralOperator op;
  op.dim = d_;
  op.cost_hint = 2.0 * static_cast<double>(stack_.rows()) * stack_.cols();
  op.apply_block = [we, stack](const Eigen::Ref<const MatrixXd>& x,
                               Eigen::Ref<MatrixXd> y) {
    kern::factor_gram_apply(*stack, *we, x, y);
  };
  return op;
}

MatrixXd MatrixDictionary::combined_dense(const VectorXd& w) const {
  const VectorXd we = expand_weights(w);
  MatrixXd scaled = stack_;
  scaled.array().rowwise() *= we.transpose().array();
  return scaled * stack_.transpose();
}

VectorXd MatrixDictionary::inner_products(const MatrixXd& x) const {
  // <V V^T, X> = sum_j v_j^T X v_j
  const MatrixXd xs = x * stack_;
  VectorXd out(size());
  for (Index i = 0; i < size(); ++i) {
    double acc = 0.0;
    for (Index j = group_ptr_[i]; j < group_ptr_[i + 1]; ++j)
      acc += stack_.col(j).dot(xs.col(j));
    out[i] = acc;
  }
  return out;
}

}  // namespace mdr
