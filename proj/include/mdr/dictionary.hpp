#ifndef MDR_DICTIONARY_HPP
#define MDR_DICTIONARY_HPP

#include <vector>

#include "mdr/eig.hpp"
#include "mdr/operators.hpp"

namespace mdr {

// Ordered set of factored PSD matrices with cached top-eigenvalue
// normalizers bringing every lambda_max(M_i) into [1, 2]. Weights passed to
// combined_* refer to the normalized items; raw_weights undoes the scaling.
class MatrixDictionary {
public:
  // Normalizes by a power-method 2-approximation of each top eigenvalue.
  static MatrixDictionary build(std::vector<FactoredPSD> raw, double delta, Rng& rng);
  // Trusts the caller that lambda_max(M_i) is already in [1, 2].
  static MatrixDictionary build_prenormalized(std::vector<FactoredPSD> items);

  Index dim() const { return d_; }
  Index size() const { return static_cast<Index>(items_.size()); }
  Index factor_cols() const { return stack_.cols(); }
  Index max_width() const { return max_width_; }

  const std::vector<FactoredPSD>& items() const { return items_; }
  const VectorXd& normalizers() const { return norms_; }
  const MatrixXd& factor_stack() const { return stack_; }
  const std::vector<Index>& group_ptr() const { return group_ptr_; }

  VectorXd expand_weights(const VectorXd& w) const;
  // weights over raw (pre-normalization) items equivalent to normalized w
  VectorXd raw_weights(const VectorXd& w) const { return w.cwiseQuotient(norms_); }

  SpectralOperator combined_apply(const VectorXd& w) const;
  MatrixXd combined_dense(const VectorXd& w) const;

  // <M_i, X> for all i against a dense X (exact; used by oracles and hooks).
  VectorXd inner_products(const MatrixXd& x) const;

private:
  Index d_ = 0;
  Index max_width_ = 1;
  std::vector<FactoredPSD> items_;  // normalized factors
  VectorXd norms_;
  MatrixXd stack_;                  // d x F stacked normalized factors
  std::vector<Index> group_ptr_;    // size n+1
  void finalize();
};

}  // namespace mdr

#endif
