#ifndef MDR_JL_HPP
#define MDR_JL_HPP

#include "mdr/rng.hpp"

#include <Eigen/Core>

namespace mdr {

// Johnson-Lindenstrauss sketch: k rows, each a uniformly random unit vector
// scaled by 1/sqrt(k), so (1-eps)||Qv||^2 <= ||v||^2 <= (1+eps)||Qv||^2 for
// any fixed v with probability >= 1-delta.
struct JlSketch {
  Eigen::Index k = 0;
  Eigen::Index d = 0;
  Eigen::MatrixXd Q;  // k x d
  std::uint64_t seed = 0;
};

// k = ceil(jl_rows_constant * eps^-2 * log(d/delta))
Eigen::Index jl_rows(Eigen::Index d, double eps, double delta);

JlSketch make_jl(Eigen::Index d, double eps, double delta, std::uint64_t seed);
JlSketch make_jl_rows(Eigen::Index d, Eigen::Index k, std::uint64_t seed);

}  // namespace mdr

#endif
