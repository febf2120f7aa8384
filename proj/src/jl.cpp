#include "mdr/jl.hpp"

#include <cmath>

#include "mdr/errors.hpp"

namespace mdr {

Eigen::Index jl_rows(Eigen::Index d, double eps, double delta) {
  const double c = 6.0;
  return static_cast<Eigen::Index>(
      std::ceil(c / (eps * eps) * std::log(static_cast<double>(d) / delta)));
}

JlSketch make_jl_rows(Eigen::Index d, Eigen::Index k, std::uint64_t seed) {
  if (d < 1 || k < 1) throw ValidationError("make_jl: d, k >= 1 required");
  JlSketch s;
  s.k = k;
  s.d = d;
  s.seed = seed;
  s.Q.resize(k, d);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (Eigen::Index r = 0; r < k; ++r)
    s.Q.row(r) = (rng.unit_vec(d) * scale).transpose();
  return s;
}

JlSketch make_jl(Eigen::Index d, double eps, double delta, std::uint64_t seed) {
  if (eps <= 0.0 || eps >= 1.0 || delta <= 0.0 || delta >= 1.0)
    throw ValidationError("make_jl: eps, delta in (0,1) required");
  return make_jl_rows(d, jl_rows(d, eps, delta), seed);
}

}  // namespace mdr
