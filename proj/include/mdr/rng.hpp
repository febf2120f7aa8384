#ifndef MDR_RNG_HPP
#define MDR_RNG_HPP

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace mdr {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded RNG with deterministic stream splitting. All randomized routines
// take one of these (or a raw seed) so runs are reproducible end to end.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

  // Independent child stream; derivation depends only on (seed, tag).
  Rng derive(std::uint64_t tag) const {
    return Rng(splitmix64(seed_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return eng_; }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  int uniform_int(int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(eng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }

  Eigen::VectorXd normal_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd unit_vec(Eigen::Index n) {
    Eigen::VectorXd v = normal_vec(n);
    double nrm = v.norm();
    while (nrm == 0.0) {
      v = normal_vec(n);
      nrm = v.norm();
    }
    return v / nrm;
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace mdr

#endif
