#pragma once

#include <cstdint>
#include <random>

#include "foldylax/types.hpp"

namespace foldylax {

// Deterministic RNG wrapper. std::uniform_real_distribution is
// implementation-defined, so the uniform mapping is done by hand to keep
// outputs byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (polar form rejected for determinism of
  /// call counts; the trig form consumes exactly two draws per pair).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * pi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * pi * u2);
  }

  Vec3 unit_vector() {
    // Marsaglia-free: uniform in cos(theta), uniform in phi.
    const double c = uniform(-1.0, 1.0);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double phi = uniform(0.0, 2.0 * pi);
    return Vec3(s * std::cos(phi), s * std::sin(phi), c);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace foldylax
