#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace swpic {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Topology { Torus, Unbounded };

struct DomainSpec {
  double length = 1.0;
  Topology topology = Topology::Torus;
};

/// Standard PIC marker: position, momentum and weight.
struct MarkerParticle {
  double Q = 0.0;
  double P = 0.0;
  double psi_star = 0.0;
};

/// Monopole-dipole decorated particle. The phase Psi is never stored; its
/// conjugate weight psi_star is a Casimir and stays fixed along trajectories.
struct DecoratedParticle {
  double Q = 0.0;
  double P = 0.0;
  double q_star = 0.0;  // momentum-dipole dual variable
  double p_star = 0.0;  // spatial-dipole dual variable
  double psi_star = 0.0;

  static DecoratedParticle from_marker(const MarkerParticle& m) {
    return {m.Q, m.P, 0.0, 0.0, m.psi_star};
  }
};

/// Periodic representative of q in [0, L).
double wrap_position(double q, double L);

/// Periodic representative of dq in (-L/2, L/2]. The upper end is included.
double min_image(double dq, double L);

/// SplitMix64 stream. The integer and uniform sequences depend only on the
/// seed. Normal deviates use Box-Muller on top of uniform() rather than
/// std::normal_distribution, whose output differs between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Derive an independent stream, e.g. one per seed of a multi-seed study.
  Rng split();

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace swpic
