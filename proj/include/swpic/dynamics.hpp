#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "swpic/core.hpp"
#include "swpic/field.hpp"

namespace swpic::dynamics {

struct Ensemble {
  std::vector<DecoratedParticle> particles;
  DomainSpec domain;
  double mass = 1.0;
  double charge = 1.0;

  double total_weight() const;
};

/// V(q) = amplitude * (1 - cos(wavenumber * q)).
struct PrescribedPotential {
  double amplitude = 1.0;
  double wavenumber = 1.0;

  /// Builds kappa = 2 pi n / L so that V is L-periodic.
  static PrescribedPotential periodic(double amplitude, double L, int mode = 1);

  double value(double q) const;
  double slope(double q) const;
  double curvature(double q) const;
};

/// Time derivative of the evolved block (Q, P, q*, p*); psi* is constant.
struct ParticleRate {
  double Q = 0.0;
  double P = 0.0;
  double q_star = 0.0;
  double p_star = 0.0;
};

/// Which reconstruction of phi_h'' drives the q* kick.
enum class Curvature { Projected, ElementInterior };

ParticleRate swpic_rhs(const DecoratedParticle& particle, const field::FieldState& field, double mass = 1.0,
                       double charge = 1.0, Curvature curvature = Curvature::Projected);

ParticleRate prescribed_rhs(const DecoratedParticle& particle, const PrescribedPotential& potential,
                            double mass = 1.0);

/// Deposition + Poisson solve pipeline. Holds the field of the most recent
/// solve so the leading half-kick of a step can reuse it.
class SelfConsistentField {
 public:
  explicit SelfConsistentField(std::shared_ptr<const field::StiffnessSystem> system,
                               Curvature curvature = Curvature::Projected);

  const field::FieldState& solve(const Ensemble& ensemble);
  bool has_field() const { return field_.has_value(); }
  const field::FieldState& field() const;

  const field::StiffnessSystem& system() const { return *system_; }
  Curvature curvature() const { return curvature_; }
  std::size_t nudged_total() const { return nudged_total_; }
  std::size_t solve_count() const { return solve_count_; }

 private:
  std::shared_ptr<const field::StiffnessSystem> system_;
  Curvature curvature_;
  std::optional<field::FieldState> field_;
  std::size_t nudged_total_ = 0;
  std::size_t solve_count_ = 0;
};

/// One kick-drift-kick step. (P, q*) are kicked, (Q, p*) drifted. The field
/// is solved once, after the drift.
void leapfrog_step(Ensemble& ensemble, double dt, SelfConsistentField& pipeline);
void leapfrog_step(Ensemble& ensemble, double dt, const PrescribedPotential& potential);

/// sum_a (psi*_a P_a^2 / 2m + q*_a P_a / m) + 0.5 Phi^T A Phi.
double discrete_hamiltonian(const Ensemble& ensemble, const field::FieldState& field);
/// Kinetic part plus sum_a (psi*_a V(Q_a) - p*_a V'(Q_a)).
double discrete_hamiltonian(const Ensemble& ensemble, const PrescribedPotential& potential);

}  // namespace swpic::dynamics
