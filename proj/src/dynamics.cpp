#include "swpic/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace swpic::dynamics {

namespace {

void require_step(double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
}

double kinetic(const Ensemble& ensemble) {
  double h = 0.0;
  for (const auto& p : ensemble.particles) {
    h += p.psi_star * p.P * p.P / (2.0 * ensemble.mass) + p.q_star * p.P / ensemble.mass;
  }
  return h;
}

void drift(Ensemble& ensemble, double dt) {
  const double L = ensemble.domain.length;
  const double m = ensemble.mass;
  for (auto& p : ensemble.particles) {
    p.Q = wrap_position(p.Q + dt * p.P / m, L);
    p.p_star -= dt * p.q_star / m;
  }
}

}  // namespace

double Ensemble::total_weight() const {
  double s = 0.0;
  for (const auto& p : particles) s += p.psi_star;
  return s;
}

PrescribedPotential PrescribedPotential::periodic(double amplitude, double L, int mode) {
  if (!(L > 0.0)) throw DomainError("potential period must be positive");
  return {amplitude, 2.0 * std::numbers::pi * mode / L};
}

double PrescribedPotential::value(double q) const { return amplitude * (1.0 - std::cos(wavenumber * q)); }
double PrescribedPotential::slope(double q) const { return amplitude * wavenumber * std::sin(wavenumber * q); }
double PrescribedPotential::curvature(double q) const {
  return amplitude * wavenumber * wavenumber * std::cos(wavenumber * q);
}

ParticleRate swpic_rhs(const DecoratedParticle& particle, const field::FieldState& field, double mass,
                       double charge, Curvature curvature) {
  const auto s = field::eval_field(field, particle.Q);
  const double d2 = curvature == Curvature::Projected ? s.d2phi_projected : s.d2phi_element;
  return {particle.P / mass, -charge * s.dphi, charge * particle.p_star * d2, -particle.q_star / mass};
}

ParticleRate prescribed_rhs(const DecoratedParticle& particle, const PrescribedPotential& potential, double mass) {
  return {particle.P / mass, -potential.slope(particle.Q), particle.p_star * potential.curvature(particle.Q),
          -particle.q_star / mass};
}

SelfConsistentField::SelfConsistentField(std::shared_ptr<const field::StiffnessSystem> system,
                                         Curvature curvature)
    : system_(std::move(system)), curvature_(curvature) {}

const field::FieldState& SelfConsistentField::solve(const Ensemble& ensemble) {
  auto deposit = field::deposit_charge(ensemble.particles, system_->mesh(), ensemble.charge);
  nudged_total_ += deposit.nudged;
  ++solve_count_;
  field_.emplace(field::solve_potential(system_, deposit.rhs));
  return *field_;
}

const field::FieldState& SelfConsistentField::field() const {
  if (!field_) throw std::logic_error("no field has been solved yet");
  return *field_;
}

namespace {

void kick(Ensemble& ensemble, double half_dt, const field::FieldState& field, Curvature curvature) {
  const double e = ensemble.charge;
  for (auto& p : ensemble.particles) {
    const auto s = field::eval_field(field, p.Q);
    const double d2 = curvature == Curvature::Projected ? s.d2phi_projected : s.d2phi_element;
    p.P -= half_dt * e * s.dphi;
    p.q_star += half_dt * e * p.p_star * d2;
  }
}

void kick(Ensemble& ensemble, double half_dt, const PrescribedPotential& potential) {
  for (auto& p : ensemble.particles) {
    p.P -= half_dt * potential.slope(p.Q);
    p.q_star += half_dt * p.p_star * potential.curvature(p.Q);
  }
}

}  // namespace

void leapfrog_step(Ensemble& ensemble, double dt, SelfConsistentField& pipeline) {
  require_step(dt);
  if (!pipeline.has_field()) pipeline.solve(ensemble);
  kick(ensemble, 0.5 * dt, pipeline.field(), pipeline.curvature());
  drift(ensemble, dt);
  const auto& field = pipeline.solve(ensemble);
  kick(ensemble, 0.5 * dt, field, pipeline.curvature());
}

void leapfrog_step(Ensemble& ensemble, double dt, const PrescribedPotential& potential) {
  require_step(dt);
  kick(ensemble, 0.5 * dt, potential);
  drift(ensemble, dt);
  kick(ensemble, 0.5 * dt, potential);
}

double discrete_hamiltonian(const Ensemble& ensemble, const field::FieldState& field) {
  return kinetic(ensemble) + field.energy();
}

double discrete_hamiltonian(const Ensemble& ensemble, const PrescribedPotential& potential) {
  double h = kinetic(ensemble);
  for (const auto& p : ensemble.particles) {
    h += p.psi_star * potential.value(p.Q) - p.p_star * potential.slope(p.Q);
  }
  return h;
}

}  // namespace swpic::dynamics
