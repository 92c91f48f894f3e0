#include "swpic/bench/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace swpic::bench {

namespace {

constexpr double kMaxMassLossPerStep = 1e-3;

struct CubicWeights {
  long base;  // node index of the first of four points
  double w[4];
};

// four-point Lagrange weights for the position s (in grid units)
CubicWeights cubic_weights(double s) {
  const double fl = std::floor(s);
  const double t = s - fl;
  CubicWeights c;
  c.base = static_cast<long>(fl) - 1;
  c.w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
  c.w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  c.w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
  c.w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  return c;
}

double maxwellian(double p, double temperature) {
  return std::exp(-p * p / (2.0 * temperature)) / std::sqrt(2.0 * std::numbers::pi * temperature);
}

PhaseGrid empty_grid(double L, int n_q, int n_p, double p_max) {
  if (n_q < 4 || n_p < 4) throw DomainError("oracle grid needs at least 4 points per direction");
  if (!(L > 0.0) || !(p_max > 0.0)) throw DomainError("oracle grid extents must be positive");
  PhaseGrid g;
  g.length = L;
  g.n_q = n_q;
  g.n_p = n_p;
  g.p_max = p_max;
  g.f.assign(static_cast<std::size_t>(n_q) * static_cast<std::size_t>(n_p), 0.0);
  return g;
}

}  // namespace

double PhaseGrid::mass() const {
  double s = 0.0;
  for (double v : f) s += v;
  return s * dq() * dp();
}

std::vector<double> PhaseGrid::density() const {
  std::vector<double> rho(static_cast<std::size_t>(n_q), 0.0);
  for (int i = 0; i < n_q; ++i) {
    double s = 0.0;
    for (int j = 0; j < n_p; ++j) s += at(i, j);
    rho[static_cast<std::size_t>(i)] = s * dp();
  }
  return rho;
}

PhaseGrid PhaseGrid::landau(double L, int n_q, int n_p, double p_max, double amplitude, double wavenumber,
                            double temperature) {
  PhaseGrid g = empty_grid(L, n_q, n_p, p_max);
  for (int i = 0; i < n_q; ++i) {
    const double spatial = 1.0 + amplitude * std::cos(wavenumber * g.q(i));
    for (int j = 0; j < n_p; ++j) g.at(i, j) = g.n0 * spatial * maxwellian(g.p(j), temperature);
  }
  return g;
}

PhaseGrid PhaseGrid::two_stream(double L, int n_q, int n_p, double p_max, double temperature, double beam_speed) {
  PhaseGrid g = empty_grid(L, n_q, n_p, p_max);
  for (int i = 0; i < n_q; ++i) {
    for (int j = 0; j < n_p; ++j) {
      const double p = g.p(j);
      g.at(i, j) = g.n0 * 0.5 * (maxwellian(p - beam_speed, temperature) + maxwellian(p + beam_speed, temperature));
    }
  }
  return g;
}

VlasovOracle::VlasovOracle(PhaseGrid grid, bool self_consistent)
    : grid_(std::move(grid)),
      system_(field::assemble_stiffness(field::PeriodicMesh::uniform(grid_.length, grid_.n_q, 1))),
      self_consistent_(self_consistent) {}

field::FieldState VlasovOracle::field() const {
  // b_j = int rho_h phi_j with rho_h the nodal interpolant of the density
  const auto rho = grid_.density();
  auto rhs = system_->mass().multiply(rho);
  // twice: near equilibrium the first pass leaves a sum of roundoff size
  for (int pass = 0; pass < 2; ++pass) {
    double mean = 0.0;
    for (double v : rhs) mean += v;
    mean /= static_cast<double>(rhs.size());
    for (double& v : rhs) v -= mean;
  }
  return field::solve_potential(system_, rhs);
}

GridField VlasovOracle::electric_field() const {
  const auto state = field();
  const auto phi = state.phi();
  const auto n = static_cast<std::size_t>(grid_.n_q);
  GridField E{grid_.length, std::vector<double>(n)};
  const double h = grid_.dq();
  for (std::size_t i = 0; i < n; ++i) {
    E.values[i] = -(phi[(i + 1) % n] - phi[(i + n - 1) % n]) / (2.0 * h);
  }
  return E;
}

void VlasovOracle::advect_q(double dt) {
  const int nq = grid_.n_q;
  const int np = grid_.n_p;
  std::vector<double> column(static_cast<std::size_t>(nq));
  for (int j = 0; j < np; ++j) {
    for (int i = 0; i < nq; ++i) column[static_cast<std::size_t>(i)] = grid_.at(i, j);
    // f(q_i) <- f(q_i - p dt): departure point in grid units
    const double shift = grid_.p(j) * dt / grid_.dq();
    const auto cw = cubic_weights(-shift);
    for (int i = 0; i < nq; ++i) {
      double v = 0.0;
      for (int s = 0; s < 4; ++s) {
        const long idx = ((i + cw.base + s) % nq + nq) % nq;
        v += cw.w[s] * column[static_cast<std::size_t>(idx)];
      }
      grid_.at(i, j) = v;
    }
  }
}

void VlasovOracle::kick_p(const GridField& E, double dt) {
  const int nq = grid_.n_q;
  const int np = grid_.n_p;
  std::vector<double> row(static_cast<std::size_t>(np));
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) row[static_cast<std::size_t>(j)] = grid_.at(i, j);
    const double shift = E.values[static_cast<std::size_t>(i)] * dt / grid_.dp();
    const auto cw = cubic_weights(-shift);
    double before = 0.0;
    double after = 0.0;
    for (int j = 0; j < np; ++j) {
      double v = 0.0;
      for (int s = 0; s < 4; ++s) {
        const long idx = j + cw.base + s;
        if (idx >= 0 && idx < np) v += cw.w[s] * row[static_cast<std::size_t>(idx)];
      }
      before += v;
      v = std::max(v, 0.0);
      after += v;
      grid_.at(i, j) = v;
    }
    // the kick must not change the density at q_i; undo the mass added by clipping
    if (after > 0.0 && before > 0.0 && after != before) {
      const double scale = before / after;
      for (int j = 0; j < np; ++j) grid_.at(i, j) *= scale;
    }
  }
}

void VlasovOracle::step(double dt) {
  if (!(dt > 0.0)) throw DomainError("oracle time step must be positive");
  const double before = grid_.mass();
  advect_q(0.5 * dt);
  if (self_consistent_) kick_p(electric_field(), dt);
  advect_q(0.5 * dt);
  const double after = grid_.mass();
  if (std::abs(after - before) > kMaxMassLossPerStep * before) {
    throw OracleIntegrityError("oracle mass changed by " + std::to_string((after - before) / before) +
                               " in one step");
  }
}

PhaseGrid sl_step(const PhaseGrid& grid, double dt) {
  VlasovOracle oracle(grid);
  oracle.step(dt);
  return oracle.grid();
}

}  // namespace swpic::bench
