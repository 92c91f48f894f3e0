#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "swpic/bench/diagnostics.hpp"
#include "swpic/field.hpp"

namespace swpic::bench {

class OracleIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// f sampled at q_i = i L / n_q (periodic nodes) and p_j = -p_max + (j + 1/2) dp.
struct PhaseGrid {
  double length = 1.0;
  int n_q = 0;
  int n_p = 0;
  double p_max = 1.0;
  double n0 = 1.0;
  std::vector<double> f;  // f[i * n_p + j]

  double dq() const { return length / n_q; }
  double dp() const { return 2.0 * p_max / n_p; }
  double q(int i) const { return dq() * i; }
  double p(int j) const { return -p_max + dp() * (j + 0.5); }
  double& at(int i, int j) { return f[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_p) + static_cast<std::size_t>(j)]; }
  double at(int i, int j) const { return f[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_p) + static_cast<std::size_t>(j)]; }

  double mass() const;
  std::vector<double> density() const;

  static PhaseGrid landau(double L, int n_q, int n_p, double p_max, double amplitude, double wavenumber,
                          double temperature = 1.0);
  static PhaseGrid two_stream(double L, int n_q, int n_p, double p_max, double temperature, double beam_speed = 1.0);
};

/// Strang-split semi-Lagrangian Vlasov-Poisson reference solver. The field
/// uses the same periodic linear finite elements as the particle codes, on
/// n_q elements whose vertices are the grid nodes.
class VlasovOracle {
 public:
  /// With self_consistent = false the kick is skipped (free streaming).
  explicit VlasovOracle(PhaseGrid grid, bool self_consistent = true);

  /// Half advection in q, field solve, full kick in p, half advection in q.
  void step(double dt);

  const PhaseGrid& grid() const { return grid_; }
  field::FieldState field() const;
  /// E = -phi' at the grid nodes (mean of the two adjacent element slopes).
  GridField electric_field() const;

 private:
  void advect_q(double dt);
  void kick_p(const GridField& E, double dt);

  PhaseGrid grid_;
  std::shared_ptr<const field::StiffnessSystem> system_;
  bool self_consistent_ = true;
};

/// One oracle step on a copy of the grid.
PhaseGrid sl_step(const PhaseGrid& grid, double dt);

}  // namespace swpic::bench
