#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "swpic/core.hpp"

namespace swpic::field {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Gauss-Legendre rule on [0, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre(int n_points);

/// Equispaced Lagrange basis of degree k on the reference element [0, 1].
/// Local node 0 is the left vertex, node k the right vertex.
void lagrange_values(int degree, double xi, std::span<double> out);
void lagrange_derivatives(int degree, double xi, std::span<double> out);
void lagrange_second_derivatives(int degree, double xi, std::span<double> out);

/// Quasi-uniform partition of the periodic interval [0, L) carrying the
/// continuous Lagrange space of degree 1, 2 or 3. Element e spans
/// [vertex(e), vertex(e + 1)), with the last element closing onto L.
class PeriodicMesh {
 public:
  PeriodicMesh(double length, std::vector<double> vertices, int degree);
  static PeriodicMesh uniform(double length, int n_elements, int degree);

  double length() const { return length_; }
  int degree() const { return degree_; }
  int n_elements() const { return static_cast<int>(vertices_.size()); }
  std::size_t n_dofs() const { return vertices_.size() * static_cast<std::size_t>(degree_); }

  double vertex(int e) const { return vertices_[static_cast<std::size_t>(e)]; }
  double element_size(int e) const { return sizes_[static_cast<std::size_t>(e)]; }
  double max_element_size() const;
  double min_element_size() const;
  bool is_uniform() const { return uniform_; }

  /// Global dof of local node `local` in element e.
  std::size_t dof(int e, int local) const {
    return (static_cast<std::size_t>(e) * degree_ + local) % n_dofs();
  }
  double node_coordinate(std::size_t j) const;

  /// Element containing q (wrapped to [0, L)) and the reference coordinate.
  struct Location {
    int element;
    double xi;
  };
  Location locate(double q) const;

 private:
  double length_;
  int degree_;
  std::vector<double> vertices_;
  std::vector<double> sizes_;
  bool uniform_ = false;
};

/// Sparse symmetric matrix stored row-wise with sorted column indices.
struct SparseRows {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;

  std::vector<double> multiply(std::span<const double> x) const;
  double inf_norm() const;
  double quadratic_form(std::span<const double> x) const;
};

/// Direct solver for a symmetric periodic banded matrix. The last `band`
/// unknowns (the ones closing the periodic loop) and optionally a zero-mean
/// Lagrange multiplier form a border; the rest is a banded SPD block
/// factorized by Cholesky, and the small Schur complement by LU.
class BorderedBandSolver {
 public:
  BorderedBandSolver() = default;
  BorderedBandSolver(const SparseRows& matrix, int band, bool zero_mean_constraint);

  /// Solves the (possibly augmented) system. With the constraint enabled the
  /// result satisfies sum(x) = 0 and the multiplier is dropped.
  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  std::size_t n_ = 0;
  std::size_t n_interior_ = 0;
  std::size_t n_border_ = 0;
  int band_ = 0;
  std::vector<double> band_factor_;  // LAPACK 'L' band storage, ldab = band + 1
  std::vector<double> coupling_;     // n_interior x n_border, column-major
  std::vector<double> interior_solve_of_coupling_;
  std::vector<double> schur_lu_;     // n_border x n_border, column-major
  std::vector<int> schur_pivots_;
};

/// Periodic stiffness matrix A_ij = int phi_i' phi_j' with its gauge-fixed
/// factorization, plus the mass matrix used by the gradient projection.
class StiffnessSystem {
 public:
  explicit StiffnessSystem(std::shared_ptr<const PeriodicMesh> mesh);

  const PeriodicMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const PeriodicMesh> mesh_ptr() const { return mesh_; }
  const SparseRows& stiffness() const { return stiffness_; }
  const SparseRows& mass() const { return mass_; }

  std::vector<double> solve_zero_mean(std::span<const double> rhs) const {
    return stiffness_solver_.solve(rhs);
  }
  std::vector<double> solve_mass(std::span<const double> rhs) const {
    return mass_solver_.solve(rhs);
  }

 private:
  std::shared_ptr<const PeriodicMesh> mesh_;
  SparseRows stiffness_;
  SparseRows mass_;
  BorderedBandSolver stiffness_solver_;
  BorderedBandSolver mass_solver_;
};

std::shared_ptr<const StiffnessSystem> assemble_stiffness(const PeriodicMesh& mesh);

/// Nodal coefficients of phi_h together with the L2 projection of phi_h'
/// back into the same space, used to reconstruct phi_h''.
class FieldState {
 public:
  FieldState(std::shared_ptr<const StiffnessSystem> system, std::vector<double> phi);

  const StiffnessSystem& system() const { return *system_; }
  std::shared_ptr<const StiffnessSystem> system_ptr() const { return system_; }
  const PeriodicMesh& mesh() const { return system_->mesh(); }
  std::span<const double> phi() const { return phi_; }
  std::span<const double> projected_gradient() const { return projected_gradient_; }

  /// Electrostatic energy 0.5 * Phi^T A Phi.
  double energy() const;

 private:
  std::shared_ptr<const StiffnessSystem> system_;
  std::vector<double> phi_;
  std::vector<double> projected_gradient_;
};

/// Right-hand side b_j = sum_a e [psi*_a phi_j(Q_a) - p*_a phi_j'(Q_a)].
struct Deposit {
  std::vector<double> rhs;
  std::size_t nudged = 0;  // particles moved off a mesh vertex
};

/// Raw deposition, before removal of the uniform background.
Deposit assemble_rhs(std::span<const DecoratedParticle> particles, const PeriodicMesh& mesh,
                     double charge = 1.0);

/// Deposition with the mean of b subtracted (neutralizing background).
Deposit deposit_charge(std::span<const DecoratedParticle> particles, const PeriodicMesh& mesh,
                       double charge = 1.0);

/// Solves A Phi = b with 1^T Phi = 0. b must already be mean-free.
FieldState solve_potential(std::shared_ptr<const StiffnessSystem> system, std::span<const double> rhs);

struct FieldSample {
  double phi = 0.0;
  double dphi = 0.0;
  double d2phi_projected = 0.0;
  double d2phi_element = 0.0;  // raw second derivative inside the element
};

FieldSample eval_field(const FieldState& state, double q);

/// Closed-form periodic potential of a single monopole-dipole source with a
/// neutralizing background and zero mean.
double exact_single_source(double psi_star, double p_star, double L, double Q, double q);
/// Its derivative away from the source.
double exact_single_source_derivative(double psi_star, double p_star, double L, double Q, double q);

/// Piecewise Gauss approximation of ||phi_h - exact||_L2 over [0, L).
/// Element integrals are split at every breakpoint so jumps of `exact` are
/// never straddled. quad_per_element must be at least degree + 3.
double l2_error(const FieldState& state, const std::function<double(double)>& exact,
                int quad_per_element, std::span<const double> breakpoints = {});

/// Two-column CSV (node, Phi).
void write_potential_csv(const FieldState& state, const std::string& path);

}  // namespace swpic::field
