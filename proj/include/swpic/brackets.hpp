#pragma once

#include <functional>
#include <vector>

#include "swpic/core.hpp"

// Heisenberg group, left-trivialized cotangent bundle B x b*, and the Poisson
// brackets it carries. Dimension d is a runtime quantity; simulations use d = 1.
namespace swpic::brackets {

using Vec = std::vector<double>;

struct HeisenbergPoint {
  Vec Q;
  Vec P;
  double Psi = 0.0;

  std::size_t dim() const { return Q.size(); }
  static HeisenbergPoint identity(std::size_t d) { return {Vec(d, 0.0), Vec(d, 0.0), 0.0}; }
};

/// Element (q*, p*, psi*) of the dual algebra b*.
struct CoAlgebraPoint {
  Vec q_star;
  Vec p_star;
  double psi_star = 0.0;
};

/// Fiber coordinates (Q*, P*, Psi*) of T*B before trivialization.
struct Covector {
  Vec Q_star;
  Vec P_star;
  double Psi_star = 0.0;
};

struct PhasePoint {
  HeisenbergPoint group;
  CoAlgebraPoint dual;

  std::size_t dim() const { return group.dim(); }
};

/// A vector on B x b*, used both for gradients of observables (partial
/// derivatives with respect to each coordinate) and for tangent vectors.
struct PhaseVector {
  Vec Q;
  Vec P;
  double Psi = 0.0;
  Vec q_star;
  Vec p_star;
  double psi_star = 0.0;

  static PhaseVector zeros(std::size_t d) {
    return {Vec(d, 0.0), Vec(d, 0.0), 0.0, Vec(d, 0.0), Vec(d, 0.0), 0.0};
  }
  std::size_t dim() const { return Q.size(); }
};

using GradientAt = PhaseVector;
using Tangent = PhaseVector;

/// Gradient on the reduced space (Q, P, q*, p*); psi* enters as a parameter.
struct ReducedGradient {
  Vec Q;
  Vec P;
  Vec q_star;
  Vec p_star;
};

HeisenbergPoint heisenberg_mul(const HeisenbergPoint& a, const HeisenbergPoint& b);
HeisenbergPoint heisenberg_inverse(const HeisenbergPoint& a);

CoAlgebraPoint left_trivialize(const HeisenbergPoint& at, const Covector& covector);
Covector inverse_trivialize(const HeisenbergPoint& at, const CoAlgebraPoint& dual);

/// {f, g} on B x b*, including the psi* and phase-coupling terms.
double full_bracket(const GradientAt& gf, const GradientAt& gg, const PhasePoint& at);

/// {f, g}_2 on the reduced phase space after eliminating Psi.
double reduced_bracket(const ReducedGradient& gf, const ReducedGradient& gg, double psi_star);

/// Hamilton equations d/dt z = {z, H} for every coordinate of B x b*.
Tangent hamiltonian_vector_field(const GradientAt& gH, const PhasePoint& at);

using Observable = std::function<double(const PhasePoint&)>;

enum class BracketKind { Full, Reduced };

/// Central finite-difference gradient of f. `step` is relative to
/// max(1, |coordinate|).
GradientAt finite_difference_gradient(const Observable& f, const PhasePoint& at, double step);

struct JacobiResult {
  double residual = 0.0;  // |{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|
  double scale = 0.0;     // sum of the magnitudes of the three terms
};

/// Jacobi identity residual. Inner gradients use a fourth-order stencil,
/// outer gradients central differences with the same relative step.
JacobiResult jacobi_residual(const Observable& f, const Observable& g, const Observable& h,
                             const PhasePoint& at, BracketKind kind = BracketKind::Full,
                             double fd_step = 1e-5);

}  // namespace swpic::brackets
