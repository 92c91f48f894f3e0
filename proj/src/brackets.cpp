#include "swpic/brackets.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swpic::brackets {

namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DomainError(std::string("dimension mismatch in ") + what + ": " + std::to_string(got) +
                      " vs " + std::to_string(want));
  }
}

void check_point(const PhasePoint& at) {
  const std::size_t d = at.dim();
  if (d == 0) throw DomainError("phase point must have dimension at least 1");
  require_dim(at.group.P.size(), d, "group point");
  require_dim(at.dual.q_star.size(), d, "dual point");
  require_dim(at.dual.p_star.size(), d, "dual point");
}

void check_vector(const PhaseVector& v, std::size_t d) {
  require_dim(v.Q.size(), d, "gradient");
  require_dim(v.P.size(), d, "gradient");
  require_dim(v.q_star.size(), d, "gradient");
  require_dim(v.p_star.size(), d, "gradient");
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Flattened coordinate access: [Q | P | Psi | q* | p* | psi*].
std::size_t n_coords(std::size_t d) { return 4 * d + 2; }

double& coord(PhasePoint& x, std::size_t idx) {
  const std::size_t d = x.dim();
  if (idx < d) return x.group.Q[idx];
  if (idx < 2 * d) return x.group.P[idx - d];
  if (idx == 2 * d) return x.group.Psi;
  if (idx < 3 * d + 1) return x.dual.q_star[idx - 2 * d - 1];
  if (idx < 4 * d + 1) return x.dual.p_star[idx - 3 * d - 1];
  return x.dual.psi_star;
}

double& component(PhaseVector& v, std::size_t idx) {
  const std::size_t d = v.dim();
  if (idx < d) return v.Q[idx];
  if (idx < 2 * d) return v.P[idx - d];
  if (idx == 2 * d) return v.Psi;
  if (idx < 3 * d + 1) return v.q_star[idx - 2 * d - 1];
  if (idx < 4 * d + 1) return v.p_star[idx - 3 * d - 1];
  return v.psi_star;
}

ReducedGradient reduce(const PhaseVector& g) { return {g.Q, g.P, g.q_star, g.p_star}; }

double evaluate_bracket(BracketKind kind, const GradientAt& gf, const GradientAt& gg, const PhasePoint& at) {
  if (kind == BracketKind::Full) return full_bracket(gf, gg, at);
  return reduced_bracket(reduce(gf), reduce(gg), at.dual.psi_star);
}

using Stencil = double (*)(const Observable&, PhasePoint&, std::size_t, double);

double central2(const Observable& f, PhasePoint& x, std::size_t idx, double h) {
  double& c = coord(x, idx);
  const double c0 = c;
  c = c0 + h;
  const double fp = f(x);
  c = c0 - h;
  const double fm = f(x);
  c = c0;
  return (fp - fm) / (2.0 * h);
}

double central4(const Observable& f, PhasePoint& x, std::size_t idx, double h) {
  double& c = coord(x, idx);
  const double c0 = c;
  c = c0 + 2.0 * h;
  const double f2p = f(x);
  c = c0 + h;
  const double f1p = f(x);
  c = c0 - h;
  const double f1m = f(x);
  c = c0 - 2.0 * h;
  const double f2m = f(x);
  c = c0;
  return (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
}

GradientAt gradient_with(Stencil stencil, const Observable& f, const PhasePoint& at, double step) {
  PhasePoint x = at;
  const std::size_t d = at.dim();
  GradientAt g = PhaseVector::zeros(d);
  for (std::size_t i = 0; i < n_coords(d); ++i) {
    const double h = step * std::max(1.0, std::abs(coord(x, i)));
    component(g, i) = stencil(f, x, i, h);
  }
  return g;
}

}  // namespace

HeisenbergPoint heisenberg_mul(const HeisenbergPoint& a, const HeisenbergPoint& b) {
  const std::size_t d = a.dim();
  require_dim(b.dim(), d, "heisenberg_mul");
  require_dim(a.P.size(), d, "heisenberg_mul");
  require_dim(b.P.size(), d, "heisenberg_mul");
  HeisenbergPoint out{Vec(d), Vec(d), 0.0};
  for (std::size_t i = 0; i < d; ++i) {
    out.Q[i] = a.Q[i] + b.Q[i];
    out.P[i] = a.P[i] + b.P[i];
  }
  out.Psi = a.Psi + b.Psi + 0.5 * (dot(a.Q, b.P) - dot(b.Q, a.P));
  return out;
}

HeisenbergPoint heisenberg_inverse(const HeisenbergPoint& a) {
  HeisenbergPoint out = a;
  for (auto& v : out.Q) v = -v;
  for (auto& v : out.P) v = -v;
  out.Psi = -a.Psi;
  return out;
}

CoAlgebraPoint left_trivialize(const HeisenbergPoint& at, const Covector& covector) {
  const std::size_t d = at.dim();
  require_dim(covector.Q_star.size(), d, "left_trivialize");
  require_dim(covector.P_star.size(), d, "left_trivialize");
  require_dim(at.P.size(), d, "left_trivialize");
  CoAlgebraPoint out{Vec(d), Vec(d), covector.Psi_star};
  for (std::size_t i = 0; i < d; ++i) {
    out.q_star[i] = covector.Q_star[i] - 0.5 * covector.Psi_star * at.P[i];
    out.p_star[i] = covector.P_star[i] + 0.5 * covector.Psi_star * at.Q[i];
  }
  return out;
}

Covector inverse_trivialize(const HeisenbergPoint& at, const CoAlgebraPoint& dual) {
  const std::size_t d = at.dim();
  require_dim(dual.q_star.size(), d, "inverse_trivialize");
  require_dim(dual.p_star.size(), d, "inverse_trivialize");
  require_dim(at.P.size(), d, "inverse_trivialize");
  Covector out{Vec(d), Vec(d), dual.psi_star};
  for (std::size_t i = 0; i < d; ++i) {
    out.Q_star[i] = dual.q_star[i] + 0.5 * dual.psi_star * at.P[i];
    out.P_star[i] = dual.p_star[i] - 0.5 * dual.psi_star * at.Q[i];
  }
  return out;
}

double full_bracket(const GradientAt& gf, const GradientAt& gg, const PhasePoint& at) {
  check_point(at);
  const std::size_t d = at.dim();
  check_vector(gf, d);
  check_vector(gg, d);
  const auto& Q = at.group.Q;
  const auto& P = at.group.P;
  const double psi = at.dual.psi_star;

  // canonical pairing of Z = (Q, P) with z* = (q*, p*)
  double canonical = 0.0;
  double twisted = 0.0;
  double phase_f = 0.0;  // Q . dg/dp* - P . dg/dq*
  double phase_g = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    canonical += gf.Q[i] * gg.q_star[i] - gg.Q[i] * gf.q_star[i];
    canonical += gf.P[i] * gg.p_star[i] - gg.P[i] * gf.p_star[i];
    twisted += gf.q_star[i] * gg.p_star[i] - gg.q_star[i] * gf.p_star[i];
    phase_f += Q[i] * gg.p_star[i] - P[i] * gg.q_star[i];
    phase_g += Q[i] * gf.p_star[i] - P[i] * gf.q_star[i];
  }
  return canonical + (gf.Psi * gg.psi_star - gg.Psi * gf.psi_star) - psi * twisted +
         0.5 * (gf.Psi * phase_f - gg.Psi * phase_g);
}

double reduced_bracket(const ReducedGradient& gf, const ReducedGradient& gg, double psi_star) {
  const std::size_t d = gf.Q.size();
  for (const Vec* v : {&gf.P, &gf.q_star, &gf.p_star, &gg.Q, &gg.P, &gg.q_star, &gg.p_star}) {
    require_dim(v->size(), d, "reduced_bracket");
  }
  double canonical = 0.0;
  double twisted = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    canonical += gf.Q[i] * gg.q_star[i] - gg.Q[i] * gf.q_star[i];
    canonical += gf.P[i] * gg.p_star[i] - gg.P[i] * gf.p_star[i];
    twisted += gf.q_star[i] * gg.p_star[i] - gg.q_star[i] * gf.p_star[i];
  }
  return canonical - psi_star * twisted;
}

Tangent hamiltonian_vector_field(const GradientAt& gH, const PhasePoint& at) {
  check_point(at);
  const std::size_t d = at.dim();
  check_vector(gH, d);
  const auto& Q = at.group.Q;
  const auto& P = at.group.P;
  const double psi = at.dual.psi_star;
  Tangent t = PhaseVector::zeros(d);
  double phase = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    t.Q[i] = gH.q_star[i];
    t.P[i] = gH.p_star[i];
    t.q_star[i] = -gH.Q[i] - psi * gH.p_star[i] + 0.5 * P[i] * gH.Psi;
    t.p_star[i] = -gH.P[i] + psi * gH.q_star[i] - 0.5 * Q[i] * gH.Psi;
    phase += Q[i] * gH.p_star[i] - P[i] * gH.q_star[i];
  }
  t.Psi = gH.psi_star + 0.5 * phase;
  t.psi_star = -gH.Psi;
  return t;
}

GradientAt finite_difference_gradient(const Observable& f, const PhasePoint& at, double step) {
  check_point(at);
  return gradient_with(central2, f, at, step);
}

JacobiResult jacobi_residual(const Observable& f, const Observable& g, const Observable& h,
                             const PhasePoint& at, BracketKind kind, double fd_step) {
  check_point(at);
  auto bracket_of = [kind, fd_step](const Observable& a, const Observable& b) -> Observable {
    return [=](const PhasePoint& x) {
      return evaluate_bracket(kind, gradient_with(central4, a, x, fd_step), gradient_with(central4, b, x, fd_step), x);
    };
  };
  auto outer = [&](const Observable& a, const Observable& inner) {
    return evaluate_bracket(kind, gradient_with(central4, a, at, fd_step), gradient_with(central2, inner, at, fd_step),
                            at);
  };
  const double t1 = outer(f, bracket_of(g, h));
  const double t2 = outer(g, bracket_of(h, f));
  const double t3 = outer(h, bracket_of(f, g));
  return {std::abs(t1 + t2 + t3), std::abs(t1) + std::abs(t2) + std::abs(t3)};
}

}  // namespace swpic::brackets
