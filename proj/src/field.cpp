#include "swpic/field.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

namespace swpic::field {

namespace {

constexpr double kSolveTolerance = 1e-12;
constexpr double kMaxSizeRatio = 4.0;

double lagrange_node(int degree, int i) { return static_cast<double>(i) / degree; }

void check_degree(int degree) {
  if (degree < 1 || degree > 3) {
    throw MeshError("Lagrange degree must be 1, 2 or 3, got " + std::to_string(degree));
  }
}

}  // namespace

QuadratureRule gauss_legendre(int n_points) {
  if (n_points < 1) throw DomainError("quadrature needs at least one point");
  QuadratureRule rule;
  rule.points.resize(static_cast<std::size_t>(n_points));
  rule.weights.resize(static_cast<std::size_t>(n_points));
  const int n = n_points;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map from [-1, 1] to [0, 1]
    rule.points[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    rule.points[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
    rule.weights[static_cast<std::size_t>(i)] = 0.5 * w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
  }
  if (n % 2 == 1) rule.points[static_cast<std::size_t>(n / 2)] = 0.5;
  return rule;
}

void lagrange_values(int degree, double xi, std::span<double> out) {
  for (int i = 0; i <= degree; ++i) {
    const double xi_i = lagrange_node(degree, i);
    double v = 1.0;
    for (int j = 0; j <= degree; ++j) {
      if (j == i) continue;
      const double xj = lagrange_node(degree, j);
      v *= (xi - xj) / (xi_i - xj);
    }
    out[static_cast<std::size_t>(i)] = v;
  }
}

void lagrange_derivatives(int degree, double xi, std::span<double> out) {
  for (int i = 0; i <= degree; ++i) {
    const double xi_i = lagrange_node(degree, i);
    double sum = 0.0;
    for (int m = 0; m <= degree; ++m) {
      if (m == i) continue;
      double term = 1.0 / (xi_i - lagrange_node(degree, m));
      for (int j = 0; j <= degree; ++j) {
        if (j == i || j == m) continue;
        const double xj = lagrange_node(degree, j);
        term *= (xi - xj) / (xi_i - xj);
      }
      sum += term;
    }
    out[static_cast<std::size_t>(i)] = sum;
  }
}

void lagrange_second_derivatives(int degree, double xi, std::span<double> out) {
  for (int i = 0; i <= degree; ++i) {
    const double xi_i = lagrange_node(degree, i);
    double sum = 0.0;
    for (int m = 0; m <= degree; ++m) {
      if (m == i) continue;
      for (int l = 0; l <= degree; ++l) {
        if (l == i || l == m) continue;
        double term = 1.0 / ((xi_i - lagrange_node(degree, m)) * (xi_i - lagrange_node(degree, l)));
        for (int j = 0; j <= degree; ++j) {
          if (j == i || j == m || j == l) continue;
          const double xj = lagrange_node(degree, j);
          term *= (xi - xj) / (xi_i - xj);
        }
        sum += term;
      }
    }
    out[static_cast<std::size_t>(i)] = sum;
  }
}

// ---------------------------------------------------------------------------
// PeriodicMesh

PeriodicMesh::PeriodicMesh(double length, std::vector<double> vertices, int degree)
    : length_(length), degree_(degree), vertices_(std::move(vertices)) {
  check_degree(degree);
  if (!(length_ > 0.0) || !std::isfinite(length_)) throw MeshError("mesh length must be positive");
  if (vertices_.size() < 2) throw MeshError("periodic mesh needs at least two elements");
  if (vertices_.front() != 0.0) throw MeshError("first mesh vertex must be 0");
  const std::size_t n = vertices_.size();
  sizes_.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double right = (e + 1 < n) ? vertices_[e + 1] : length_;
    sizes_[e] = right - vertices_[e];
    if (!(sizes_[e] > 0.0)) {
      throw MeshError("degenerate or unsorted element " + std::to_string(e));
    }
  }
  if (max_element_size() > kMaxSizeRatio * min_element_size()) {
    throw MeshError("mesh is not quasi-uniform (element size ratio above 4)");
  }
}

PeriodicMesh PeriodicMesh::uniform(double length, int n_elements, int degree) {
  if (n_elements < 2) throw MeshError("periodic mesh needs at least two elements");
  std::vector<double> vertices(static_cast<std::size_t>(n_elements));
  for (int e = 0; e < n_elements; ++e) vertices[static_cast<std::size_t>(e)] = length * e / n_elements;
  PeriodicMesh mesh(length, std::move(vertices), degree);
  mesh.uniform_ = true;
  return mesh;
}

double PeriodicMesh::max_element_size() const { return *std::max_element(sizes_.begin(), sizes_.end()); }
double PeriodicMesh::min_element_size() const { return *std::min_element(sizes_.begin(), sizes_.end()); }

double PeriodicMesh::node_coordinate(std::size_t j) const {
  const auto e = static_cast<int>(j / static_cast<std::size_t>(degree_));
  const auto l = static_cast<int>(j % static_cast<std::size_t>(degree_));
  return vertex(e) + element_size(e) * l / degree_;
}

PeriodicMesh::Location PeriodicMesh::locate(double q) const {
  const double w = wrap_position(q, length_);
  const int n = n_elements();
  int e = 0;
  if (uniform_) {
    e = std::min(static_cast<int>(w / sizes_[0]), n - 1);
    if (w < vertex(e)) --e;
    else if (e + 1 < n && w >= vertex(e + 1)) ++e;
  } else {
    auto it = std::upper_bound(vertices_.begin(), vertices_.end(), w);
    e = static_cast<int>(it - vertices_.begin()) - 1;
  }
  const double xi = std::clamp((w - vertex(e)) / element_size(e), 0.0, 1.0);
  return {e, xi};
}

// ---------------------------------------------------------------------------
// SparseRows

std::vector<double> SparseRows::multiply(std::span<const double> x) const {
  std::vector<double> y(rows.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double s = 0.0;
    for (const auto& [j, v] : rows[i]) s += v * x[j];
    y[i] = s;
  }
  return y;
}

double SparseRows::inf_norm() const {
  double m = 0.0;
  for (const auto& row : rows) {
    double s = 0.0;
    for (const auto& entry : row) s += std::abs(entry.second);
    m = std::max(m, s);
  }
  return m;
}

double SparseRows::quadratic_form(std::span<const double> x) const {
  const auto y = multiply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += x[i] * y[i];
  return s;
}

// ---------------------------------------------------------------------------
// BorderedBandSolver

BorderedBandSolver::BorderedBandSolver(const SparseRows& matrix, int band, bool zero_mean_constraint)
    : n_(matrix.rows.size()), band_(band) {
  const auto ub = static_cast<std::size_t>(band);
  if (n_ <= ub) throw MeshError("too few unknowns for the periodic band width");
  n_interior_ = n_ - ub;
  n_border_ = ub + (zero_mean_constraint ? 1 : 0);
  const std::size_t ldab = ub + 1;
  const std::size_t m = n_interior_;
  const std::size_t nb = n_border_;

  band_factor_.assign(ldab * m, 0.0);
  coupling_.assign(m * nb, 0.0);
  std::vector<double> border_block(nb * nb, 0.0);

  for (std::size_t i = 0; i < n_; ++i) {
    for (const auto& [j, v] : matrix.rows[i]) {
      if (i < m && j < m) {
        if (j > i) continue;
        if (i - j > ub) throw MeshError("matrix entry outside the periodic band");
        band_factor_[(i - j) + j * ldab] = v;
      } else if (i < m) {
        coupling_[i + (j - m) * m] = v;
      } else if (j >= m) {
        border_block[(i - m) + (j - m) * nb] = v;
      }
    }
  }
  if (zero_mean_constraint) {
    const std::size_t c = ub;
    for (std::size_t i = 0; i < m; ++i) coupling_[i + c * m] = 1.0;
    for (std::size_t b = 0; b < ub; ++b) {
      border_block[b + c * nb] = 1.0;
      border_block[c + b * nb] = 1.0;
    }
  }

  const auto mi = static_cast<lapack_int>(m);
  lapack_int info = LAPACKE_dpbtrf(LAPACK_COL_MAJOR, 'L', mi, band, band_factor_.data(),
                                   static_cast<lapack_int>(ldab));
  if (info != 0) throw SolverError("banded Cholesky factorization failed", static_cast<double>(info));

  interior_solve_of_coupling_ = coupling_;
  info = LAPACKE_dpbtrs(LAPACK_COL_MAJOR, 'L', mi, band, static_cast<lapack_int>(nb), band_factor_.data(),
                        static_cast<lapack_int>(ldab), interior_solve_of_coupling_.data(), mi);
  if (info != 0) throw SolverError("banded triangular solve failed", static_cast<double>(info));

  schur_lu_ = border_block;
  for (std::size_t a = 0; a < nb; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += coupling_[i + a * m] * interior_solve_of_coupling_[i + b * m];
      schur_lu_[a + b * nb] -= s;
    }
  }
  schur_pivots_.assign(nb, 0);
  const auto nbi = static_cast<lapack_int>(nb);
  info = LAPACKE_dgetrf(LAPACK_COL_MAJOR, nbi, nbi, schur_lu_.data(), nbi, schur_pivots_.data());
  if (info != 0) throw SolverError("singular Schur complement in bordered solve", static_cast<double>(info));
}

std::vector<double> BorderedBandSolver::solve(std::span<const double> rhs) const {
  if (rhs.size() != n_) throw DomainError("right-hand side has the wrong length");
  const std::size_t m = n_interior_;
  const std::size_t nb = n_border_;
  const auto ub = static_cast<std::size_t>(band_);

  std::vector<double> z(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(m));
  LAPACKE_dpbtrs(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(m), band_, 1, band_factor_.data(),
                 band_ + 1, z.data(), static_cast<lapack_int>(m));

  std::vector<double> border(nb, 0.0);
  for (std::size_t a = 0; a < nb; ++a) {
    double s = a < ub ? rhs[m + a] : 0.0;
    for (std::size_t i = 0; i < m; ++i) s -= coupling_[i + a * m] * z[i];
    border[a] = s;
  }
  const auto nbi = static_cast<lapack_int>(nb);
  LAPACKE_dgetrs(LAPACK_COL_MAJOR, 'N', nbi, 1, schur_lu_.data(), nbi, schur_pivots_.data(), border.data(), nbi);

  std::vector<double> x(n_);
  for (std::size_t i = 0; i < m; ++i) {
    double s = z[i];
    for (std::size_t b = 0; b < nb; ++b) s -= interior_solve_of_coupling_[i + b * m] * border[b];
    x[i] = s;
  }
  for (std::size_t b = 0; b < ub; ++b) x[m + b] = border[b];
  return x;
}

// ---------------------------------------------------------------------------
// StiffnessSystem

namespace {

SparseRows to_rows(const std::vector<std::map<std::size_t, double>>& acc) {
  SparseRows out;
  out.rows.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out.rows[i].assign(acc[i].begin(), acc[i].end());
  return out;
}

}  // namespace

StiffnessSystem::StiffnessSystem(std::shared_ptr<const PeriodicMesh> mesh) : mesh_(std::move(mesh)) {
  const PeriodicMesh& m = *mesh_;
  const int k = m.degree();
  const auto nloc = static_cast<std::size_t>(k + 1);
  const QuadratureRule rule = gauss_legendre(k + 1);

  // reference element integrals; scaled by 1/h (stiffness) and h (mass)
  std::vector<double> ref_stiff(nloc * nloc, 0.0);
  std::vector<double> ref_mass(nloc * nloc, 0.0);
  std::vector<double> val(nloc);
  std::vector<double> der(nloc);
  for (std::size_t g = 0; g < rule.points.size(); ++g) {
    lagrange_values(k, rule.points[g], val);
    lagrange_derivatives(k, rule.points[g], der);
    for (std::size_t a = 0; a < nloc; ++a) {
      for (std::size_t b = 0; b < nloc; ++b) {
        ref_stiff[a * nloc + b] += rule.weights[g] * der[a] * der[b];
        ref_mass[a * nloc + b] += rule.weights[g] * val[a] * val[b];
      }
    }
  }

  std::vector<std::map<std::size_t, double>> stiff(m.n_dofs());
  std::vector<std::map<std::size_t, double>> mass(m.n_dofs());
  for (int e = 0; e < m.n_elements(); ++e) {
    const double h = m.element_size(e);
    if (!(h > 0.0)) throw MeshError("degenerate element " + std::to_string(e));
    for (std::size_t a = 0; a < nloc; ++a) {
      const std::size_t i = m.dof(e, static_cast<int>(a));
      for (std::size_t b = 0; b < nloc; ++b) {
        const std::size_t j = m.dof(e, static_cast<int>(b));
        stiff[i][j] += ref_stiff[a * nloc + b] / h;
        mass[i][j] += ref_mass[a * nloc + b] * h;
      }
    }
  }
  stiffness_ = to_rows(stiff);
  mass_ = to_rows(mass);
  stiffness_solver_ = BorderedBandSolver(stiffness_, k, true);
  mass_solver_ = BorderedBandSolver(mass_, k, false);
}

std::shared_ptr<const StiffnessSystem> assemble_stiffness(const PeriodicMesh& mesh) {
  return std::make_shared<const StiffnessSystem>(std::make_shared<const PeriodicMesh>(mesh));
}

// ---------------------------------------------------------------------------
// FieldState

FieldState::FieldState(std::shared_ptr<const StiffnessSystem> system, std::vector<double> phi)
    : system_(std::move(system)), phi_(std::move(phi)) {
  const PeriodicMesh& m = system_->mesh();
  if (phi_.size() != m.n_dofs()) throw DomainError("coefficient vector does not match the mesh");
  const int k = m.degree();
  const auto nloc = static_cast<std::size_t>(k + 1);
  const QuadratureRule rule = gauss_legendre(k + 1);
  std::vector<double> val(nloc);
  std::vector<double> der(nloc);

  // load vector c_i = int phi_h' phi_i, then G = M^{-1} c
  std::vector<double> load(m.n_dofs(), 0.0);
  for (int e = 0; e < m.n_elements(); ++e) {
    const double h = m.element_size(e);
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      lagrange_values(k, rule.points[g], val);
      lagrange_derivatives(k, rule.points[g], der);
      double grad = 0.0;
      for (std::size_t a = 0; a < nloc; ++a) grad += phi_[m.dof(e, static_cast<int>(a))] * der[a];
      grad /= h;
      for (std::size_t a = 0; a < nloc; ++a) {
        load[m.dof(e, static_cast<int>(a))] += rule.weights[g] * h * grad * val[a];
      }
    }
  }
  projected_gradient_ = system_->solve_mass(load);
}

double FieldState::energy() const { return 0.5 * system_->stiffness().quadratic_form(phi_); }

// ---------------------------------------------------------------------------
// deposition and solve

Deposit assemble_rhs(std::span<const DecoratedParticle> particles, const PeriodicMesh& mesh, double charge) {
  Deposit out;
  out.rhs.assign(mesh.n_dofs(), 0.0);
  const int k = mesh.degree();
  const auto nloc = static_cast<std::size_t>(k + 1);
  double val[4];
  double der[4];
  for (const auto& p : particles) {
    auto loc = mesh.locate(p.Q);
    const double h = mesh.element_size(loc.element);
    if (loc.xi <= 0.0) {
      // the source sits on a vertex; evaluate one ulp inside the element
      const double left = mesh.vertex(loc.element);
      loc.xi = (std::nextafter(left, mesh.length()) - left) / h;
      ++out.nudged;
    } else if (loc.xi >= 1.0) {
      const double right = mesh.vertex(loc.element) + h;
      loc.xi = 1.0 - (right - std::nextafter(right, 0.0)) / h;
      ++out.nudged;
    }
    lagrange_values(k, loc.xi, std::span<double>(val, nloc));
    lagrange_derivatives(k, loc.xi, std::span<double>(der, nloc));
    for (std::size_t a = 0; a < nloc; ++a) {
      out.rhs[mesh.dof(loc.element, static_cast<int>(a))] +=
          charge * (p.psi_star * val[a] - p.p_star * der[a] / h);
    }
  }
  return out;
}

Deposit deposit_charge(std::span<const DecoratedParticle> particles, const PeriodicMesh& mesh, double charge) {
  Deposit out = assemble_rhs(particles, mesh, charge);
  double total = 0.0;
  for (double v : out.rhs) total += v;
  const double mean = total / static_cast<double>(out.rhs.size());
  for (double& v : out.rhs) v -= mean;
  return out;
}

FieldState solve_potential(std::shared_ptr<const StiffnessSystem> system, std::span<const double> rhs) {
  std::vector<double> phi = system->solve_zero_mean(rhs);
  const auto residual = system->stiffness().multiply(phi);
  double res = 0.0;
  double rhs_norm = 0.0;
  double phi_norm = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    res = std::max(res, std::abs(residual[i] - rhs[i]));
    rhs_norm = std::max(rhs_norm, std::abs(rhs[i]));
    phi_norm = std::max(phi_norm, std::abs(phi[i]));
  }
  const double scale = system->stiffness().inf_norm() * phi_norm + rhs_norm;
  if (scale > 0.0 && res > kSolveTolerance * scale) {
    throw SolverError("Poisson solve residual above tolerance", res / scale);
  }
  return FieldState(std::move(system), std::move(phi));
}

FieldSample eval_field(const FieldState& state, double q) {
  const PeriodicMesh& m = state.mesh();
  const auto loc = m.locate(q);
  const int k = m.degree();
  const auto nloc = static_cast<std::size_t>(k + 1);
  const double h = m.element_size(loc.element);
  double val[4];
  double der[4];
  double sec[4];
  lagrange_values(k, loc.xi, std::span<double>(val, nloc));
  lagrange_derivatives(k, loc.xi, std::span<double>(der, nloc));
  lagrange_second_derivatives(k, loc.xi, std::span<double>(sec, nloc));
  const auto phi = state.phi();
  const auto grad = state.projected_gradient();
  FieldSample s;
  for (std::size_t a = 0; a < nloc; ++a) {
    const std::size_t j = m.dof(loc.element, static_cast<int>(a));
    s.phi += phi[j] * val[a];
    s.dphi += phi[j] * der[a];
    s.d2phi_element += phi[j] * sec[a];
    s.d2phi_projected += grad[j] * der[a];
  }
  s.dphi /= h;
  s.d2phi_element /= h * h;
  s.d2phi_projected /= h;
  return s;
}

// ---------------------------------------------------------------------------
// exact solution and error

namespace {
double sign_of(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }
}  // namespace

double exact_single_source(double psi_star, double p_star, double L, double Q, double q) {
  const double r = min_image(q - Q, L);
  return psi_star * (r * r / (2.0 * L) - std::abs(r) / 2.0 + L / 12.0) +
         p_star * (r / L - 0.5 * sign_of(r));
}

double exact_single_source_derivative(double psi_star, double p_star, double L, double Q, double q) {
  const double r = min_image(q - Q, L);
  return psi_star * (r / L - 0.5 * sign_of(r)) + p_star / L;
}

double l2_error(const FieldState& state, const std::function<double(double)>& exact, int quad_per_element,
                std::span<const double> breakpoints) {
  const PeriodicMesh& m = state.mesh();
  const int k = m.degree();
  if (quad_per_element < k + 3) {
    throw DomainError("l2_error needs at least degree + 3 quadrature points per element");
  }
  const auto nloc = static_cast<std::size_t>(k + 1);
  const QuadratureRule rule = gauss_legendre(quad_per_element);
  std::vector<double> cuts;
  cuts.reserve(breakpoints.size());
  for (double b : breakpoints) cuts.push_back(wrap_position(b, m.length()));
  std::sort(cuts.begin(), cuts.end());

  const auto phi = state.phi();
  double val[4];
  double sum = 0.0;
  std::vector<double> pieces;
  for (int e = 0; e < m.n_elements(); ++e) {
    const double a = m.vertex(e);
    const double h = m.element_size(e);
    const double b = a + h;
    pieces.assign({a});
    for (auto it = std::upper_bound(cuts.begin(), cuts.end(), a); it != cuts.end() && *it < b; ++it) {
      pieces.push_back(*it);
    }
    pieces.push_back(b);
    for (std::size_t s = 0; s + 1 < pieces.size(); ++s) {
      const double lo = pieces[s];
      const double width = pieces[s + 1] - lo;
      if (width <= 0.0) continue;
      for (std::size_t g = 0; g < rule.points.size(); ++g) {
        const double x = lo + width * rule.points[g];
        lagrange_values(k, (x - a) / h, std::span<double>(val, nloc));
        double approx = 0.0;
        for (std::size_t l = 0; l < nloc; ++l) approx += phi[m.dof(e, static_cast<int>(l))] * val[l];
        const double diff = approx - exact(x);
        sum += rule.weights[g] * width * diff * diff;
      }
    }
  }
  return std::sqrt(sum);
}

void write_potential_csv(const FieldState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "node,Phi\r\n";
  const auto phi = state.phi();
  char buf[64];
  for (std::size_t j = 0; j < phi.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\r\n", state.mesh().node_coordinate(j), phi[j]);
    out << buf;
  }
}

}  // namespace swpic::field
