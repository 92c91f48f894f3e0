#include "swpic/bench/diagnostics.hpp"

#include <cmath>
#include <string>

namespace swpic::bench {

namespace {

// per-element Gauss evaluation of -phi_h' at each quadrature point
template <typename Visit>
void for_each_gauss_point(const field::FieldState& state, int n_points, Visit&& visit) {
  const auto& mesh = state.mesh();
  const int k = mesh.degree();
  const auto nloc = static_cast<std::size_t>(k + 1);
  const auto rule = field::gauss_legendre(n_points);
  const auto phi = state.phi();
  double der[4];
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double h = mesh.element_size(e);
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      field::lagrange_derivatives(k, rule.points[g], std::span<double>(der, nloc));
      double dphi = 0.0;
      for (std::size_t a = 0; a < nloc; ++a) dphi += phi[mesh.dof(e, static_cast<int>(a))] * der[a];
      visit(mesh.vertex(e) + h * rule.points[g], rule.weights[g] * h, -dphi / h);
    }
  }
}

}  // namespace

double e_amplitude(const field::FieldState& field) {
  double sum = 0.0;
  for_each_gauss_point(field, field.mesh().degree() + 1, [&](double, double w, double E) { sum += w * E * E; });
  return std::sqrt(sum / field.mesh().length());
}

double fit_rate(const TimeSeries& series, std::pair<double, double> window) {
  if (series.times.size() != series.values.size()) throw DomainError("time series lengths differ");
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.times[i];
    if (t < window.first || t > window.second) continue;
    const double v = series.values[i];
    if (!(v > 0.0)) throw DomainError("fit_rate needs positive values inside the window");
    const double y = std::log(v);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 10) throw DomainError("fit_rate needs at least 10 samples in the window, got " + std::to_string(n));
  const double dn = static_cast<double>(n);
  const double denom = dn * stt - st * st;
  return (dn * sty - st * sy) / denom;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope needs two equal series of length >= 2");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope needs positive data");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(x.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double GridField::operator()(double q) const {
  const auto n = static_cast<long>(values.size());
  const double h = length / static_cast<double>(n);
  const double s = wrap_position(q, length) / h;
  const long i = static_cast<long>(std::floor(s));
  const double t = s - static_cast<double>(i);
  auto at = [&](long j) { return values[static_cast<std::size_t>(((j % n) + n) % n)]; };
  // four-point Lagrange weights on nodes i-1, i, i+1, i+2
  const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return w0 * at(i - 1) + w1 * at(i) + w2 * at(i + 1) + w3 * at(i + 2);
}

double relative_E_error(const field::FieldState& numerical, const GridField& reference) {
  double diff = 0.0;
  double norm = 0.0;
  for_each_gauss_point(numerical, numerical.mesh().degree() + 3, [&](double q, double w, double E) {
    const double ref = reference(q);
    diff += w * (E - ref) * (E - ref);
    norm += w * ref * ref;
  });
  if (!(norm > 0.0)) throw DomainError("reference field has zero norm");
  return std::sqrt(diff / norm);
}

}  // namespace swpic::bench
