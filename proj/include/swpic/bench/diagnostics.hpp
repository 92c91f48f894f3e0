#pragma once

#include <span>
#include <utility>
#include <vector>

#include "swpic/field.hpp"

namespace swpic::bench {

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;

  void push(double t, double v) {
    times.push_back(t);
    values.push_back(v);
  }
  std::size_t size() const { return times.size(); }
};

/// RMS electric field ((1/L) int E^2)^(1/2) with E = -phi_h'.
double e_amplitude(const field::FieldState& field);

/// Least-squares slope of ln(values) against time over [t0, t1].
double fit_rate(const TimeSeries& series, std::pair<double, double> window);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Electric field sampled on a uniform periodic grid x_i = i L / n.
struct GridField {
  double length = 1.0;
  std::vector<double> values;

  /// Periodic cubic (four-point Lagrange) interpolation.
  double operator()(double q) const;
};

/// ||E_num - E_ref||_L2 / ||E_ref||_L2 with E_num = -phi_h' and the reference
/// interpolated to the Gauss points of the numerical mesh.
double relative_E_error(const field::FieldState& numerical, const GridField& reference);

}  // namespace swpic::bench
