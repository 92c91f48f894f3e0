#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swpic/core.hpp"

namespace swpic::reduction {

enum class Distribution { TwoStream, Landau };

struct SamplingParams {
  double temperature = 0.09;  // beam temperature (two-stream)
  double landau_temperature = 1.0;
  double beam_speed = 1.0;    // beams at +/- beam_speed (two-stream)
  double amplitude = 0.5;     // density perturbation A (Landau)
  double wavenumber = 0.0;    // k (Landau); 0 selects 2 pi / L
  double n0 = 1.0;            // background density, sum of weights = n0 L
};

/// Marker sample of the two-stream or Landau initial distribution with
/// uniform weights n0 L / N.
std::vector<MarkerParticle> sample_initial(Distribution distribution, std::size_t n, double L,
                                           const SamplingParams& params, Rng& rng);

struct ClusterAssignment {
  std::vector<std::size_t> labels;            // cluster index per marker
  std::vector<std::array<double, 2>> centers;  // (q, p) per cluster
  int iterations = 0;
  std::vector<double> objective_history;  // after each Lloyd iteration
};

/// Lloyd's k-means on the torus x R with k-means++ seeding. Distances use the
/// minimum image in q. Unweighted; weights only enter the moment assignment.
ClusterAssignment kmeans_cluster(std::span<const MarkerParticle> markers, std::size_t n_clusters, Rng& rng,
                                 double L, int max_iterations = 300);

/// Sum of squared periodic distances from each marker to its center.
double kmeans_objective(std::span<const MarkerParticle> markers, const ClusterAssignment& assignment, double L);

/// Spatial moment function: Q - Qbar (unbounded) or its periodic sine analogue.
struct CFunction {
  enum class Variant { Linear, PeriodicSine };
  Variant variant = Variant::PeriodicSine;
  double L = 1.0;

  static CFunction linear() { return {Variant::Linear, 1.0}; }
  static CFunction periodic_sine(double L) { return {Variant::PeriodicSine, L}; }

  double operator()(double Q, double Qbar) const;
};

/// Compresses each non-empty cluster into one decorated particle centred on
/// its most central marker. Empty clusters are skipped.
std::vector<DecoratedParticle> build_decorated(std::span<const MarkerParticle> markers,
                                               const ClusterAssignment& assignment, const CFunction& c);

/// CSV with columns Q,P,psi_star.
void write_markers_csv(std::span<const MarkerParticle> markers, const std::string& path);
/// CSV with columns Q,P,psi_star,q_star,p_star.
void write_decorated_csv(std::span<const DecoratedParticle> particles, const std::string& path);

}  // namespace swpic::reduction
