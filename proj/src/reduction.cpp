#include "swpic/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace swpic::reduction {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// min_image for two coordinates already wrapped into [0, L)
inline double periodic_offset(double a, double b, double L) {
  double d = a - b;
  if (d > 0.5 * L) d -= L;
  else if (d <= -0.5 * L) d += L;
  return d;
}

inline double distance2(const MarkerParticle& m, const std::array<double, 2>& c, double L) {
  const double dq = periodic_offset(m.Q, c[0], L);
  const double dp = m.P - c[1];
  return dq * dq + dp * dp;
}

double landau_position(double u, double L, double A, double k) {
  // invert F(q) = (q + A sin(kq) / k) / L by bisection
  double lo = 0.0;
  double hi = L;
  const double target = u * L;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * L; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid + A * std::sin(k * mid) / k < target) lo = mid;
    else hi = mid;
  }
  return wrap_position(0.5 * (lo + hi), L);
}

// Uniform bucket grid over the cluster centers for exact nearest-center queries.
class CenterGrid {
 public:
  CenterGrid(const std::vector<std::array<double, 2>>& centers, double L) : centers_(centers), L_(L) {
    double pmin = std::numeric_limits<double>::infinity();
    double pmax = -pmin;
    for (const auto& c : centers) {
      pmin = std::min(pmin, c[1]);
      pmax = std::max(pmax, c[1]);
    }
    const double prange = std::max(pmax - pmin, 1e-12 * L);
    const double cell = std::sqrt(L * prange / static_cast<double>(centers.size()));
    // at most about one cell per center in each direction, so degenerate spreads stay cheap
    const double kmax = static_cast<double>(centers.size());
    nq_ = static_cast<int>(std::clamp(std::floor(L / cell), 1.0, kmax));
    np_ = static_cast<int>(std::clamp(std::ceil(prange / cell), 1.0, kmax));
    sq_ = L / nq_;
    sp_ = prange / np_;
    pmin_ = pmin;
    start_.assign(static_cast<std::size_t>(nq_ * np_) + 1, 0);
    std::vector<int> cell_of(centers.size());
    for (std::size_t c = 0; c < centers.size(); ++c) {
      cell_of[c] = cell_index(column(centers[c][0]), row(centers[c][1]));
      ++start_[static_cast<std::size_t>(cell_of[c]) + 1];
    }
    for (std::size_t i = 1; i < start_.size(); ++i) start_[i] += start_[i - 1];
    members_.resize(centers.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t c = 0; c < centers.size(); ++c) members_[fill[static_cast<std::size_t>(cell_of[c])]++] = c;
  }

  /// Nearest center, ties to the lowest index. Returns (index, distance^2).
  std::pair<std::size_t, double> nearest(const MarkerParticle& m) const {
    const int cq = column(m.Q);
    const int cp = row(m.P);
    const int lo = (nq_ - 1) / 2;
    const int hi = nq_ / 2;
    const double smin = std::min(sq_, sp_);
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int r = 0;; ++r) {
      for (int dp = std::max(-r, -cp); dp <= std::min(r, np_ - 1 - cp); ++dp) {
        const int pc = cp + dp;
        const bool edge_row = (dp == -r || dp == r);
        for (int dq = -r; dq <= r; ++dq) {
          if (!edge_row && dq != -r && dq != r) continue;
          if (dq < -lo || dq > hi) continue;
          const int qc = ((cq + dq) % nq_ + nq_) % nq_;
          const int cell = cell_index(qc, pc);
          for (std::size_t s = start_[static_cast<std::size_t>(cell)]; s < start_[static_cast<std::size_t>(cell) + 1]; ++s) {
            const std::size_t c = members_[s];
            const double d2 = distance2(m, centers_[c], L_);
            if (d2 < best_d2 || (d2 == best_d2 && c < best)) {
              best_d2 = d2;
              best = c;
            }
          }
        }
      }
      // unvisited cells lie at least r cells away along a direction not yet exhausted
      const bool rows_done = cp - r <= 0 && cp + r >= np_ - 1;
      const bool cols_done = r >= std::max(hi, lo);
      const double bound = r * (rows_done ? sq_ : cols_done ? sp_ : smin);
      if (best_d2 < bound * bound) break;
      if (r >= std::max(hi, lo) && r >= np_ - 1) break;
    }
    return {best, best_d2};
  }

 private:
  int column(double q) const { return std::clamp(static_cast<int>(q / sq_), 0, nq_ - 1); }
  int row(double p) const { return std::clamp(static_cast<int>(std::floor((p - pmin_) / sp_)), 0, np_ - 1); }
  int cell_index(int qc, int pc) const { return pc * nq_ + qc; }

  const std::vector<std::array<double, 2>>& centers_;
  double L_;
  int nq_ = 1;
  int np_ = 1;
  double sq_ = 1.0;
  double sp_ = 1.0;
  double pmin_ = 0.0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> members_;
};

std::vector<std::array<double, 2>> kmeans_plus_plus(std::span<const MarkerParticle> markers, std::size_t k,
                                                     Rng& rng, double L) {
  const std::size_t n = markers.size();
  std::vector<std::array<double, 2>> centers;
  centers.reserve(k);
  const auto& first = markers[rng.below(n)];
  centers.push_back({first.Q, first.P});
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = distance2(markers[i], centers[0], L);
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    centers.push_back({markers[pick].Q, markers[pick].P});
    const auto& c = centers.back();
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], distance2(markers[i], c, L));
  }
  return centers;
}

}  // namespace

std::vector<MarkerParticle> sample_initial(Distribution distribution, std::size_t n, double L,
                                           const SamplingParams& params, Rng& rng) {
  if (n == 0) throw DomainError("need at least one marker");
  if (!(L > 0.0)) throw DomainError("domain length must be positive");
  if (!(params.n0 > 0.0)) throw DomainError("background density must be positive");
  std::vector<MarkerParticle> out(n);
  const double weight = params.n0 * L / static_cast<double>(n);
  if (distribution == Distribution::TwoStream) {
    if (!(params.temperature > 0.0)) throw DomainError("beam temperature must be positive");
    const double vth = std::sqrt(params.temperature);
    for (auto& m : out) {
      m.Q = wrap_position(rng.uniform() * L, L);
      const double centre = rng.uniform() < 0.5 ? -params.beam_speed : params.beam_speed;
      m.P = centre + vth * rng.normal();
      m.psi_star = weight;
    }
  } else {
    if (!(std::abs(params.amplitude) < 1.0)) throw DomainError("Landau amplitude must satisfy |A| < 1");
    if (!(params.landau_temperature > 0.0)) throw DomainError("temperature must be positive");
    const double k = params.wavenumber > 0.0 ? params.wavenumber : kTwoPi / L;
    const double vth = std::sqrt(params.landau_temperature);
    for (auto& m : out) {
      m.Q = landau_position(rng.uniform(), L, params.amplitude, k);
      m.P = vth * rng.normal();
      m.psi_star = weight;
    }
  }
  return out;
}

ClusterAssignment kmeans_cluster(std::span<const MarkerParticle> markers, std::size_t n_clusters, Rng& rng,
                                 double L, int max_iterations) {
  if (markers.empty()) throw DomainError("cannot cluster an empty marker set");
  if (n_clusters == 0) throw DomainError("need at least one cluster");
  if (n_clusters > markers.size()) throw DomainError("more clusters than markers");
  if (!(L > 0.0)) throw DomainError("domain length must be positive");
  const std::size_t n = markers.size();
  const std::size_t k = n_clusters;

  ClusterAssignment out;
  out.centers = kmeans_plus_plus(markers, k, rng, L);
  out.labels.assign(n, 0);
  std::vector<double> point_d2(n);

  auto assign = [&](std::vector<std::size_t>& labels) {
    CenterGrid grid(out.centers, L);
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [c, d2] = grid.nearest(markers[i]);
      labels[i] = c;
      point_d2[i] = d2;
      objective += d2;
    }
    return objective;
  };
  assign(out.labels);

  std::vector<double> sum_cos(k), sum_sin(k), sum_p(k), sum_offset(k), cost_old(k), cost_new(k);
  std::vector<std::size_t> count(k);
  std::vector<std::array<double, 2>> candidate(k);
  std::vector<std::size_t> next_labels(n);
  for (int it = 1; it <= max_iterations; ++it) {
    std::fill(sum_cos.begin(), sum_cos.end(), 0.0);
    std::fill(sum_sin.begin(), sum_sin.end(), 0.0);
    std::fill(sum_p.begin(), sum_p.end(), 0.0);
    std::fill(sum_offset.begin(), sum_offset.end(), 0.0);
    std::fill(cost_old.begin(), cost_old.end(), 0.0);
    std::fill(cost_new.begin(), cost_new.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = out.labels[i];
      const double angle = kTwoPi * markers[i].Q / L;
      sum_cos[c] += std::cos(angle);
      sum_sin[c] += std::sin(angle);
      sum_p[c] += markers[i].P;
      cost_old[c] += point_d2[i];
      ++count[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      candidate[c] = out.centers[c];
      if (count[c] == 0) continue;
      const double angle = std::atan2(sum_sin[c], sum_cos[c]);
      candidate[c] = {wrap_position(angle * L / kTwoPi, L), sum_p[c] / static_cast<double>(count[c])};
    }
    // one unwrapped-mean correction around the circular mean
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = out.labels[i];
      sum_offset[c] += periodic_offset(markers[i].Q, candidate[c][0], L);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      candidate[c][0] = wrap_position(candidate[c][0] + sum_offset[c] / static_cast<double>(count[c]), L);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = out.labels[i];
      cost_new[c] += distance2(markers[i], candidate[c], L);
    }
    // keep the previous center whenever the update would not lower the cluster cost
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0 && cost_new[c] <= cost_old[c]) out.centers[c] = candidate[c];
    }

    const double objective = assign(next_labels);
    out.objective_history.push_back(objective);
    out.iterations = it;
    const bool converged = next_labels == out.labels;
    out.labels.swap(next_labels);
    if (converged) break;
  }
  return out;
}

double kmeans_objective(std::span<const MarkerParticle> markers, const ClusterAssignment& assignment, double L) {
  double s = 0.0;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    s += distance2(markers[i], assignment.centers[assignment.labels[i]], L);
  }
  return s;
}

double CFunction::operator()(double Q, double Qbar) const {
  if (variant == Variant::Linear) return Q - Qbar;
  return L / kTwoPi * std::sin(kTwoPi * (Q - Qbar) / L);
}

std::vector<DecoratedParticle> build_decorated(std::span<const MarkerParticle> markers,
                                               const ClusterAssignment& assignment, const CFunction& c) {
  if (assignment.labels.size() != markers.size()) throw DomainError("labels do not match the marker count");
  const std::size_t k = assignment.centers.size();
  const bool periodic = c.variant == CFunction::Variant::PeriodicSine;
  if (periodic && !(c.L > 0.0)) throw DomainError("periodic c-function needs a positive length");

  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const std::size_t a = assignment.labels[i];
    if (a >= k) throw DomainError("cluster label out of range");
    members[a].push_back(i);
  }

  std::vector<DecoratedParticle> out;
  out.reserve(k);
  for (const auto& set : members) {
    if (set.empty()) continue;
    double weight = 0.0;
    for (std::size_t i : set) weight += markers[i].psi_star;
    // zero total weight falls back to the unweighted mean
    auto w = [&](std::size_t i) { return weight != 0.0 ? markers[i].psi_star : 1.0; };

    double mean_q = 0.0;
    double mean_p = 0.0;
    double norm = 0.0;
    double sc = 0.0;
    double ss = 0.0;
    for (std::size_t i : set) {
      norm += w(i);
      mean_p += w(i) * markers[i].P;
      if (periodic) {
        const double angle = kTwoPi * markers[i].Q / c.L;
        sc += w(i) * std::cos(angle);
        ss += w(i) * std::sin(angle);
      } else {
        mean_q += w(i) * markers[i].Q;
      }
    }
    mean_p /= norm;
    mean_q = periodic ? wrap_position(std::atan2(ss, sc) * c.L / kTwoPi, c.L) : mean_q / norm;

    std::size_t centre = set.front();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : set) {
      const double dq = periodic ? min_image(markers[i].Q - mean_q, c.L) : markers[i].Q - mean_q;
      const double dp = markers[i].P - mean_p;
      const double d2 = dq * dq + dp * dp;
      if (d2 < best) {
        best = d2;
        centre = i;
      }
    }

    DecoratedParticle d;
    d.Q = markers[centre].Q;
    d.P = markers[centre].P;
    d.psi_star = weight;
    for (std::size_t i : set) {
      d.p_star += markers[i].psi_star * c(d.Q, markers[i].Q);
      d.q_star -= markers[i].psi_star * (d.P - markers[i].P);
    }
    out.push_back(d);
  }
  return out;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  return out;
}

}  // namespace

void write_markers_csv(std::span<const MarkerParticle> markers, const std::string& path) {
  auto out = open_csv(path);
  out << "Q,P,psi_star\r\n";
  char buf[96];
  for (const auto& m : markers) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\r\n", m.Q, m.P, m.psi_star);
    out << buf;
  }
}

void write_decorated_csv(std::span<const DecoratedParticle> particles, const std::string& path) {
  auto out = open_csv(path);
  out << "Q,P,psi_star,q_star,p_star\r\n";
  char buf[160];
  for (const auto& p : particles) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\r\n", p.Q, p.P, p.psi_star, p.q_star, p.p_star);
    out << buf;
  }
}

}  // namespace swpic::reduction
