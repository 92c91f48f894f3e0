#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "swpic/reduction.hpp"

using namespace swpic;
using namespace swpic::reduction;

namespace {

constexpr double kPi = std::numbers::pi;

ClusterAssignment one_cluster(std::size_t n) {
  ClusterAssignment a;
  a.labels.assign(n, 0);
  a.centers = {{0.0, 0.0}};
  return a;
}

}  // namespace

TEST(Sampling, TwoStreamMoments) {
  Rng rng(61);
  const std::size_t n = 200000;
  const auto m = sample_initial(Distribution::TwoStream, n, 2 * kPi, {}, rng);
  ASSERT_EQ(m.size(), n);
  double s = 0, s2 = 0, w = 0;
  for (const auto& x : m) {
    ASSERT_GE(x.Q, 0.0);
    ASSERT_LT(x.Q, 2 * kPi);
    s += x.P;
    s2 += x.P * x.P;
    w += x.psi_star;
  }
  const double var = 1.09;
  EXPECT_NEAR(s / n, 0.0, 3 * std::sqrt(var / n));
  // variance of p^2 for the mixture: E p^4 - var^2
  const double p4 = 1 + 6 * 0.09 + 3 * 0.09 * 0.09;
  EXPECT_NEAR(s2 / n, var, 3 * std::sqrt((p4 - var * var) / n));
  EXPECT_NEAR(w, 2 * kPi, 1e-10);
}

TEST(Sampling, LandauUnperturbedIsUniform) {
  Rng rng(62);
  SamplingParams par;
  par.amplitude = 0.0;
  const std::size_t n = 20000;
  auto m = sample_initial(Distribution::Landau, n, 12.0, par, rng);
  std::vector<double> q;
  for (const auto& x : m) q.push_back(x.Q / 12.0);
  std::sort(q.begin(), q.end());
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d = std::max({d, std::abs(q[i] - static_cast<double>(i) / n), std::abs(q[i] - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 1.63 / std::sqrt(static_cast<double>(n)));  // KS critical value at 1%
}

TEST(Sampling, LandauDensityFollowsPerturbation) {
  Rng rng(63);
  const std::size_t n = 100000;
  const double L = 12.0;
  const auto m = sample_initial(Distribution::Landau, n, L, {}, rng);
  // first Fourier coefficient of 1 + A cos(kq) is A/2
  double c = 0, w = 0;
  for (const auto& x : m) {
    c += std::cos(2 * kPi * x.Q / L);
    w += x.psi_star;
  }
  EXPECT_NEAR(c / n, 0.25, 4 * std::sqrt(0.5 / n));
  EXPECT_NEAR(w, L, 1e-9);
}

TEST(Sampling, InvalidParameters) {
  Rng rng(64);
  SamplingParams bad;
  bad.temperature = 0;
  EXPECT_THROW(sample_initial(Distribution::TwoStream, 10, 1.0, bad, rng), DomainError);
  SamplingParams big;
  big.amplitude = 1.0;
  EXPECT_THROW(sample_initial(Distribution::Landau, 10, 1.0, big, rng), DomainError);
  EXPECT_THROW(sample_initial(Distribution::Landau, 0, 1.0, {}, rng), DomainError);
}

TEST(KMeans, RecoversSeparatedBlobs) {
  Rng rng(65);
  const double L = 10.0;
  std::vector<MarkerParticle> m;
  const double c[3][2] = {{1.0, 2.0}, {5.0, -2.0}, {9.5, 0.5}};  // the last blob straddles q = 0
  for (int g = 0; g < 3; ++g) {
    for (int i = 0; i < 40; ++i) m.push_back({wrap_position(c[g][0] + 0.2 * rng.normal(), L), c[g][1] + 0.2 * rng.normal(), 1.0});
  }
  const auto a = kmeans_cluster(m, 3, rng, L);
  for (int g = 0; g < 3; ++g) {
    std::set<std::size_t> labels;
    for (int i = 0; i < 40; ++i) labels.insert(a.labels[static_cast<std::size_t>(g * 40 + i)]);
    EXPECT_EQ(labels.size(), 1u) << "blob " << g;
  }
  std::set<std::size_t> all(a.labels.begin(), a.labels.end());
  EXPECT_EQ(all.size(), 3u);
}

TEST(KMeans, SingletonsDeterminismAndErrors) {
  Rng rng(66);
  const auto m = sample_initial(Distribution::TwoStream, 50, 2.0, {}, rng);
  Rng r1(1), r2(1);
  const auto a = kmeans_cluster(m, 50, r1, 2.0);
  std::set<std::size_t> all(a.labels.begin(), a.labels.end());
  EXPECT_EQ(all.size(), 50u);
  const auto b = kmeans_cluster(m, 50, r2, 2.0);
  EXPECT_EQ(a.labels, b.labels);
  Rng r3(1);
  EXPECT_THROW(kmeans_cluster(m, 51, r3, 2.0), DomainError);
  EXPECT_THROW(kmeans_cluster(m, 0, r3, 2.0), DomainError);
}

TEST(KMeans, ObjectiveNonIncreasingAndDeterministic) {
  Rng rng(67);
  const auto m = sample_initial(Distribution::Landau, 5000, 12.0, {}, rng);
  Rng r1(9), r2(9);
  const auto a = kmeans_cluster(m, 200, r1, 12.0);
  const auto b = kmeans_cluster(m, 200, r2, 12.0);
  EXPECT_EQ(a.labels, b.labels);
  ASSERT_GE(a.objective_history.size(), 2u);
  for (std::size_t i = 1; i < a.objective_history.size(); ++i) {
    EXPECT_LE(a.objective_history[i], a.objective_history[i - 1] * (1 + 1e-12));
  }
  EXPECT_NEAR(kmeans_objective(m, a, 12.0), a.objective_history.back(), 1e-9 * a.objective_history.back());
  // each marker sits with its nearest center
  for (std::size_t i = 0; i < m.size(); i += 37) {
    const auto d2 = [&](std::size_t c) {
      const double dq = min_image(m[i].Q - a.centers[c][0], 12.0), dp = m[i].P - a.centers[c][1];
      return dq * dq + dp * dp;
    };
    for (std::size_t c = 0; c < a.centers.size(); ++c) ASSERT_LE(d2(a.labels[i]), d2(c) + 1e-12);
  }
}

TEST(CFunction, Variants) {
  EXPECT_EQ(CFunction::linear()(0.4, 0.6), 0.4 - 0.6);
  const auto s = CFunction::periodic_sine(2.0);
  EXPECT_NEAR(s(0.5, 0.0), 2.0 / (2 * kPi), 1e-15);
  EXPECT_NEAR(s(1.9, 0.1), s(-0.1, 0.1), 1e-14);
}

TEST(BuildDecorated, TwoMarkerExample) {
  const std::vector<MarkerParticle> m{{0.4, 0.0, 1.0}, {0.6, 1.0, 1.0}};
  const auto d = build_decorated(m, one_cluster(2), CFunction::linear());
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].Q, 0.4);
  EXPECT_EQ(d[0].P, 0.0);
  EXPECT_EQ(d[0].psi_star, 2.0);
  EXPECT_NEAR(d[0].p_star, -0.2, 1e-15);
  EXPECT_EQ(d[0].q_star, 1.0);
}

TEST(BuildDecorated, SingletonsAreTheIdentityEmbedding) {
  Rng rng(68);
  const auto m = sample_initial(Distribution::TwoStream, 100, 3.0, {}, rng);
  ClusterAssignment a;
  for (std::size_t i = 0; i < m.size(); ++i) {
    a.labels.push_back(i);
    a.centers.push_back({m[i].Q, m[i].P});
  }
  for (const auto& c : {CFunction::linear(), CFunction::periodic_sine(3.0)}) {
    const auto d = build_decorated(m, a, c);
    ASSERT_EQ(d.size(), m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      ASSERT_EQ(d[i].Q, m[i].Q);
      ASSERT_EQ(d[i].P, m[i].P);
      ASSERT_EQ(d[i].psi_star, m[i].psi_star);
      ASSERT_EQ(d[i].q_star, 0.0);
      ASSERT_EQ(d[i].p_star, 0.0);
    }
  }
}

TEST(BuildDecorated, EmptyClustersSkipped) {
  const std::vector<MarkerParticle> m{{0.1, 0.0, 1.0}, {0.2, 0.0, 1.0}};
  ClusterAssignment a;
  a.labels = {2, 2};
  a.centers = {{0, 0}, {0, 0}, {0.15, 0}};
  EXPECT_EQ(build_decorated(m, a, CFunction::linear()).size(), 1u);
}

TEST(BuildDecorated, MomentMatchingRandomClusters) {
  Rng rng(69);
  const double L = 5.0;
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<MarkerParticle> m;
    const double q0 = rng.uniform(0, L), p0 = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      m.push_back({wrap_position(q0 + 0.3 * rng.normal(), L), p0 + 0.3 * rng.normal(), rng.uniform(0.1, 2)});
    }
    double W = 0, WP = 0, WQ = 0;
    for (const auto& x : m) {
      W += x.psi_star;
      WP += x.psi_star * x.P;
    }
    for (const auto& c : {CFunction::linear(), CFunction::periodic_sine(L)}) {
      const auto d = build_decorated(m, one_cluster(n), c);
      ASSERT_EQ(d.size(), 1u);
      const auto& a = d[0];
      ASSERT_EQ(a.psi_star, W);
      ASSERT_NEAR(a.psi_star * a.P + a.q_star, WP, 1e-12 * (std::abs(WP) + W * std::abs(a.P) + W));
      if (c.variant == CFunction::Variant::Linear) {
        WQ = 0;
        for (const auto& x : m) WQ += x.psi_star * x.Q;
        ASSERT_NEAR(a.psi_star * a.Q - a.p_star, WQ, 1e-12 * W * L);
      } else {
        double s = 0;
        for (const auto& x : m) s += x.psi_star * std::sin(2 * kPi / L * (a.Q - x.Q));
        ASSERT_NEAR(2 * kPi / L * a.p_star, s, 1e-12 * W);
      }
    }
  }
}

TEST(BuildDecorated, NarrowClusterSineMatchesLinear) {
  const double L = 1.0, w = 1e-3 * L;
  const std::vector<MarkerParticle> m{{0.5, 0.0, 1.0}, {0.5 + w, 0.0, 1.0}, {0.5 - 0.7 * w, 0.0, 1.0}};
  const auto lin = build_decorated(m, one_cluster(3), CFunction::linear());
  const auto sine = build_decorated(m, one_cluster(3), CFunction::periodic_sine(L));
  ASSERT_EQ(lin[0].Q, sine[0].Q);
  EXPECT_NEAR(sine[0].p_star, lin[0].p_star, 10 * std::pow(2 * kPi * w / L, 3) * L);
}

TEST(Csv, MarkersAndDecorated) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::vector<MarkerParticle> m{{0.5, -1.0, 0.25}};
  write_markers_csv(m, (dir / "swpic_m.csv").string());
  const std::vector<DecoratedParticle> d{{0.5, -1.0, 2.0, 3.0, 0.25}};
  write_decorated_csv(d, (dir / "swpic_d.csv").string());
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  EXPECT_EQ(slurp(dir / "swpic_m.csv"), "Q,P,psi_star\r\n0.5,-1,0.25\r\n");
  EXPECT_EQ(slurp(dir / "swpic_d.csv"), "Q,P,psi_star,q_star,p_star\r\n0.5,-1,0.25,2,3\r\n");
}

TEST(KMeans, DegenerateMomentumSpread) {
  // one center, or all markers at the same p, must not blow up the search grid
  const std::vector<MarkerParticle> two{{0.4, 0.0, 1.0}, {0.6, 1.0, 1.0}};
  Rng r1(3);
  const auto a = kmeans_cluster(two, 1, r1, 10.0);
  EXPECT_EQ(a.labels, (std::vector<std::size_t>{0, 0}));
  std::vector<MarkerParticle> flat;
  for (int i = 0; i < 200; ++i) flat.push_back({0.05 * i, 0.5, 1.0});
  Rng r2(4);
  const auto b = kmeans_cluster(flat, 20, r2, 10.0);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    for (std::size_t c = 0; c < b.centers.size(); ++c) {
      const double dq = min_image(flat[i].Q - b.centers[c][0], 10.0), dp = flat[i].P - b.centers[c][1];
      const double dq0 = min_image(flat[i].Q - b.centers[b.labels[i]][0], 10.0), dp0 = flat[i].P - b.centers[b.labels[i]][1];
      ASSERT_LE(dq0 * dq0 + dp0 * dp0, dq * dq + dp * dp + 1e-12);
    }
  }
}
