#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "swpic/bench/diagnostics.hpp"
#include "swpic/bench/oracle.hpp"
#include "swpic/bench/scenario.hpp"

using namespace swpic;
using namespace swpic::bench;

namespace {

constexpr double kPi = std::numbers::pi;

field::FieldState interpolated(double L, int n, int k, const std::function<double(double)>& f) {
  const auto mesh = field::PeriodicMesh::uniform(L, n, k);
  auto sys = field::assemble_stiffness(mesh);
  std::vector<double> phi(mesh.n_dofs());
  for (std::size_t j = 0; j < phi.size(); ++j) phi[j] = f(mesh.node_coordinate(j));
  return field::FieldState(sys, phi);
}

TimeSeries series(const std::function<double(double)>& f, double t1, int n) {
  TimeSeries s;
  for (int i = 0; i <= n; ++i) s.push(t1 * i / n, f(t1 * i / n));
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_summary(const std::filesystem::path& p) {
  std::map<std::string, std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto c = line.find(": ");
    EXPECT_NE(c, std::string::npos) << line;
    out[line.substr(0, c)] = line.substr(c + 2);
  }
  return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST(EAmplitude, Examples) {
  const double L = 3.0;
  EXPECT_EQ(e_amplitude(interpolated(L, 20, 2, [](double) { return 0.0; })), 0.0);
  const auto s = [&](double q) { return std::sin(2 * kPi * q / L); };
  const double want = 2 * kPi / L * std::sqrt(0.5);
  double prev = INFINITY;
  for (int n : {16, 64, 256}) {
    const double err = std::abs(e_amplitude(interpolated(L, n, 1, s)) - want);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-4);
  const double a = e_amplitude(interpolated(L, 40, 3, s));
  const double b = e_amplitude(interpolated(L, 40, 3, [&](double q) { return s(q) + 7.5; }));
  EXPECT_NEAR(a, b, 1e-14);
}

TEST(FitRate, Examples) {
  EXPECT_NEAR(fit_rate(series([](double t) { return std::exp(0.7863 * t); }, 10, 200), {0, 10}), 0.7863, 1e-12);
  const auto damped = series([](double t) { return std::exp(-0.236 * t) * (1 + 0.01 * std::sin(10 * t)); }, 20, 400);
  EXPECT_NEAR(fit_rate(damped, {0, 20}), -0.236, 0.01);
  EXPECT_NEAR(fit_rate(series([](double) { return 2.5; }, 5, 50), {0, 5}), 0.0, 1e-14);
}

TEST(FitRate, WindowAndErrors) {
  // only the window matters
  auto s = series([](double t) { return t < 5 ? std::exp(t) : std::exp(5 - 2 * (t - 5)); }, 10, 200);
  EXPECT_NEAR(fit_rate(s, {5, 10}), -2.0, 1e-12);
  EXPECT_THROW(fit_rate(s, {0, 0.2}), DomainError);
  s.values[3] = 0.0;
  EXPECT_THROW(fit_rate(s, {0, 1}), DomainError);
}

TEST(LoglogSlope, PowerLaw) {
  const std::vector<double> x{1e3, 3e3, 1e4, 3e4};
  std::vector<double> y;
  for (double v : x) y.push_back(4.0 * std::pow(v, -0.5));
  EXPECT_NEAR(loglog_slope(x, y), -0.5, 1e-12);
}

TEST(RelativeEError, Examples) {
  const double L = 12.0, k = 2 * kPi / L;
  GridField ref{L, std::vector<double>(2048)};
  for (std::size_t i = 0; i < ref.values.size(); ++i) ref.values[i] = -k * std::cos(k * L * i / 2048.0);
  const auto base = [&](double q) { return std::sin(k * q); };
  EXPECT_NEAR(relative_E_error(interpolated(L, 64, 3, base), ref), 0.0, 1e-5);
  EXPECT_NEAR(relative_E_error(interpolated(L, 64, 3, [&](double q) { return 1.01 * base(q); }), ref), 0.01, 1e-5);
  // the third harmonic is orthogonal; 3c = 0.05 relative
  const double c = 0.05 / 3;
  EXPECT_NEAR(relative_E_error(interpolated(L, 64, 3, [&](double q) { return base(q) + c * std::sin(3 * k * q); }), ref),
              0.05, 1e-5);
  GridField zero{L, std::vector<double>(64, 0.0)};
  EXPECT_THROW(relative_E_error(interpolated(L, 8, 1, base), zero), DomainError);
}

TEST(GridFieldInterp, SmoothMode) {
  GridField g{1.0, std::vector<double>(64)};
  for (std::size_t i = 0; i < 64; ++i) g.values[i] = std::sin(2 * kPi * i / 64.0);
  EXPECT_NEAR(g(5.0 / 64), g.values[5], 1e-15);
  EXPECT_NEAR(g(0.3337), std::sin(2 * kPi * 0.3337), 1e-5);
  EXPECT_NEAR(g(1.3337), g(0.3337), 1e-14);
}

TEST(Oracle, FreeStreamingConvergesToCharacteristics) {
  const double L = 2 * kPi, T = 1.0;
  auto exact = [&](double q, double p) {
    return (1 + 0.3 * std::cos(q - p * T)) * std::exp(-p * p / 2) / std::sqrt(2 * kPi);
  };
  double prev = INFINITY;
  for (int n : {32, 64, 128}) {
    auto g = PhaseGrid::landau(L, n, n, 6.0, 0.3, 1.0);
    VlasovOracle o(g, false);
    const int steps = 10;
    for (int s = 0; s < steps; ++s) o.step(T / steps);
    double err = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) err += std::abs(o.grid().at(i, j) - exact(g.q(i), g.p(j))) * g.dq() * g.dp();
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(Oracle, MaxwellianEquilibrium) {
  VlasovOracle o(PhaseGrid::landau(12.0, 64, 128, 8.0, 0.0, 2 * kPi / 12.0));
  for (int s = 0; s < 100; ++s) {
    o.step(0.1);
    double m = 0;
    for (double e : o.electric_field().values) m = std::max(m, std::abs(e));
    ASSERT_LT(m, 1e-10) << "step " << s;
  }
}

TEST(Oracle, MassConservationLandau) {
  const double L = 12.0;
  VlasovOracle o(PhaseGrid::landau(L, 128, 256, 8.0, 0.5, 2 * kPi / L));
  const double m0 = o.grid().mass();
  EXPECT_NEAR(m0, L, 1e-9 * L);
  for (int s = 0; s < 100; ++s) o.step(0.1);
  EXPECT_LT(std::abs(o.grid().mass() - m0) / m0, 1e-6);
  // clipping happens in the kick; the cubic q-shift may undershoot slightly
  const double top = *std::max_element(o.grid().f.begin(), o.grid().f.end());
  EXPECT_GE(*std::min_element(o.grid().f.begin(), o.grid().f.end()), -1e-4 * top);
}

TEST(Oracle, LandauDampingRate) {
  const double L = 12.0;
  VlasovOracle o(PhaseGrid::landau(L, 256, 512, 8.0, 0.5, 2 * kPi / L));
  TimeSeries amp;
  const double dt = 0.05;
  amp.push(0, e_amplitude(o.field()));
  for (int s = 1; s <= 400; ++s) {
    o.step(dt);
    amp.push(s * dt, e_amplitude(o.field()));
  }
  const double g = fit_rate(amp, {0, 20});
  EXPECT_GE(g, -0.28);
  EXPECT_LE(g, -0.19);
}

TEST(Oracle, Errors) {
  EXPECT_THROW(PhaseGrid::landau(1.0, 2, 8, 1.0, 0.1, 1.0), DomainError);
  VlasovOracle o(PhaseGrid::landau(1.0, 8, 8, 4.0, 0.1, 2 * kPi));
  EXPECT_THROW(o.step(0.0), DomainError);
  const auto g = sl_step(o.grid(), 0.01);
  EXPECT_EQ(g.f.size(), o.grid().f.size());
}

TEST(Config, ParsesPresetAndOverrides) {
  std::istringstream in("# comment\nscenario = two_stream\n; another\nseed = 7\nn_markers=2000\nfit_window = 1, 3\n\n");
  const auto c = parse_config(in);
  EXPECT_EQ(c.scenario, ScenarioKind::TwoStream);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.n_markers, 2000u);
  EXPECT_NEAR(c.L, 2 * kPi, 1e-15);
  EXPECT_EQ(c.fit_window.first, 1.0);
  EXPECT_EQ(c.fit_window.second, 3.0);
  std::istringstream in2("seed = 3\n");
  EXPECT_EQ(parse_config(in2, ScenarioKind::Landau).scenario, ScenarioKind::Landau);
  EXPECT_EQ(parse_scenario_kind("TestParticle"), ScenarioKind::TestParticle);
  EXPECT_EQ(parse_scenario_kind("error_scaling"), ScenarioKind::ErrorScaling);
}

TEST(Config, Rejections) {
  const std::vector<std::string> bad{
      "scenario = landau\nbogus = 1\n",   "scenario = landau\nseed = 1\nseed = 2\n",
      "scenario = landau\ndt = fast\n",   "scenario = landau\ndegree = 4\n",
      "scenario = landau\nn_clusters = 200000\n", "seed = 1\n",
      "scenario = nowhere\n",             "scenario = landau\njust a line\n",
      "scenario = landau\ncurvature = curly\n"};
  for (const auto& text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(parse_config(in).validate(), ConfigError) << text;
  }
  EXPECT_THROW(load_config("/nonexistent/swpic.ini"), ConfigError);
}

TEST(Output, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(std::stod(format_double(kPi)), kPi);
}

TEST(Output, SeriesCsvRoundTrip) {
  TimeSeries s;
  s.push(0.0, 1.0 / 3);
  s.push(0.5, -2e-300);
  const auto p = std::filesystem::temp_directory_path() / "swpic_series.csv";
  write_series_csv(s, "amp", p.string());
  const auto text = slurp(p);
  EXPECT_EQ(text, "t,amp\r\n0,0.33333333333333331\r\n0.5,-2.0000000000000001e-300\r\n");
}

TEST(Scenario, TestParticleRun) {
  auto c = ScenarioConfig::preset(ScenarioKind::TestParticle);
  c.n_steps = 2000;
  c.snapshot_times = {0.0, 1.0};
  const auto dir = fresh_dir("swpic_tp");
  c.output_dir = dir.string();
  run_scenario(c);
  const auto s = read_summary(dir / "summary.txt");
  EXPECT_EQ(s.at("status"), "ok");
  EXPECT_EQ(s.at("scenario"), "TestParticle");
  EXPECT_EQ(s.at("n_particles"), "3");
  EXPECT_EQ(s.at("mode"), "swpic");
  EXPECT_EQ(std::stod(s.at("psi_star_max_change")), 0.0);
  EXPECT_LT(std::stod(s.at("energy_max_drift")), 1e-4);
  EXPECT_TRUE(std::filesystem::exists(dir / "energy.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "phase_t0.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "phase_t1.csv"));
  const auto energy = slurp(dir / "energy.csv");
  EXPECT_EQ(energy.rfind("t,H\r\n", 0), 0u);
  EXPECT_EQ(std::count(energy.begin(), energy.end(), '\n'), 2002);
}

TEST(Scenario, DeterministicOutputs) {
  auto c = ScenarioConfig::preset(ScenarioKind::Landau);
  c.n_markers = 2000;
  c.n_clusters = 200;
  c.n_steps = 20;
  c.fit_window = {0, 4};
  c.snapshot_times = {};
  c.reference_markers = 0;
  std::string first;
  for (int r = 0; r < 2; ++r) {
    const auto dir = fresh_dir("swpic_det" + std::to_string(r));
    c.output_dir = dir.string();
    run_scenario(c);
    const auto text = slurp(dir / "amplitude.csv") + slurp(dir / "energy.csv");
    if (r == 0) first = text;
    else EXPECT_EQ(text, first);
    const auto s = read_summary(dir / "summary.txt");
    EXPECT_EQ(s.at("dof_markers"), "6000");
    EXPECT_EQ(s.at("dof_particles"), "1000");
    EXPECT_EQ(std::stod(s.at("psi_star_sum_change")), 0.0);
  }
}

TEST(Scenario, PicKeepsDualBlockZero) {
  auto c = ScenarioConfig::preset(ScenarioKind::TwoStream);
  c.n_markers = 3000;
  c.n_clusters = 0;
  c.n_steps = 50;
  c.fit_window = {0, 0};
  c.snapshot_times = {};
  const auto r = simulate(c);
  EXPECT_FALSE(r.decorated);
  EXPECT_TRUE(r.failure.empty());
  for (const auto& p : r.final_state.particles) {
    ASSERT_EQ(p.q_star, 0.0);
    ASSERT_EQ(p.p_star, 0.0);
  }
}

TEST(Scenario, MemoryRatioForPresetPair) {
  auto c = ScenarioConfig::preset(ScenarioKind::Landau);
  c.n_markers = 88000;
  c.n_steps = 1;
  c.fit_window = {0, 0};
  c.snapshot_times = {};
  c.max_iterations = 2;
  const auto dir = fresh_dir("swpic_mem");
  c.output_dir = dir.string();
  run_scenario(c);
  const auto s = read_summary(dir / "summary.txt");
  EXPECT_NEAR(std::stod(s.at("memory_ratio")), 5e4 / 2.64e5, 1e-12);
}

TEST(Scenario, ConvergenceCsv) {
  auto c = ScenarioConfig::preset(ScenarioKind::Convergence);
  c.levels = 2;
  const auto rows = convergence_study(c);
  EXPECT_EQ(rows.size(), 2u * 3u * 3u);
  for (const auto& r : rows) EXPECT_GT(r.error, 0.0);
  EXPECT_TRUE(std::isnan(rows.front().order));
  EXPECT_FALSE(std::isnan(finest_order(rows, "dipole", 1)));
}
