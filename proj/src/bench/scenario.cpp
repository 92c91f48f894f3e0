#include "swpic/bench/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "swpic/bench/oracle.hpp"
#include "swpic/reduction.hpp"

namespace swpic::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) throw ConfigError("bad number for " + key + ": '" + v + "'");
  return x;
}

// accepts 100000 as well as 1e5
std::uint64_t parse_count(const std::string& key, const std::string& v) {
  const double x = parse_real(key, v);
  if (x < 0.0 || x != std::floor(x) || x > 9.007199254740992e15) {
    throw ConfigError("expected a non-negative integer for " + key + ": '" + v + "'");
  }
  return static_cast<std::uint64_t>(x);
}

int parse_int(const std::string& key, const std::string& v) {
  const double x = parse_real(key, v);
  if (x != std::floor(x) || std::abs(x) > 2e9) throw ConfigError("expected an integer for " + key + ": '" + v + "'");
  return static_cast<int>(x);
}

reduction::CFunction make_c_function(const ScenarioConfig& c) {
  if (c.c_function == "linear") return reduction::CFunction::linear();
  return reduction::CFunction::periodic_sine(c.L);
}

dynamics::Curvature make_curvature(const ScenarioConfig& c) {
  return c.curvature == "element_interior" ? dynamics::Curvature::ElementInterior : dynamics::Curvature::Projected;
}

// Three groups of ten in the periodic potential well.
std::vector<MarkerParticle> test_particle_markers(const ScenarioConfig& c, Rng& rng) {
  constexpr double centers[3][2] = {{2.0, 1.0}, {5.0, -1.0}, {8.0, 0.5}};
  const std::size_t per_group = (c.n_markers + 2) / 3;
  std::vector<MarkerParticle> out;
  out.reserve(c.n_markers);
  const double w = c.L / static_cast<double>(c.n_markers);
  for (std::size_t i = 0; i < c.n_markers; ++i) {
    const auto g = std::min<std::size_t>(i / per_group, 2);
    const double q = wrap_position(centers[g][0] * c.L / 10.0 + 0.3 * rng.normal(), c.L);
    const double p = centers[g][1] + 0.2 * rng.normal();
    out.push_back({q, p, w});
  }
  return out;
}

std::string time_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

void write_snapshot(const dynamics::Ensemble& ens, bool decorated, const std::string& path) {
  if (decorated) {
    reduction::write_decorated_csv(ens.particles, path);
    return;
  }
  std::vector<MarkerParticle> m;
  m.reserve(ens.particles.size());
  for (const auto& p : ens.particles) m.push_back({p.Q, p.P, p.psi_star});
  reduction::write_markers_csv(m, path);
}

class Summary {
 public:
  void add(const std::string& key, const std::string& value) { lines_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add_count(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& [k, v] : lines_) out << k << ": " << v << "\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

void add_run_summary(Summary& s, const ScenarioConfig& c, const RunResult& r) {
  s.add("scenario", to_string(c.scenario));
  s.add("seed", std::to_string(c.seed));
  s.add("dt", c.dt);
  s.add("n_steps", std::to_string(c.n_steps));
  s.add("n_elements", std::to_string(c.n_elements));
  s.add("degree", std::to_string(c.degree));
  s.add_count("n_markers", r.n_markers);
  s.add_count("n_clusters", c.n_clusters);
  s.add_count("n_particles", r.n_evolved);
  s.add("mode", r.decorated ? "swpic" : "pic");
  const std::size_t dof_markers = 3 * r.n_markers;
  const std::size_t dof_evolved = (r.decorated ? 5 : 3) * r.n_evolved;
  const std::size_t ref = c.reference_markers > 0 ? c.reference_markers : r.n_markers;
  s.add_count("dof_markers", dof_markers);
  s.add_count("dof_particles", dof_evolved);
  s.add("dof_ratio", static_cast<double>(dof_evolved) / static_cast<double>(dof_markers));
  s.add_count("reference_markers", ref);
  s.add("memory_ratio", static_cast<double>(dof_evolved) / static_cast<double>(3 * ref));
  s.add("gamma", r.gamma_fitted ? format_double(r.gamma) : std::string("nan"));
  s.add("fit_window", format_double(c.fit_window.first) + "," + format_double(c.fit_window.second));

  double psi_change = 0.0;
  double sum0 = 0.0;
  double sum1 = 0.0;
  double dual = 0.0;
  for (std::size_t a = 0; a < r.final_state.particles.size(); ++a) {
    const auto& p0 = r.initial.particles[a];
    const auto& p1 = r.final_state.particles[a];
    psi_change = std::max(psi_change, std::abs(p1.psi_star - p0.psi_star));
    sum0 += p0.psi_star;
    sum1 += p1.psi_star;
    dual = std::max({dual, std::abs(p1.q_star), std::abs(p1.p_star)});
  }
  s.add("psi_star_max_change", psi_change);
  s.add("psi_star_sum_change", sum1 - sum0);
  s.add("dual_max_abs", dual);
  double h_drift = 0.0;
  for (double h : r.energy.values) h_drift = std::max(h_drift, std::abs(h - r.energy.values.front()));
  s.add("energy_max_drift", h_drift);
  s.add_count("nudged", r.nudged);
  s.add("wall_time", r.wall_time);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_series_csv(const TimeSeries& series, const std::string& value_name, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t," << value_name << "\r\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_double(series.times[i]) << ',' << format_double(series.values[i]) << "\r\n";
  }
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::TestParticle: return "TestParticle";
    case ScenarioKind::TwoStream: return "TwoStream";
    case ScenarioKind::Landau: return "Landau";
    case ScenarioKind::Convergence: return "Convergence";
    case ScenarioKind::ErrorScaling: return "ErrorScaling";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  std::string n;
  for (char ch : name) {
    if (ch != '_' && ch != '-') n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (n == "testparticle") return ScenarioKind::TestParticle;
  if (n == "twostream") return ScenarioKind::TwoStream;
  if (n == "landau") return ScenarioKind::Landau;
  if (n == "convergence") return ScenarioKind::Convergence;
  if (n == "errorscaling") return ScenarioKind::ErrorScaling;
  throw ConfigError("unknown scenario '" + name + "'");
}

ScenarioConfig ScenarioConfig::preset(ScenarioKind kind) {
  ScenarioConfig c;
  c.scenario = kind;
  switch (kind) {
    case ScenarioKind::TestParticle:
      c.L = 10.0;
      c.n_elements = 100;
      c.dt = 1e-3;
      c.n_steps = 10000;
      c.n_markers = 30;
      c.n_clusters = 3;
      c.fit_window = {0.0, 0.0};
      c.amplitude = 1.0;
      c.snapshot_times = {0.0, 10.0};
      break;
    case ScenarioKind::TwoStream:
      c.L = 2.0 * std::numbers::pi;
      c.n_elements = 50;
      c.dt = 0.01;
      c.n_steps = 1000;
      c.fit_window = {2.0, 6.0};
      c.p_max = 6.0;
      c.snapshot_times = {0.0, 5.0, 10.0};
      break;
    case ScenarioKind::Landau:
      c.snapshot_times = {0.0, 25.0};
      c.reference_markers = 88000;
      break;
    case ScenarioKind::Convergence:
      c.L = 1.0;
      c.n_elements = 16;
      c.dt = 1.0;
      c.n_steps = 1;
      c.fit_window = {0.0, 0.0};
      break;
    case ScenarioKind::ErrorScaling:
      c.dt = 0.2;
      c.n_steps = 50;
      c.fit_window = {0.0, 0.0};
      c.ladder = {1000, 3000, 10000, 30000, 100000};
      c.reference_markers = 88000;
      break;
  }
  return c;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(L > 0.0)) fail("L must be positive");
  if (n_elements < 2) fail("n_elements must be at least 2");
  if (degree < 1 || degree > 3) fail("degree must be 1, 2 or 3");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (n_steps < 1) fail("n_steps must be at least 1");
  const double T = dt * n_steps;
  const double slack = 1e-12 * std::max(1.0, T);
  if (fit_window.first > fit_window.second || fit_window.first < -slack || fit_window.second > T + slack) {
    fail("fit_window must lie within [0, dt*n_steps]");
  }
  for (double t : snapshot_times) {
    if (t < -slack || t > T + slack) fail("snapshot time " + format_double(t) + " outside the run");
  }
  if (scenario != ScenarioKind::Convergence && scenario != ScenarioKind::ErrorScaling) {
    if (n_markers < 1) fail("n_markers must be at least 1");
    if (n_clusters > n_markers) fail("n_clusters cannot exceed n_markers");
  }
  if (c_function != "periodic_sine" && c_function != "linear") fail("c_function must be periodic_sine or linear");
  if (curvature != "projected" && curvature != "element_interior") {
    fail("curvature must be projected or element_interior");
  }
  if (!(temperature > 0.0)) fail("temperature must be positive");
  if (max_iterations < 1) fail("max_iterations must be at least 1");
  if (n_q < 4 || n_p < 4 || !(p_max > 0.0)) fail("oracle grid needs n_q, n_p >= 4 and p_max > 0");
  if (scenario == ScenarioKind::Convergence && levels < 1) fail("levels must be at least 1");
  if (scenario == ScenarioKind::ErrorScaling) {
    if (ladder.size() < 2) fail("ladder needs at least two entries");
    if (n_seeds < 1) fail("n_seeds must be at least 1");
    if (cluster_ratio < 1) fail("cluster_ratio must be at least 1");
    if (!(eval_time > 0.0) || !(oracle_dt > 0.0)) fail("eval_time and oracle_dt must be positive");
    const double steps = eval_time / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps) fail("eval_time must be a multiple of dt");
    for (auto n : ladder) {
      if (n / cluster_ratio < 1) fail("ladder entry too small for cluster_ratio");
    }
  }
}

void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "scenario") {
    c.scenario = parse_scenario_kind(v);
  } else if (key == "L") {
    c.L = parse_real(key, v);
  } else if (key == "n_elements") {
    c.n_elements = parse_int(key, v);
  } else if (key == "degree") {
    c.degree = parse_int(key, v);
  } else if (key == "dt") {
    c.dt = parse_real(key, v);
  } else if (key == "n_steps") {
    c.n_steps = parse_int(key, v);
  } else if (key == "n_markers") {
    c.n_markers = parse_count(key, v);
  } else if (key == "n_clusters") {
    c.n_clusters = parse_count(key, v);
  } else if (key == "seed") {
    std::size_t used = 0;
    try {
      c.seed = std::stoull(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError("bad seed '" + v + "'");
  } else if (key == "fit_window") {
    const auto parts = split_list(v);
    if (parts.size() != 2) throw ConfigError("fit_window needs two values t_start,t_end");
    c.fit_window = {parse_real(key, parts[0]), parse_real(key, parts[1])};
  } else if (key == "n_q") {
    c.n_q = parse_int(key, v);
  } else if (key == "n_p") {
    c.n_p = parse_int(key, v);
  } else if (key == "p_max") {
    c.p_max = parse_real(key, v);
  } else if (key == "output_dir") {
    c.output_dir = v;
  } else if (key == "temperature") {
    c.temperature = parse_real(key, v);
  } else if (key == "beam_speed") {
    c.beam_speed = parse_real(key, v);
  } else if (key == "amplitude") {
    c.amplitude = parse_real(key, v);
  } else if (key == "c_function") {
    c.c_function = v;
  } else if (key == "curvature") {
    c.curvature = v;
  } else if (key == "max_iterations") {
    c.max_iterations = parse_int(key, v);
  } else if (key == "snapshot_times") {
    c.snapshot_times.clear();
    for (const auto& s : split_list(v)) c.snapshot_times.push_back(parse_real(key, s));
  } else if (key == "reference_markers") {
    c.reference_markers = parse_count(key, v);
  } else if (key == "levels") {
    c.levels = parse_int(key, v);
  } else if (key == "source_psi_star") {
    c.source_psi_star = parse_real(key, v);
  } else if (key == "source_p_star") {
    c.source_p_star = parse_real(key, v);
  } else if (key == "ladder") {
    c.ladder.clear();
    for (const auto& s : split_list(v)) c.ladder.push_back(parse_count(key, s));
  } else if (key == "n_seeds") {
    c.n_seeds = parse_int(key, v);
  } else if (key == "cluster_ratio") {
    c.cluster_ratio = parse_count(key, v);
  } else if (key == "eval_time") {
    c.eval_time = parse_real(key, v);
  } else if (key == "oracle_dt") {
    c.oracle_dt = parse_real(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ScenarioConfig parse_config(std::istream& in, const std::optional<ScenarioKind>& scenario_override) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (seen[key]++) throw ConfigError("duplicate key '" + key + "'");
    entries.emplace_back(key, t.substr(eq + 1));
  }

  std::optional<ScenarioKind> kind = scenario_override;
  if (!kind) {
    for (const auto& [k, v] : entries) {
      if (k == "scenario") kind = parse_scenario_kind(trim(v));
    }
  }
  if (!kind) throw ConfigError("config does not name a scenario");
  ScenarioConfig c = ScenarioConfig::preset(*kind);
  for (const auto& [k, v] : entries) {
    if (k == "scenario") continue;
    set_config_value(c, k, v);
  }
  return c;
}

ScenarioConfig load_config(const std::string& path, const std::optional<ScenarioKind>& scenario_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in, scenario_override);
}

RunResult simulate(const ScenarioConfig& c, const std::string& snapshot_dir) {
  c.validate();
  if (c.scenario == ScenarioKind::Convergence || c.scenario == ScenarioKind::ErrorScaling) {
    throw ConfigError("simulate() runs time-dependent scenarios only");
  }
  const auto start = Clock::now();
  Rng rng(c.seed);

  std::vector<MarkerParticle> markers;
  if (c.scenario == ScenarioKind::TestParticle) {
    markers = test_particle_markers(c, rng);
  } else {
    reduction::SamplingParams params;
    params.temperature = c.temperature;
    params.beam_speed = c.beam_speed;
    params.amplitude = c.amplitude;
    const auto dist =
        c.scenario == ScenarioKind::TwoStream ? reduction::Distribution::TwoStream : reduction::Distribution::Landau;
    markers = reduction::sample_initial(dist, c.n_markers, c.L, params, rng);
  }

  RunResult r;
  r.n_markers = markers.size();
  dynamics::Ensemble ens;
  ens.domain = {c.L, Topology::Torus};
  if (c.n_clusters > 0) {
    const auto assignment = reduction::kmeans_cluster(markers, c.n_clusters, rng, c.L, c.max_iterations);
    ens.particles = reduction::build_decorated(markers, assignment, make_c_function(c));
    r.decorated = true;
  } else {
    ens.particles.reserve(markers.size());
    for (const auto& m : markers) ens.particles.push_back(DecoratedParticle::from_marker(m));
  }
  r.n_evolved = ens.particles.size();
  r.initial = ens;
  const auto loop_start = Clock::now();

  std::vector<std::pair<int, double>> snapshots;
  for (double t : c.snapshot_times) snapshots.emplace_back(static_cast<int>(std::llround(t / c.dt)), t);
  auto dump = [&](int step) {
    if (snapshot_dir.empty()) return;
    for (const auto& [s, t] : snapshots) {
      if (s == step) write_snapshot(ens, r.decorated, snapshot_dir + "/phase_t" + time_tag(t) + ".csv");
    }
  };

  if (c.scenario == ScenarioKind::TestParticle) {
    const auto V = dynamics::PrescribedPotential::periodic(c.amplitude, c.L);
    r.energy.push(0.0, dynamics::discrete_hamiltonian(ens, V));
    dump(0);
    for (int n = 1; n <= c.n_steps; ++n) {
      try {
        dynamics::leapfrog_step(ens, c.dt, V);
      } catch (const std::exception& e) {
        r.failure = e.what();
        r.failure_time = n * c.dt;
        break;
      }
      r.energy.push(n * c.dt, dynamics::discrete_hamiltonian(ens, V));
      dump(n);
    }
  } else {
    auto system = field::assemble_stiffness(field::PeriodicMesh::uniform(c.L, c.n_elements, c.degree));
    dynamics::SelfConsistentField pipeline(system, make_curvature(c));
    const auto& f0 = pipeline.solve(ens);
    r.amplitude.push(0.0, e_amplitude(f0));
    r.energy.push(0.0, dynamics::discrete_hamiltonian(ens, f0));
    dump(0);
    for (int n = 1; n <= c.n_steps; ++n) {
      double amp = 0.0;
      double H = 0.0;
      try {
        dynamics::leapfrog_step(ens, c.dt, pipeline);
        amp = e_amplitude(pipeline.field());
        H = dynamics::discrete_hamiltonian(ens, pipeline.field());
        if (!std::isfinite(amp) || !std::isfinite(H)) throw DomainError("non-finite field");
      } catch (const std::exception& e) {
        r.failure = e.what();
        r.failure_time = n * c.dt;
        break;
      }
      r.amplitude.push(n * c.dt, amp);
      r.energy.push(n * c.dt, H);
      dump(n);
    }
    r.final_field = pipeline.field();
    r.nudged = pipeline.nudged_total();
    if (c.fit_window.second > c.fit_window.first) {
      try {
        r.gamma = fit_rate(r.amplitude, c.fit_window);
        r.gamma_fitted = true;
      } catch (const DomainError&) {
        r.gamma_fitted = false;
      }
    }
  }
  const std::size_t steps_done = r.energy.size() > 1 ? r.energy.size() - 1 : 1;
  r.step_time = seconds_since(loop_start) / static_cast<double>(steps_done);
  r.final_state = std::move(ens);
  r.wall_time = seconds_since(start);
  return r;
}

std::vector<ConvergenceRow> convergence_study(const ScenarioConfig& c) {
  c.validate();
  const double L = c.L;
  const double Q = wrap_position(L / std::numbers::sqrt2, L);
  struct Source {
    const char* name;
    double psi;
    double p;
  };
  const Source sources[] = {{"monopole", c.source_psi_star, 0.0},
                            {"dipole", 0.0, c.source_p_star},
                            {"combined", c.source_psi_star, c.source_p_star}};
  const double breaks[] = {Q};
  std::vector<ConvergenceRow> rows;
  for (int k : {1, 2}) {
    for (const auto& src : sources) {
      double prev = std::numeric_limits<double>::quiet_NaN();
      for (int l = 0; l <= c.levels; ++l) {
        const int n = c.n_elements << l;
        auto system = field::assemble_stiffness(field::PeriodicMesh::uniform(L, n, k));
        DecoratedParticle particle{Q, 0.0, 0.0, src.p, src.psi};
        const auto dep = field::deposit_charge(std::span(&particle, 1), system->mesh());
        const auto state = field::solve_potential(system, dep.rhs);
        const double psi = src.psi;
        const double ps = src.p;
        const double err = field::l2_error(
            state, [&](double q) { return field::exact_single_source(psi, ps, L, Q, q); }, k + 4, breaks);
        ConvergenceRow row;
        row.source = src.name;
        row.degree = k;
        row.n_elements = n;
        row.h = L / n;
        row.error = err;
        row.order = (l == 0 || !(prev > 0.0) || !(err > 0.0)) ? std::numeric_limits<double>::quiet_NaN()
                                                              : std::log(prev / err) / std::log(2.0);
        rows.push_back(row);
        prev = err;
      }
    }
  }
  return rows;
}

double finest_order(const std::vector<ConvergenceRow>& rows, const std::string& source, int degree) {
  double order = std::numeric_limits<double>::quiet_NaN();
  int finest = -1;
  for (const auto& r : rows) {
    if (r.source == source && r.degree == degree && r.n_elements > finest) {
      finest = r.n_elements;
      order = r.order;
    }
  }
  return order;
}

ErrorScalingResult error_scaling_study(const ScenarioConfig& c) {
  c.validate();
  ErrorScalingResult out;

  const double k = 2.0 * std::numbers::pi / c.L;
  VlasovOracle oracle(PhaseGrid::landau(c.L, c.n_q, c.n_p, c.p_max, c.amplitude, k));
  const double mass0 = oracle.grid().mass();
  const int oracle_steps = static_cast<int>(std::llround(c.eval_time / c.oracle_dt));
  const double odt = c.eval_time / oracle_steps;
  for (int n = 0; n < oracle_steps; ++n) oracle.step(odt);
  out.oracle_mass_drift = (oracle.grid().mass() - mass0) / mass0;
  const GridField reference = oracle.electric_field();

  ScenarioConfig run = c;
  run.scenario = ScenarioKind::Landau;
  run.n_steps = static_cast<int>(std::llround(c.eval_time / c.dt));
  run.fit_window = {0.0, 0.0};
  run.snapshot_times.clear();

  auto measure = [&](std::size_t n_markers, std::size_t n_clusters, double& wall, double* step = nullptr) {
    std::vector<double> errs;
    std::vector<double> times;
    std::vector<double> steps;
    for (int s = 0; s < c.n_seeds; ++s) {
      run.seed = c.seed + static_cast<std::uint64_t>(s);
      run.n_markers = n_markers;
      run.n_clusters = n_clusters;
      const auto r = simulate(run);
      errs.push_back(r.failure.empty() ? relative_E_error(*r.final_field, reference)
                                       : std::numeric_limits<double>::infinity());
      times.push_back(r.wall_time);
      steps.push_back(r.step_time);
    }
    wall = mean(times);
    if (step) *step = mean(steps);
    return mean(errs);
  };

  std::vector<double> pic_n, pic_e, sw_n, sw_e, sw_t;
  for (auto n : c.ladder) {
    ErrorScalingRow pic{"pic", n, n, 0.0, 0.0};
    pic.error = measure(n, 0, pic.wall_time, &pic.step_time);
    out.rows.push_back(pic);
    pic_n.push_back(static_cast<double>(n));
    pic_e.push_back(pic.error);

    const std::size_t nc = n / c.cluster_ratio;
    ErrorScalingRow sw{"swpic", n, nc, 0.0, 0.0};
    sw.error = measure(n, nc, sw.wall_time, &sw.step_time);
    out.rows.push_back(sw);
    sw_n.push_back(static_cast<double>(nc));
    sw_e.push_back(sw.error);
    sw_t.push_back(sw.step_time);
  }
  out.pic_slope = loglog_slope(pic_n, pic_e);
  out.swpic_slope = loglog_slope(sw_n, sw_e);
  {
    std::vector<double> tn, tt;
    const double top = *std::max_element(sw_n.begin(), sw_n.end());
    for (std::size_t i = 0; i < sw_n.size(); ++i) {
      if (sw_n[i] >= top / 10.0) {
        tn.push_back(sw_n[i]);
        tt.push_back(sw_t[i]);
      }
    }
    out.runtime_slope = tn.size() >= 2 ? loglog_slope(tn, tt) : std::numeric_limits<double>::quiet_NaN();
  }

  // parity point: SWPIC with 1e4 clusters against PIC at reference_markers
  constexpr std::size_t kParityClusters = 10000;
  const std::size_t ref = c.reference_markers > 0 ? c.reference_markers : 88000;
  out.parity_swpic = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : out.rows) {
    if (row.method == "swpic" && row.n_evolved == kParityClusters) out.parity_swpic = row.error;
  }
  double wall = 0.0;
  if (std::isnan(out.parity_swpic)) {
    out.parity_swpic = measure(kParityClusters * c.cluster_ratio, kParityClusters, wall);
    out.rows.push_back({"swpic", kParityClusters * c.cluster_ratio, kParityClusters, out.parity_swpic, wall, 0.0});
  }
  out.parity_pic = measure(ref, 0, wall);
  out.rows.push_back({"pic", ref, ref, out.parity_pic, wall, 0.0});
  return out;
}

void run_scenario(const ScenarioConfig& c) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output_dir);
  const std::string dir = c.output_dir;
  const auto start = Clock::now();
  Summary s;
  try {
    c.validate();
    switch (c.scenario) {
      case ScenarioKind::TestParticle:
      case ScenarioKind::TwoStream:
      case ScenarioKind::Landau: {
        const auto r = simulate(c, dir);
        if (r.amplitude.size() > 0) write_series_csv(r.amplitude, "amp", dir + "/amplitude.csv");
        write_series_csv(r.energy, "H", dir + "/energy.csv");
        if (r.failure.empty() && r.final_field) field::write_potential_csv(*r.final_field, dir + "/potential.csv");
        s.add("status", r.failure.empty() ? "ok" : "failed");
        if (!r.failure.empty()) {
          s.add("error", r.failure);
          s.add("failure_time", r.failure_time);
        }
        add_run_summary(s, c, r);
        if (!r.failure.empty()) {
          s.write(dir + "/summary.txt");
          throw SimulationError("run stopped at t=" + format_double(r.failure_time) + ": " + r.failure);
        }
        break;
      }
      case ScenarioKind::Convergence: {
        const auto rows = convergence_study(c);
        std::ofstream out(dir + "/convergence.csv", std::ios::binary);
        out << "source,degree,n_elements,h,error,order\r\n";
        for (const auto& r : rows) {
          out << r.source << ',' << r.degree << ',' << r.n_elements << ',' << format_double(r.h) << ','
              << format_double(r.error) << ',' << format_double(r.order) << "\r\n";
        }
        s.add("status", "ok");
        s.add("scenario", to_string(c.scenario));
        for (int k : {1, 2}) {
          for (const char* src : {"monopole", "dipole", "combined"}) {
            s.add(std::string(src) + "_order_k" + std::to_string(k), finest_order(rows, src, k));
          }
        }
        s.add("wall_time", seconds_since(start));
        break;
      }
      case ScenarioKind::ErrorScaling: {
        const auto res = error_scaling_study(c);
        std::ofstream out(dir + "/error_scaling.csv", std::ios::binary);
        out << "method,n_markers,n_particles,dof,error,wall_time,step_time\r\n";
        for (const auto& r : res.rows) {
          const std::size_t dof = (r.method == "swpic" ? 5 : 3) * r.n_evolved;
          out << r.method << ',' << r.n_markers << ',' << r.n_evolved << ',' << dof << ',' << format_double(r.error)
              << ',' << format_double(r.wall_time) << ',' << format_double(r.step_time) << "\r\n";
        }
        s.add("status", "ok");
        s.add("scenario", to_string(c.scenario));
        s.add("seed", std::to_string(c.seed));
        s.add("n_seeds", std::to_string(c.n_seeds));
        s.add("eval_time", c.eval_time);
        s.add("pic_slope", res.pic_slope);
        s.add("swpic_slope", res.swpic_slope);
        s.add("runtime_slope", res.runtime_slope);
        s.add("parity_swpic_error", res.parity_swpic);
        s.add("parity_pic_error", res.parity_pic);
        s.add("parity_ratio", res.parity_swpic / res.parity_pic);
        s.add("oracle_mass_drift", res.oracle_mass_drift);
        s.add("wall_time", seconds_since(start));
        break;
      }
    }
    s.write(dir + "/summary.txt");
  } catch (const SimulationError&) {
    throw;
  } catch (const std::exception& e) {
    Summary f;
    f.add("status", "failed");
    f.add("scenario", to_string(c.scenario));
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    f.add("error", msg);
    f.add("wall_time", seconds_since(start));
    f.write(dir + "/summary.txt");
    throw;
  }
}

}  // namespace swpic::bench
