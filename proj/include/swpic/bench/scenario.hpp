#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swpic/bench/diagnostics.hpp"
#include "swpic/dynamics.hpp"

namespace swpic::bench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time loop that stopped early (its summary has already been written).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { TestParticle, TwoStream, Landau, Convergence, ErrorScaling };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);

struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::Landau;
  double L = 12.0;
  int n_elements = 100;
  int degree = 1;
  double dt = 0.2;
  int n_steps = 500;
  std::size_t n_markers = 100000;
  std::size_t n_clusters = 10000;  // 0 runs plain PIC
  std::uint64_t seed = 1;
  std::pair<double, double> fit_window{0.0, 20.0};
  int n_q = 256;
  int n_p = 512;
  double p_max = 8.0;
  std::string output_dir = "out";

  // physics
  double temperature = 0.09;  // two-stream beam temperature
  double beam_speed = 1.0;
  double amplitude = 0.5;     // Landau perturbation, or V amplitude for TestParticle
  std::string c_function = "periodic_sine";  // or "linear"
  std::string curvature = "projected";       // or "element_interior"
  int max_iterations = 300;                  // k-means
  std::vector<double> snapshot_times;        // phase-space dumps
  std::size_t reference_markers = 0;         // PIC count for the memory ratio; 0 uses n_markers

  // convergence study
  int levels = 4;  // mesh halvings after the base mesh
  double source_psi_star = 1.0;
  double source_p_star = 1.0;

  // error scaling study
  std::vector<std::size_t> ladder;
  int n_seeds = 3;
  std::size_t cluster_ratio = 10;
  double eval_time = 10.0;
  double oracle_dt = 0.05;

  static ScenarioConfig preset(ScenarioKind kind);
  void validate() const;
};

/// Applies one key=value pair. Keys are the field names above.
void set_config_value(ScenarioConfig& config, const std::string& key, const std::string& value);

/// Reads key=value lines ('#' and ';' start comments). The scenario key, or
/// `scenario_override`, selects the preset that the remaining keys modify.
ScenarioConfig parse_config(std::istream& in, const std::optional<ScenarioKind>& scenario_override = {});
ScenarioConfig load_config(const std::string& path, const std::optional<ScenarioKind>& scenario_override = {});

struct RunResult {
  TimeSeries amplitude;  // empty for TestParticle
  TimeSeries energy;
  double gamma = 0.0;
  bool gamma_fitted = false;
  std::size_t n_markers = 0;
  std::size_t n_evolved = 0;  // markers for PIC, decorated particles otherwise
  bool decorated = false;
  dynamics::Ensemble initial;
  dynamics::Ensemble final_state;
  std::optional<field::FieldState> final_field;
  std::size_t nudged = 0;
  double wall_time = 0.0;
  double step_time = 0.0;  // mean seconds per completed time step
  // set when the time loop stopped early; the series end at the last good step
  std::string failure;
  double failure_time = 0.0;
};

/// Time-dependent scenarios (TestParticle, TwoStream, Landau). Writes phase
/// snapshots into `snapshot_dir` when it is non-empty. A step that produces a
/// non-finite state or a failed solve ends the loop and is reported in
/// RunResult::failure instead of throwing.
RunResult simulate(const ScenarioConfig& config, const std::string& snapshot_dir = {});

struct ConvergenceRow {
  std::string source;  // monopole, dipole, combined
  int degree = 1;
  int n_elements = 0;
  double h = 0.0;
  double error = 0.0;
  double order = 0.0;  // against the previous level; NaN on the first
};

std::vector<ConvergenceRow> convergence_study(const ScenarioConfig& config);

/// Observed order between the two finest levels of a (source, degree) series.
double finest_order(const std::vector<ConvergenceRow>& rows, const std::string& source, int degree);

struct ErrorScalingRow {
  std::string method;  // pic, swpic
  std::size_t n_markers = 0;
  std::size_t n_evolved = 0;
  double error = 0.0;  // seed-averaged
  double wall_time = 0.0;  // seed-averaged
  double step_time = 0.0;  // seed-averaged seconds per step
};

struct ErrorScalingResult {
  std::vector<ErrorScalingRow> rows;
  double pic_slope = 0.0;    // against marker count
  double swpic_slope = 0.0;  // against cluster count
  double runtime_slope = 0.0;  // SWPIC seconds per step against cluster count, top decade
  double parity_swpic = 0.0;  // SWPIC at reference cluster count
  double parity_pic = 0.0;    // PIC at reference_markers
  double oracle_mass_drift = 0.0;
};

ErrorScalingResult error_scaling_study(const ScenarioConfig& config);

/// Dispatches on config.scenario and writes every artifact into
/// config.output_dir. On failure a summary with `status: failed` is written
/// before the exception propagates.
void run_scenario(const ScenarioConfig& config);

/// 17 significant digits, the format used by all CSV writers.
std::string format_double(double v);
void write_series_csv(const TimeSeries& series, const std::string& value_name, const std::string& path);

}  // namespace swpic::bench
