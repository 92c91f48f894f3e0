#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "swpic/bench/diagnostics.hpp"
#include "swpic/bench/scenario.hpp"
#include "swpic/field.hpp"
#include "swpic/reduction.hpp"

namespace py = pybind11;
using namespace swpic;

namespace {

bench::ScenarioConfig make_config(const std::string& scenario, const py::dict& overrides) {
  auto c = bench::ScenarioConfig::preset(bench::parse_scenario_kind(scenario));
  for (const auto& [k, v] : overrides) {
    bench::set_config_value(c, py::str(k), py::str(v));
  }
  c.validate();
  return c;
}

py::dict series(const bench::TimeSeries& s) {
  py::dict d;
  d["t"] = s.times;
  d["value"] = s.values;
  return d;
}

py::list particles(const std::vector<DecoratedParticle>& ps) {
  py::list out;
  for (const auto& p : ps) out.append(py::make_tuple(p.Q, p.P, p.q_star, p.p_star, p.psi_star));
  return out;
}

}  // namespace

PYBIND11_MODULE(_swpic, m) {
  m.doc() = "decorated-particle PIC core";

  py::register_exception<bench::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def("wrap_position", &wrap_position, py::arg("q"), py::arg("L"));
  m.def("min_image", &min_image, py::arg("dq"), py::arg("L"));

  m.def("exact_single_source", &field::exact_single_source, py::arg("psi_star"), py::arg("p_star"), py::arg("L"),
        py::arg("Q"), py::arg("q"));
  m.def("fit_rate",
        [](const std::vector<double>& t, const std::vector<double>& v, double t0, double t1) {
          return bench::fit_rate({t, v}, {t0, t1});
        },
        py::arg("t"), py::arg("values"), py::arg("t0"), py::arg("t1"));

  m.def("compress",
        [](const std::vector<std::tuple<double, double, double>>& markers, std::size_t n_clusters, double L,
           std::uint64_t seed, const std::string& c_function) {
          std::vector<MarkerParticle> ms;
          for (const auto& [q, p, w] : markers) ms.push_back({q, p, w});
          Rng rng(seed);
          const auto a = reduction::kmeans_cluster(ms, n_clusters, rng, L);
          const auto c = c_function == "linear" ? reduction::CFunction::linear() : reduction::CFunction::periodic_sine(L);
          return particles(reduction::build_decorated(ms, a, c));
        },
        py::arg("markers"), py::arg("n_clusters"), py::arg("L"), py::arg("seed") = 1,
        py::arg("c_function") = "periodic_sine",
        "Cluster (Q, P, weight) markers and return (Q, P, q_star, p_star, psi_star) tuples.");

  m.def("simulate",
        [](const std::string& scenario, const py::dict& overrides) {
          const auto c = make_config(scenario, overrides);
          bench::RunResult r;
          {
            py::gil_scoped_release release;
            r = bench::simulate(c);
          }
          py::dict d;
          d["amplitude"] = series(r.amplitude);
          d["energy"] = series(r.energy);
          d["gamma"] = r.gamma_fitted ? py::cast(r.gamma) : py::none();
          d["n_markers"] = r.n_markers;
          d["n_particles"] = r.n_evolved;
          d["decorated"] = r.decorated;
          d["initial"] = particles(r.initial.particles);
          d["final"] = particles(r.final_state.particles);
          d["failure"] = r.failure.empty() ? py::none() : py::cast(r.failure);
          d["wall_time"] = r.wall_time;
          return d;
        },
        py::arg("scenario"), py::arg("overrides") = py::dict());

  m.def("run_scenario",
        [](const std::string& scenario, const py::dict& overrides) {
          const auto c = make_config(scenario, overrides);
          py::gil_scoped_release release;
          bench::run_scenario(c);
        },
        py::arg("scenario"), py::arg("overrides") = py::dict(),
        "Run a preset with key=value overrides and write its outputs to output_dir.");

  m.def("convergence_study",
        [](const py::dict& overrides) {
          const auto rows = bench::convergence_study(make_config("convergence", overrides));
          py::list out;
          for (const auto& r : rows) {
            py::dict d;
            d["source"] = r.source;
            d["degree"] = r.degree;
            d["n_elements"] = r.n_elements;
            d["h"] = r.h;
            d["error"] = r.error;
            d["order"] = r.order;
            out.append(d);
          }
          return out;
        },
        py::arg("overrides") = py::dict());
}
