#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "aois/engine.hpp"
#include "aois/rate.hpp"
#include "aois/sca.hpp"
#include "aois/zf.hpp"

namespace py = pybind11;
using namespace aois;

PYBIND11_MODULE(_aois, m) {
    m.doc() = "AoIS-aware downlink scheduling: core operations and the episode simulator";

    // channel / rate
    m.def("path_loss_db", &path_loss_db, py::arg("distance_km"));
    m.def("noise_power_w", &noise_power_w, py::arg("bandwidth_hz"), py::arg("psd_dbm_hz"));
    m.def(
        "mimo_rate",
        [](const CMat& h, const std::vector<CMat>& v, int self, const CMat& u, double sigma2) {
            return mimo_rate(h, v, self, u, sigma2);
        },
        py::arg("h"), py::arg("v_all"), py::arg("self"), py::arg("u"), py::arg("sigma2"));
    m.def(
        "miso_rate",
        [](const CVec& h, const std::vector<CVec>& v, int self, double sigma2) {
            return miso_rate(h, v, self, sigma2);
        },
        py::arg("h"), py::arg("v_all"), py::arg("self"), py::arg("sigma2"));
    m.def("transmission_delay", &transmission_delay, py::arg("symbols"), py::arg("bandwidth_hz"),
          py::arg("rate_bps_hz"));

    // aois / lyapunov
    m.def("time_penalty", &time_penalty, py::arg("t"), py::arg("epsilon"), py::arg("b"));
    m.def("aois_value", &aois_value, py::arg("t"), py::arg("epsilon"), py::arg("b"), py::arg("g"));
    m.def("queue_update", &queue_update, py::arg("q"), py::arg("alpha"), py::arg("cost"), py::arg("c_max"));
    m.def("lyapunov_value", &lyapunov_value, py::arg("queues"));
    m.def(
        "dpp_objective",
        [](const Vec& q, const std::vector<bool>& alpha, const Vec& cost, double c_max, double omega,
           const Vec& aois) { return dpp_objective(q, alpha, cost, c_max, omega, aois); },
        py::arg("queues"), py::arg("alpha"), py::arg("cost"), py::arg("c_max"), py::arg("omega"),
        py::arg("aois_values"));

    // sca / zf building blocks
    m.def("logdet_lower_bound", &logdet_lower_bound, py::arg("x"), py::arg("y"), py::arg("x0"), py::arg("y0"));
    m.def("zf_matrix", &zf_matrix, py::arg("h_stacked"), py::arg("power"));
    m.def("zf_power_weights", &zf_power_weights, py::arg("h_stacked"));
    m.def(
        "rate_floor_powers",
        [](const std::vector<int>& lengths, double b, double t_max, const Vec& sigma2) {
            return rate_floor_powers(lengths, b, t_max, sigma2);
        },
        py::arg("lengths"), py::arg("bandwidth_hz"), py::arg("t_max_s"), py::arg("sigma2"));
    m.def("reparameterized_power", &reparameterized_power, py::arg("q"), py::arg("p0"), py::arg("h_vec"), py::arg("p_max"));

    // engine
    m.def(
        "run_episode_json",
        [](const std::string& config_json, const std::string& mode) {
            const SystemConfig cfg = SystemConfig::from_json_text(config_json);
            return run_episode(cfg, mode_from_string(mode)).summary_json();
        },
        py::arg("config_json"), py::arg("mode"), "Runs one episode; returns the summary as a JSON string.");
    m.def(
        "run_episode_csv",
        [](const std::string& config_json, const std::string& mode) {
            const SystemConfig cfg = SystemConfig::from_json_text(config_json);
            const auto res = run_episode(cfg, mode_from_string(mode));
            std::ostringstream csv;
            write_episode_csv(csv, res.records);
            return csv.str();
        },
        py::arg("config_json"), py::arg("mode"), "Runs one episode; returns the per-slot log as CSV text.");
    m.def(
        "sweep_json",
        [](const std::string& config_json, const std::string& mode, const std::string& axis,
           const std::vector<double>& values) {
            const SystemConfig cfg = SystemConfig::from_json_text(config_json);
            const auto rows = sweep(cfg, mode_from_string(mode), sweep_axis_from_string(axis), values);
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["value"] = r.value;
                d["avg_aois"] = r.avg_aois;
                d["avg_g"] = r.avg_g;
                d["avg_cost_total"] = r.avg_cost_total;
                d["transmissions_total"] = r.transmissions_total;
                out.append(d);
            }
            return out;
        },
        py::arg("config_json"), py::arg("mode"), py::arg("axis"), py::arg("values"));
    m.def("default_config_json", [] {
        SystemConfig cfg;
        cfg.cost_per_action = Vec::Ones(cfg.num_users);
        return cfg.to_json_text();
    });

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<NumericalError>(m, "NumericalError");
    py::register_exception<InfeasibleError>(m, "InfeasibleError");
}
