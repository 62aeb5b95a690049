#include "pulselabel/errors.hpp"
#include "pulselabel/quality.hpp"
#include "pulselabel/query_engine.hpp"
#include "pulselabel/signal.hpp"
#include "pulselabel/simulator.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pulselabel;

namespace {

signal::PpgWindow window(std::vector<double> ppg, double fs) { return {"py", 0, fs, std::move(ppg)}; }

py::dict features_dict(const signal::FeatureVector& f) {
    py::dict d;
    const auto values = f.to_array();
    const auto& names = signal::FeatureVector::names();
    for (std::size_t i = 0; i < values.size(); ++i) d[py::str(std::string(names[i]))] = values[i];
    d["br_valid"] = f.br_valid;
    return d;
}

signal::FeatureVector features_from(const std::vector<double>& x) {
    if (x.size() != signal::FeatureVector::kSize) throw py::value_error("expected 13 feature values");
    std::array<double, signal::FeatureVector::kSize> a{};
    std::copy(x.begin(), x.end(), a.begin());
    return signal::FeatureVector::from_array(a);
}

Context context_arg(const std::string& s) {
    const auto c = context_from_string(s);
    if (!c) throw py::value_error("unknown activity: " + s);
    return *c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    std::vector<std::string> names;
    for (auto n : signal::FeatureVector::names()) names.emplace_back(n);
    m.attr("FEATURE_NAMES") = names;

    m.def(
        "bandpass_filter",
        [](std::vector<double> ppg, double fs) { return signal::bandpass_filter(window(std::move(ppg), fs)).samples; },
        py::arg("ppg"), py::arg("fs") = 20.0);

    m.def(
        "process_window",
        [](std::vector<double> ppg, double fs) { return features_dict(signal::process_window(window(std::move(ppg), fs))); },
        py::arg("ppg"), py::arg("fs") = 20.0);

    m.def(
        "assess_quality",
        [](std::vector<double> ppg, double fs) {
            const auto q = quality::assess(window(std::move(ppg), fs));
            py::dict d;
            d["skewness_var"] = q.skewness_var;
            d["kurtosis_var"] = q.kurtosis_var;
            d["apen_var"] = q.apen_var;
            d["shannon_entropy"] = q.shannon_entropy;
            d["spectral_entropy"] = q.spectral_entropy;
            d["usable"] = q.usable;
            d["cycles"] = q.cycles;
            return d;
        },
        py::arg("ppg"), py::arg("fs") = 20.0);

    m.def("coverage", &query::coverage, py::arg("x"), py::arg("u"), py::arg("d"));
    m.def("label_gap_ms", &query::label_gap_ms, py::arg("t_start_ms"), py::arg("t_end_ms"),
          py::arg("responded_at_ms"));

    m.def(
        "simulate_window",
        [](const std::string& subject, std::uint64_t seed, std::size_t slot, std::optional<std::string> activity) {
            const auto prof = sim::make_profile(subject, seed);
            sim::WindowOverrides ov;
            if (activity) ov.activity = context_arg(*activity);
            const auto w = sim::generate_window(prof, slot, ov);
            py::dict d;
            d["sample_id"] = w.payload.sample_id;
            d["t_start_ms"] = w.payload.t_start_ms;
            d["fs"] = w.payload.fs;
            d["ppg"] = w.payload.ppg;
            d["activity"] = std::string(to_string(w.activity));
            d["true_bpm"] = w.true_bpm;
            d["stress"] = w.stress;
            return d;
        },
        py::arg("subject_id"), py::arg("seed"), py::arg("slot"), py::arg("activity") = py::none());

    py::class_<query::EngineConfig>(m, "EngineConfig")
        .def(py::init<>())
        .def_readwrite("n_initial", &query::EngineConfig::n_initial)
        .def_readwrite("k_regions", &query::EngineConfig::k_regions)
        .def_readwrite("quota", &query::EngineConfig::quota)
        .def_readwrite("p_floor", &query::EngineConfig::p_floor)
        .def_readwrite("seed", &query::EngineConfig::seed)
        .def("validate", &query::EngineConfig::validate);

    py::class_<query::QueryEngine>(m, "QueryEngine")
        .def(py::init<std::string, query::EngineConfig>(), py::arg("subject_id"), py::arg("config") = query::EngineConfig{})
        .def(
            "observe",
            [](query::QueryEngine& e, const std::string& id, std::int64_t t0, std::int64_t t1, const std::vector<double>& x) {
                const auto dec = e.observe(id, t0, t1, features_from(x));
                py::dict d;
                d["sample_id"] = dec.sample_id;
                d["trigger"] = dec.trigger;
                d["probability"] = dec.probability;
                d["region"] = dec.region;
                d["reason"] = std::string(to_string(dec.reason));
                return d;
            },
            py::arg("sample_id"), py::arg("t_start_ms"), py::arg("t_end_ms"), py::arg("features"))
        .def(
            "register_label",
            [](query::QueryEngine& e, const std::string& sample_id, std::int64_t at, int stress, const std::string& activity) {
                query::LabelRecord r;
                r.ema_id = "Q" + sample_id;
                r.sample_id = sample_id;
                r.responded_at_ms = at;
                r.stress = stress;
                r.activity = context_arg(activity);
                return std::string(to_string(e.register_label(r)));
            },
            py::arg("sample_id"), py::arg("responded_at_ms"), py::arg("stress"), py::arg("activity") = "sitting")
        .def("coverage", &query::QueryEngine::coverage, py::arg("d") = 1.5)
        .def("coverage_curve", &query::QueryEngine::coverage_curve, py::arg("d") = 1.5)
        .def("probabilities", &query::QueryEngine::probabilities)
        .def_property_readonly("phase", [](const query::QueryEngine& e) {
            return e.phase() == query::Phase::Initial ? "initial" : "query";
        })
        .def_property_readonly("region_counts", &query::QueryEngine::region_counts)
        .def_property_readonly("label_counts", &query::QueryEngine::label_counts)
        .def("checkpoint", [](const query::QueryEngine& e) { return e.checkpoint().dump(); })
        .def_static("restore", [](const std::string& s) { return query::QueryEngine::restore(nlohmann::json::parse(s)); });
}
