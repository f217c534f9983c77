#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fdr/filters.hpp"
#include "fdr/metrics.hpp"
#include "fdr/synth.hpp"
#include "fdr/trace.hpp"
#include "fdr/training.hpp"

namespace py = pybind11;

namespace {

py::object json_to_py(const nlohmann::ordered_json& doc) {
    auto json = py::module_::import("json");
    return json.attr("loads")(doc.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Frame delivery ratio prediction: EMA baseline and ELC pipeline";

    py::register_exception<fdr::ParseError>(m, "FdrParseError", PyExc_ValueError);
    py::register_exception<fdr::IoError>(m, "FdrIoError", PyExc_IOError);

    py::enum_<fdr::TraceFormat>(m, "TraceFormat")
        .value("csv", fdr::TraceFormat::csv)
        .value("packed", fdr::TraceFormat::packed);
    py::enum_<fdr::TraceOrigin>(m, "TraceOrigin")
        .value("measured", fdr::TraceOrigin::measured)
        .value("synthetic", fdr::TraceOrigin::synthetic);

    py::class_<fdr::OutcomeTrace>(m, "OutcomeTrace")
        .def(py::init([](std::vector<std::uint8_t> outcomes,
                         std::uint32_t sample_period_us, std::string label) {
                 fdr::OutcomeTrace t;
                 t.outcomes = std::move(outcomes);
                 t.sample_period_us = sample_period_us;
                 t.channel_label = std::move(label);
                 t.validate();
                 return t;
             }),
             py::arg("outcomes"), py::arg("sample_period_us") = 500000,
             py::arg("channel_label") = "")
        .def_readonly("outcomes", &fdr::OutcomeTrace::outcomes)
        .def_readwrite("sample_period_us", &fdr::OutcomeTrace::sample_period_us)
        .def_readwrite("channel_label", &fdr::OutcomeTrace::channel_label)
        .def_readonly("origin", &fdr::OutcomeTrace::origin)
        .def_readonly("seed", &fdr::OutcomeTrace::seed)
        .def("__len__", &fdr::OutcomeTrace::size);

    m.def("load_trace", &fdr::load_trace, py::arg("path"), py::arg("format"));
    m.def("save_trace", &fdr::save_trace, py::arg("trace"), py::arg("path"),
          py::arg("format"));
    m.def("slice", &fdr::slice, py::arg("trace"), py::arg("start"), py::arg("end"));

    py::class_<fdr::GilbertElliottParams>(m, "GilbertElliottParams")
        .def(py::init([](double p_gb, double p_bg, double ps_good, double ps_bad,
                         std::uint64_t seed) {
                 fdr::GilbertElliottParams p{p_gb, p_bg, ps_good, ps_bad, seed};
                 p.validate();
                 return p;
             }),
             py::arg("p_good_to_bad"), py::arg("p_bad_to_good"),
             py::arg("success_prob_good"), py::arg("success_prob_bad"),
             py::arg("seed"))
        .def("stationary_success_prob",
             &fdr::GilbertElliottParams::stationary_success_prob);

    m.def("gen_gilbert_elliott", &fdr::gen_gilbert_elliott, py::arg("params"),
          py::arg("n"), py::arg("sample_period_us") = 500000);
    m.def(
        "gen_from_profile",
        [](const std::vector<std::pair<std::size_t, double>>& segments,
           std::uint64_t seed, std::uint32_t sample_period_us) {
            fdr::FdrProfile profile;
            profile.seed = seed;
            for (const auto& [length, fdr_value] : segments)
                profile.segments.push_back({length, fdr_value});
            return fdr::gen_from_profile(profile, sample_period_us);
        },
        py::arg("segments"), py::arg("seed"), py::arg("sample_period_us") = 500000);

    m.def("ema_run", &fdr::ema_run, py::arg("alpha"), py::arg("y0"), py::arg("trace"));
    m.def("compute_targets",
          [](const fdr::OutcomeTrace& trace, std::size_t n_future) {
              return fdr::compute_targets(trace, n_future).values;
          },
          py::arg("trace"), py::arg("n_future"));

    py::class_<fdr::ElcModel>(m, "ElcModel")
        .def_readonly("alphas", &fdr::ElcModel::alphas)
        .def_readonly("lambdas", &fdr::ElcModel::lambdas)
        .def_readonly("y0", &fdr::ElcModel::y0)
        .def_property_readonly(
            "provenance",
            [](const fdr::ElcModel& model) { return json_to_py(model.provenance); });

    m.def("save_model", &fdr::save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &fdr::load_model, py::arg("path"));
    m.def("predict_series", &fdr::predict_series, py::arg("model"), py::arg("trace"));

    py::class_<fdr::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("n_lower", &fdr::TrainConfig::n_lower)
        .def_readwrite("n_upper", &fdr::TrainConfig::n_upper)
        .def_readwrite("ratio", &fdr::TrainConfig::ratio)
        .def_readwrite("lambda_max", &fdr::TrainConfig::lambda_max)
        .def_readwrite("n_future", &fdr::TrainConfig::n_future)
        .def_readwrite("n_skip", &fdr::TrainConfig::n_skip)
        .def_readwrite("y0", &fdr::TrainConfig::y0);

    m.def("fit_alpha_star", &fdr::fit_alpha_star, py::arg("trace"), py::arg("config"));
    m.def("fit_elc", &fdr::fit_elc, py::arg("train_trace"), py::arg("config"));
    m.def(
        "evaluate",
        [](const fdr::ElcModel& model, const fdr::OutcomeTrace& trace,
           const fdr::TrainConfig& config) {
            fdr::ErrorReport report = fdr::evaluate(model, trace, config);
            return json_to_py(report.to_json());
        },
        py::arg("model"), py::arg("test_trace"), py::arg("config"));
    m.def(
        "evaluate_ema",
        [](double alpha, const fdr::OutcomeTrace& trace,
           const fdr::TrainConfig& config) {
            fdr::ErrorReport report = fdr::evaluate_ema(alpha, trace, config);
            return json_to_py(report.to_json());
        },
        py::arg("alpha"), py::arg("test_trace"), py::arg("config"));
}
