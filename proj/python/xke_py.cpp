#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xke/error.hpp"
#include "xke/logreg.hpp"
#include "xke/pipeline.hpp"

namespace py = pybind11;
using namespace xke;

namespace {

// Reports cross the boundary as JSON text; the Python wrapper decodes them.
std::string report_text(const metrics::MetricsReport& m) { return metrics::report_json(m, {}, ""); }

std::vector<std::string> explain_lines(const PipelineConfig& c, const std::filesystem::path& triples) {
  const auto explanations = cmd_explain(c, triples);
  const Dataset data = load_dataset(c, false);
  std::vector<std::string> out;
  out.reserve(explanations.size());
  for (const auto& e : explanations) out.push_back(explanation_json_line(e, data.graph));
  return out;
}

}  // namespace

PYBIND11_MODULE(_xke, m) {
  m.doc() = "Bindings for the xke knowledge-graph explanation pipeline";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<UserError>(m, "UserError", base.ptr());

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("load", &PipelineConfig::load, py::arg("path"))
      .def("set", &PipelineConfig::set, py::arg("key"), py::arg("value"))
      .def_readwrite("train_path", &PipelineConfig::train_path)
      .def_readwrite("valid_path", &PipelineConfig::valid_path)
      .def_readwrite("test_path", &PipelineConfig::test_path)
      .def_readwrite("out_dir", &PipelineConfig::out_dir)
      .def_readonly("seed", &PipelineConfig::seed);

  py::call_guard<py::gil_scoped_release> nogil;
  m.def("synth", &cmd_synth, py::arg("config"), nogil);
  m.def(
      "train_embedding",
      [](const PipelineConfig& c) {
        const auto s = cmd_train_embedding(c);
        return py::make_tuple(s.validation_accuracy, s.test_accuracy);
      },
      py::arg("config"));
  m.def("build_pred_graph", [](const PipelineConfig& c) { return cmd_build_pred_graph(c).positives; },
        py::arg("config"), nogil);
  m.def("extract_features", &cmd_extract_features, py::arg("config"), nogil);
  m.def("train_explainer", &cmd_train_explainer, py::arg("config"), nogil);
  m.def("evaluate_json", [](const PipelineConfig& c) { return report_text(cmd_evaluate(c)); }, py::arg("config"),
        nogil);
  m.def("run_json", [](const PipelineConfig& c) { return report_text(run_pipeline(c)); }, py::arg("config"), nogil);
  m.def("explain_json", &explain_lines, py::arg("config"), py::arg("triples"), nogil);
  m.def(
      "predict_proba",
      [](const std::vector<double>& weights, double bias, const std::vector<std::int32_t>& active) {
        return logreg::predict_proba(weights, bias, active);
      },
      py::arg("weights"), py::arg("bias"), py::arg("active"));
}
