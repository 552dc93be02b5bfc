#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gridfault/experiment.hpp"

namespace py = pybind11;
using namespace gridfault;

namespace {

LabeledSet make_labeled_set(const RMatrix& x, const std::vector<int>& y) {
  LabeledSet set;
  set.x = x;
  set.y = y;
  return set;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Faulted-line localization toolkit";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<ComputeError>(m, "ComputeError", PyExc_RuntimeError);

  // --- grid model -----------------------------------------------------
  py::class_<Bus>(m, "Bus")
      .def_readonly("id", &Bus::id)
      .def_readonly("shunt", &Bus::shunt)
      .def_readonly("load", &Bus::load);
  py::class_<Line>(m, "Line")
      .def_readonly("id", &Line::id)
      .def_readonly("from_bus", &Line::from)
      .def_readonly("to_bus", &Line::to)
      .def_readonly("z", &Line::z)
      .def_readonly("charging", &Line::charging);
  py::class_<GridSpec>(m, "GridSpec")
      .def_property_readonly("bus_count", &GridSpec::bus_count)
      .def_property_readonly("line_count", &GridSpec::line_count)
      .def_property_readonly("reference_bus", &GridSpec::reference_bus)
      .def("buses", &GridSpec::buses)
      .def("lines", &GridSpec::lines)
      .def("bus_index", &GridSpec::bus_index)
      .def("line_index", &GridSpec::line_index)
      .def("degree", &GridSpec::degree);
  m.def("parse_case", &parse_case, py::arg("path"));
  m.def("parse_case_text", &parse_case_text, py::arg("text"),
        py::arg("name") = "<memory>");

  py::class_<AdmittanceMatrix>(m, "AdmittanceMatrix")
      .def_property_readonly("dimension", &AdmittanceMatrix::dimension)
      .def_property_readonly("matrix",
                             [](const AdmittanceMatrix& y) { return y.y; });
  m.def("build_admittance", &build_admittance, py::arg("spec"));

  py::class_<FaultAugmentedMatrix>(m, "FaultAugmentedMatrix")
      .def_readonly("faulted_line", &FaultAugmentedMatrix::faulted_line)
      .def_readonly("from_index", &FaultAugmentedMatrix::from_index)
      .def_readonly("to_index", &FaultAugmentedMatrix::to_index)
      .def_readonly("position", &FaultAugmentedMatrix::position)
      .def_readonly("fault_admittance",
                    &FaultAugmentedMatrix::fault_admittance)
      .def_property_readonly(
          "matrix", [](const FaultAugmentedMatrix& yf) { return yf.base.y; });
  m.def("augment_fault", &augment_fault, py::arg("y0"), py::arg("spec"),
        py::arg("line_id"), py::arg("t"), py::arg("y_fault"),
        py::arg("t_min") = kDefaultTMin);

  // --- fault generation ------------------------------------------------
  py::enum_<FaultType>(m, "FaultType")
      .value("TP", FaultType::TP)
      .value("LG", FaultType::LG)
      .value("DLG", FaultType::DLG)
      .value("LL", FaultType::LL)
      .value("NONE", FaultType::None);
  m.def("fault_severity_factor", &fault_severity_factor);

  py::class_<FaultScenario>(m, "FaultScenario")
      .def_readonly("scenario_id", &FaultScenario::scenario_id)
      .def_readonly("label", &FaultScenario::label)
      .def_readonly("fault_type", &FaultScenario::type)
      .def_readonly("z_f", &FaultScenario::z_f)
      .def_readonly("position", &FaultScenario::position)
      .def_readonly("seed", &FaultScenario::seed)
      .def_readonly("u_pre", &FaultScenario::u_pre)
      .def_readonly("u_fault", &FaultScenario::u_fault)
      .def_readonly("u_fault_point", &FaultScenario::u_fault_point);

  py::class_<GenerationConfig>(m, "GenerationConfig")
      .def(py::init<>())
      .def_readwrite("per_type", &GenerationConfig::per_type)
      .def_readwrite("types", &GenerationConfig::types)
      .def_readwrite("null_count", &GenerationConfig::null_count)
      .def_readwrite("z_min", &GenerationConfig::z_min)
      .def_readwrite("z_max", &GenerationConfig::z_max)
      .def_readwrite("t_min", &GenerationConfig::t_min)
      .def_readwrite("epsilon", &GenerationConfig::epsilon)
      .def_readwrite("refresh_injections",
                     &GenerationConfig::refresh_injections)
      .def_readwrite("master_seed", &GenerationConfig::master_seed);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("system", &Dataset::system)
      .def_readonly("line_count", &Dataset::line_count)
      .def_readonly("scenarios", &Dataset::scenarios)
      .def("__len__",
           [](const Dataset& d) { return d.scenarios.size(); });

  m.def("sample_loads", &sample_loads, py::arg("spec"), py::arg("epsilon"),
        py::arg("seed"));
  m.def(
      "solve_prefault",
      [](const GridSpec& spec) {
        const PrefaultSolution out = solve_prefault(spec);
        return py::make_tuple(out.u, out.injections);
      },
      py::arg("spec"));
  m.def(
      "solve_duringfault",
      [](const FaultAugmentedMatrix& yf, const CVector& injections) {
        const FaultSolution out = solve_duringfault(yf, injections);
        return py::make_tuple(out.u_bus, out.u_fault_point);
      },
      py::arg("yf"), py::arg("injections"));
  m.def("generate_dataset", &generate_dataset, py::arg("spec"),
        py::arg("config"));
  m.def("add_noise", &add_noise, py::arg("dataset"), py::arg("snr_db"),
        py::arg("seed"));
  m.def("apply_delay", &apply_delay, py::arg("dataset"), py::arg("mean_ms"),
        py::arg("sigma_ms"), py::arg("fraction"), py::arg("seed"),
        py::arg("window_s") = 0.2);
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  // --- features ----------------------------------------------------------
  py::enum_<FeaturePart>(m, "FeaturePart")
      .value("IMAGINARY", FeaturePart::Imaginary)
      .value("REAL", FeaturePart::Real);
  py::class_<FeatureVector>(m, "FeatureVector")
      .def_readonly("values", &FeatureVector::values)
      .def_readonly("observed", &FeatureVector::observed)
      .def_readonly("label", &FeatureVector::label);
  m.def("feature_full", &feature_full, py::arg("y0"), py::arg("u_pre"),
        py::arg("u_fault"), py::arg("label") = 0,
        py::arg("part") = FeaturePart::Imaginary);
  m.def("feature_partial", &feature_partial, py::arg("y0"), py::arg("u_pre"),
        py::arg("u_fault"), py::arg("spec"), py::arg("observed"),
        py::arg("label") = 0, py::arg("part") = FeaturePart::Imaginary);
  m.def("unbalanced_current", &unbalanced_current, py::arg("y0"),
        py::arg("yf"), py::arg("u_fault"), py::arg("u_fault_point"));
  m.def(
      "extract_features",
      [](const Dataset& dataset, const GridSpec& spec,
         const std::vector<int>& observed, FeaturePart part) {
        const LabeledSet set = extract_features(dataset, spec, observed, part);
        return py::make_tuple(set.x, set.y);
      },
      py::arg("dataset"), py::arg("spec"),
      py::arg("observed") = std::vector<int>{},
      py::arg("part") = FeaturePart::Imaginary);

  // --- classifier ----------------------------------------------------------
  py::enum_<ModelKind>(m, "ModelKind")
      .value("CNN", ModelKind::Cnn)
      .value("NN", ModelKind::Nn);
  py::class_<ConvLayerSpec>(m, "ConvLayerSpec")
      .def(py::init<int, int>(), py::arg("kernels"), py::arg("kernel_len"))
      .def_readwrite("kernels", &ConvLayerSpec::kernels)
      .def_readwrite("kernel_len", &ConvLayerSpec::kernel_len);
  py::class_<ArchitectureSpec>(m, "ArchitectureSpec")
      .def(py::init<>())
      .def_readwrite("kind", &ArchitectureSpec::kind)
      .def_readwrite("input_length", &ArchitectureSpec::input_length)
      .def_readwrite("conv", &ArchitectureSpec::conv)
      .def_readwrite("hidden", &ArchitectureSpec::hidden)
      .def_readwrite("num_classes", &ArchitectureSpec::num_classes)
      .def("shape_chain", &ArchitectureSpec::shape_chain)
      .def("flattened_length", &ArchitectureSpec::flattened_length);
  m.def("cnn_architecture", &cnn_architecture, py::arg("input_length"),
        py::arg("num_classes"));
  m.def("nn_architecture", &nn_architecture, py::arg("input_length"),
        py::arg("num_classes"));
  m.def("param_count", &param_count);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("rmsprop_decay", &TrainConfig::rmsprop_decay)
      .def_readwrite("check_period", &TrainConfig::check_period)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("max_steps", &TrainConfig::max_steps)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<Model>(m, "Model")
      .def_readonly("arch", &Model::arch)
      .def_readonly("theta", &Model::theta);
  py::class_<Prediction>(m, "Prediction")
      .def_readonly("probabilities", &Prediction::probabilities)
      .def_readonly("ranking", &Prediction::ranking);
  py::class_<TrainHistoryEntry>(m, "TrainHistoryEntry")
      .def_readonly("step", &TrainHistoryEntry::step)
      .def_readonly("train_loss", &TrainHistoryEntry::train_loss)
      .def_readonly("val_loss", &TrainHistoryEntry::val_loss);
  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("history", &TrainResult::history)
      .def_readonly("best_val_loss", &TrainResult::best_val_loss)
      .def_readonly("stopped_step", &TrainResult::stopped_step)
      .def_readonly("early_stopped", &TrainResult::early_stopped);

  m.def("init_model", &init_model, py::arg("arch"), py::arg("seed"));
  m.def("forward", &forward, py::arg("model"), py::arg("x"));
  m.def("predict", &predict, py::arg("model"), py::arg("x"));
  m.def(
      "loss",
      [](const Model& model, const RMatrix& x, const std::vector<int>& y,
         double lambda) { return loss(model, make_labeled_set(x, y), lambda); },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("lambda_"));
  m.def(
      "backward",
      [](const Model& model, const RMatrix& x, const std::vector<int>& y,
         double lambda) {
        return backward(model, make_labeled_set(x, y), lambda);
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("lambda_"));
  m.def(
      "train",
      [](const ArchitectureSpec& arch, const RMatrix& train_x,
         const std::vector<int>& train_y, const RMatrix& val_x,
         const std::vector<int>& val_y, const TrainConfig& config) {
        return train(arch, make_labeled_set(train_x, train_y),
                     make_labeled_set(val_x, val_y), config);
      },
      py::arg("arch"), py::arg("train_x"), py::arg("train_y"),
      py::arg("val_x"), py::arg("val_y"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "train_nn_baseline",
      [](const RMatrix& train_x, const std::vector<int>& train_y,
         const RMatrix& val_x, const std::vector<int>& val_y,
         const TrainConfig& config) {
        return train_nn_baseline(make_labeled_set(train_x, train_y),
                                 make_labeled_set(val_x, val_y), config);
      },
      py::arg("train_x"), py::arg("train_y"), py::arg("val_x"),
      py::arg("val_y"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>());
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  // --- placement ---------------------------------------------------------
  py::class_<PlacementSet>(m, "PlacementSet")
      .def_readonly("algorithm", &PlacementSet::algorithm)
      .def_readonly("buses", &PlacementSet::buses)
      .def_readonly("target_size", &PlacementSet::target_size)
      .def_readonly("beta", &PlacementSet::beta)
      .def_readonly("seed", &PlacementSet::seed)
      .def_readonly("initial", &PlacementSet::initial)
      .def_readonly("reached_target", &PlacementSet::reached_target);
  m.def("default_initial_set", &default_initial_set, py::arg("spec"),
        py::arg("count") = 2);
  m.def("greedy_placement", &greedy_placement, py::arg("spec"),
        py::arg("train_data"), py::arg("val_data"), py::arg("arch"),
        py::arg("target_size"), py::arg("beta"), py::arg("initial"),
        py::arg("budget"), py::arg("threads") = 1,
        py::arg("standardize") = false,
        py::call_guard<py::gil_scoped_release>());
  m.def("random_placement", &random_placement, py::arg("bus_count"),
        py::arg("target_size"), py::arg("seed"));
  m.def("two_hop_vc", &two_hop_vc, py::arg("spec"));
  m.def("satisfies_two_hop", &satisfies_two_hop, py::arg("spec"),
        py::arg("bus_ids"));
  m.def("save_placement", &save_placement, py::arg("placement"),
        py::arg("path"));
  m.def("load_placement", &load_placement, py::arg("path"));

  // --- metrics and experiments --------------------------------------------
  py::class_<HopTable>(m, "HopTable")
      .def_readonly("exact", &HopTable::exact)
      .def_readonly("within_one", &HopTable::within_one)
      .def_readonly("within_two", &HopTable::within_two)
      .def_readonly("evaluated", &HopTable::evaluated);
  m.def("lar", &lar, py::arg("predicted"), py::arg("labels"));
  m.def("arc", &arc, py::arg("rankings"), py::arg("labels"));
  m.def("hop_analysis", &hop_analysis, py::arg("predicted"),
        py::arg("labels"), py::arg("spec"));
  m.def("uncertainty_index", &uncertainty_index, py::arg("test_u_pre"),
        py::arg("train_mean_u_pre"));

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const Json doc = Json::parse(config_json);
        const EvalReport report =
            run_experiment(ExperimentConfig::from_json(doc));
        return report_to_json(report).dump();
      },
      py::arg("config_json"), py::call_guard<py::gil_scoped_release>());
}
