#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fairaffect/io.hpp"
#include "fairaffect/metrics_au.hpp"
#include "fairaffect/metrics_expr.hpp"
#include "fairaffect/metrics_va.hpp"
#include "fairaffect/partition.hpp"
#include "fairaffect/report.hpp"
#include "fairaffect/synth.hpp"

namespace py = pybind11;
using namespace fairaffect;

namespace {

Attribute attribute_from_string(const std::string& name) {
    if (name == "age") return Attribute::Age;
    if (name == "gender") return Attribute::Gender;
    if (name == "race") return Attribute::Race;
    throw Error("unknown attribute: " + name);
}

Partition partition_from_dict(const py::dict& assignment) {
    Partition partition;
    for (const auto& item : assignment)
        partition.assignment[item.first.cast<std::string>()] =
            split_from_string(item.second.cast<std::string>());
    return partition;
}

py::dict partition_to_dict(const Partition& partition) {
    py::dict out;
    for (const auto& [sample_id, split] : partition.assignment)
        out[py::str(sample_id)] = std::string(to_string(split));
    return out;
}

py::dict quality_to_dict(const PartitionQuality& quality) {
    py::dict out;
    py::dict fractions, errors, divergence;
    for (int set = 0; set < 3; ++set) {
        const std::string name(to_string(static_cast<Split>(set)));
        fractions[py::str(name)] = quality.set_fractions[set];
        errors[py::str(name)] = quality.ratio_errors[set];
        py::dict dims;
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim)
            dims[py::str(std::string(to_string(static_cast<MatchDimension>(dim))))] =
                quality.divergence[set][dim];
        divergence[py::str(name)] = dims;
    }
    out["set_fractions"] = fractions;
    out["ratio_errors"] = errors;
    out["divergence"] = divergence;
    out["subject_independent"] = quality.subject_independent;
    out["objective"] = quality.objective;
    out["warnings"] = quality.warnings;
    return out;
}

PartitionSpec spec_from_args(const std::vector<double>& ratios, std::uint64_t seed,
                             double bin_width, double tolerance) {
    PartitionSpec spec;
    if (ratios.size() != 3) throw Error("ratios must have 3 entries");
    std::copy(ratios.begin(), ratios.end(), spec.ratios.begin());
    spec.seed = seed;
    spec.stratify.bin_width = bin_width;
    spec.tolerance = tolerance;
    return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fairness-aware evaluation and protocol partitioning for affect analysis";

    py::register_exception<Error>(m, "FairAffectError", PyExc_ValueError);

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("task",
                               [](const Dataset& d) { return std::string(to_string(d.task())); })
        .def_property_readonly("vocabulary", &Dataset::vocabulary)
        .def_property_readonly("cardinality", &Dataset::cardinality)
        .def("__len__", &Dataset::size)
        .def("subject_ids", [](const Dataset& d) {
            std::vector<std::string> out;
            for (const auto& [subject, members] : subject_groups(d)) out.push_back(subject);
            return out;
        })
        .def("sample_ids", [](const Dataset& d) {
            std::vector<std::string> out;
            out.reserve(d.size());
            for (const Sample& s : d.samples()) out.push_back(s.sample_id);
            return out;
        });

    py::class_<PredictionSet>(m, "PredictionSet")
        .def_property_readonly(
            "task", [](const PredictionSet& p) { return std::string(to_string(p.task())); })
        .def("__len__", &PredictionSet::size);

    py::class_<SynthSpec>(m, "SynthSpec")
        .def(py::init<>())
        .def_readwrite("subjects", &SynthSpec::subjects)
        .def_readwrite("samples_per_subject_min", &SynthSpec::samples_per_subject_min)
        .def_readwrite("samples_per_subject_max", &SynthSpec::samples_per_subject_max)
        .def_readwrite("num_classes", &SynthSpec::num_classes)
        .def_readwrite("num_aus", &SynthSpec::num_aus)
        .def_readwrite("label_marginal", &SynthSpec::label_marginal)
        .def_readwrite("race_marginal", &SynthSpec::race_marginal)
        .def_readwrite("age_marginal", &SynthSpec::age_marginal)
        .def_readwrite("gender_marginal", &SynthSpec::gender_marginal)
        .def_readwrite("base_accuracy", &SynthSpec::base_accuracy)
        .def_readwrite("base_tpr", &SynthSpec::base_tpr)
        .def_readwrite("base_fpr", &SynthSpec::base_fpr)
        .def_readwrite("noise_sigma", &SynthSpec::noise_sigma)
        .def_readwrite("perfect_copy", &SynthSpec::perfect_copy)
        .def_readwrite("seed", &SynthSpec::seed)
        .def_readwrite("va_bin_width", &SynthSpec::va_bin_width)
        .def("set_accuracy_offset",
             [](SynthSpec& spec, const std::string& attribute, int code, double value) {
                 spec.accuracy_offsets[{attribute_from_string(attribute), code}] = value;
             })
        .def("set_selection_offset",
             [](SynthSpec& spec, const std::string& attribute, int code, double value) {
                 spec.selection_offsets[{attribute_from_string(attribute), code}] = value;
             });

    m.def("load_annotations",
          [](const std::string& path, const std::string& task) {
              return load_annotations(path, task_from_string(task)).dataset;
          },
          py::arg("path"), py::arg("task"));
    m.def("load_predictions",
          [](const std::string& path, const std::string& task) {
              return load_predictions(path, task_from_string(task));
          },
          py::arg("path"), py::arg("task"));

    m.def("generate_dataset",
          [](const SynthSpec& spec, const std::string& task) {
              return generate_dataset(spec, task_from_string(task));
          },
          py::arg("spec"), py::arg("task"));
    m.def("generate_predictions", &generate_predictions, py::arg("dataset"), py::arg("spec"));

    m.def("partition",
          [](const Dataset& dataset, const std::vector<double>& ratios, std::uint64_t seed,
             double bin_width, double tolerance) {
              const PartitionResult result =
                  partition_dataset(dataset, spec_from_args(ratios, seed, bin_width, tolerance));
              return py::make_tuple(partition_to_dict(result.partition),
                                    quality_to_dict(result.quality));
          },
          py::arg("dataset"), py::arg("ratios") = std::vector<double>{0.55, 0.15, 0.30},
          py::arg("seed") = 0, py::arg("bin_width") = 0.2, py::arg("tolerance") = 0.02);

    m.def("validate_partition",
          [](const Dataset& dataset, const py::dict& assignment,
             const std::vector<double>& ratios, std::uint64_t seed, double bin_width,
             double tolerance) {
              return quality_to_dict(
                  validate_partition(dataset, partition_from_dict(assignment),
                                     spec_from_args(ratios, seed, bin_width, tolerance)));
          },
          py::arg("dataset"), py::arg("assignment"),
          py::arg("ratios") = std::vector<double>{0.55, 0.15, 0.30}, py::arg("seed") = 0,
          py::arg("bin_width") = 0.2, py::arg("tolerance") = 0.02);

    m.def("select_split",
          [](const Dataset& dataset, const py::dict& assignment, const std::string& split) {
              return select_split(dataset, partition_from_dict(assignment),
                                  split_from_string(split));
          },
          py::arg("dataset"), py::arg("assignment"), py::arg("split"));

    m.def("evaluate_json",
          [](const Dataset& dataset, const PredictionSet& predictions,
             const std::string& model) {
              const MetricReport report =
                  build_report(dataset, predictions, {{"model", model}});
              return render_report(report, ReportFormat::Json);
          },
          py::arg("dataset"), py::arg("predictions"), py::arg("model") = "model");

    m.def("write_manifest",
          [](const py::dict& assignment, const std::string& path) {
              write_manifest(partition_from_dict(assignment), path);
          },
          py::arg("assignment"), py::arg("path"));
    m.def("load_manifest",
          [](const std::string& path) { return partition_to_dict(load_manifest(path)); },
          py::arg("path"));

    m.def("ccc",
          [](const std::vector<double>& truth, const std::vector<double>& pred) {
              return ccc(truth, pred);
          },
          py::arg("truth"), py::arg("pred"));
    m.def("va_region",
          [](double valence, double arousal, double bin_width) {
              const VaRegion region = va_region(valence, arousal, bin_width);
              return py::make_tuple(region.valence_bin, region.arousal_bin);
          },
          py::arg("valence"), py::arg("arousal"), py::arg("bin_width") = 0.2);
    m.def("macro_f1",
          [](const std::vector<int>& truth, const std::vector<int>& pred, std::size_t classes) {
              return macro_f1(confusion_matrix(truth, pred, classes));
          },
          py::arg("truth"), py::arg("pred"), py::arg("classes"));
    m.def("intensity_to_activation",
          [](int intensity) { return static_cast<int>(intensity_to_activation(intensity)); },
          py::arg("intensity"));
    m.def("format_percent", &format_percent, py::arg("value"));
}
