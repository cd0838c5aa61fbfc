#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairaffect/io.hpp"
#include "fairaffect/partition.hpp"
#include "fairaffect/report.hpp"
#include "fairaffect/synth.hpp"
#include "fairaffect/types.hpp"

namespace {

using namespace fairaffect;

std::string format_double(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) throw Error("number formatting failed");
    return std::string(buffer, ptr);
}

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> ratios{};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t comma = text.find(',', pos);
        if (i < 2 && comma == std::string::npos) throw Error("ratios need 3 values");
        if (i == 2 && comma != std::string::npos) throw Error("ratios need exactly 3 values");
        const std::string token = comma == std::string::npos ? text.substr(pos)
                                                             : text.substr(pos, comma - pos);
        try {
            ratios[i] = std::stod(token);
        } catch (const std::exception&) {
            throw Error("cannot parse ratio '" + token + "'");
        }
        pos = comma + 1;
    }
    return ratios;
}

void print_quality(const PartitionQuality& quality, const PartitionSpec& spec) {
    std::cout << "set fractions:";
    for (int set = 0; set < 3; ++set)
        std::cout << " " << to_string(static_cast<Split>(set)) << "="
                  << quality.set_fractions[set];
    std::cout << "\nratio errors:";
    for (int set = 0; set < 3; ++set)
        std::cout << " " << to_string(static_cast<Split>(set)) << "="
                  << quality.ratio_errors[set];
    std::cout << " (tolerance " << spec.tolerance << ")";
    std::cout << "\nsubject independent: " << (quality.subject_independent ? "yes" : "no")
              << "\n";
    for (int set = 0; set < 3; ++set) {
        std::cout << "L1 divergence (" << to_string(static_cast<Split>(set)) << "):";
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim)
            std::cout << " " << to_string(static_cast<MatchDimension>(dim)) << "="
                      << quality.divergence[set][dim];
        std::cout << "\n";
    }
    for (const std::string& warning : quality.warnings)
        std::cout << "warning: " << warning << "\n";
}

struct CommonArgs {
    std::string annotations;
    std::string predictions;
    std::string manifest;
    std::string set;
    std::string task = "expr";
    std::string ratios = "0.55,0.15,0.30";
    std::uint64_t seed = 0;
    double bin_width = 0.2;
    double tolerance = 0.02;
    std::string out;
    std::string format = "json";
    std::string model = "model";
};

PartitionSpec make_spec(const CommonArgs& args) {
    PartitionSpec spec;
    spec.ratios = parse_ratios(args.ratios);
    spec.seed = args.seed;
    spec.tolerance = args.tolerance;
    spec.stratify.bin_width = args.bin_width;
    spec.validate();
    return spec;
}

int cmd_partition(const CommonArgs& args) {
    const LoadResult loaded = load_annotations(args.annotations, task_from_string(args.task));
    if (loaded.rows_dropped_automatic > 0)
        std::cout << "dropped " << loaded.rows_dropped_automatic
                  << " automatically annotated row(s)\n";
    if (loaded.synthetic_subjects)
        std::cout << "warning: no subject_id column; treating every sample as its own "
                     "subject\n";
    const PartitionSpec spec = make_spec(args);
    const PartitionResult result = partition_dataset(loaded.dataset, spec);
    write_manifest(result.partition, args.out);
    std::cout << "wrote " << args.out << " (" << result.partition.assignment.size()
              << " samples)\n";
    print_quality(result.quality, spec);
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    const Task task = task_from_string(args.task);
    const LoadResult loaded = load_annotations(args.annotations, task);
    const PredictionSet predictions = load_predictions(args.predictions, task);
    const Partition partition = load_manifest(args.manifest);
    const Split split = split_from_string(args.set);
    const Dataset scoped = select_split(loaded.dataset, partition, split);
    if (scoped.empty()) {
        std::cerr << "error: no samples in set '" << args.set << "'\n";
        return 1;
    }

    std::map<std::string, std::string> metadata{
        {"model", args.model},           {"set", args.set},
        {"annotations", args.annotations}, {"predictions", args.predictions},
        {"manifest", args.manifest},
    };
    const MetricReport report = build_report(scoped, predictions, std::move(metadata));
    const ReportFormat format = report_format_from_string(args.format);
    if (args.out.empty()) {
        std::cout << render_report(report, format);
    } else {
        write_report(report, args.out, format);
        std::cout << "wrote " << args.out << "\n";
    }
    for (const std::string& warning : report.warnings)
        std::cout << "warning: " << warning << "\n";
    return 0;
}

int cmd_validate(const CommonArgs& args) {
    const LoadResult loaded = load_annotations(args.annotations, task_from_string(args.task));
    const Partition partition = load_manifest(args.manifest);
    const PartitionSpec spec = make_spec(args);
    const PartitionQuality quality = validate_partition(loaded.dataset, partition, spec);
    print_quality(quality, spec);

    bool pass = quality.subject_independent;
    for (double error : quality.ratio_errors) pass = pass && error <= spec.tolerance;
    std::cout << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format_token,
               const std::string& out) {
    std::vector<MetricReport> reports;
    reports.reserve(inputs.size());
    for (const std::string& path : inputs) reports.push_back(load_report(path));
    const std::string rendered =
        render_leaderboard(reports, report_format_from_string(format_token));
    if (out.empty()) {
        std::cout << rendered;
    } else {
        std::ofstream stream(out, std::ios::binary);
        if (!stream) throw Error("cannot write " + out);
        stream << rendered;
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

int cmd_synth(const CommonArgs& args, std::size_t subjects, std::size_t samples_min,
              std::size_t samples_max, std::size_t classes, std::size_t aus,
              const std::string& pred_out, double accuracy, double gap,
              const std::string& gap_attribute) {
    const Task task = task_from_string(args.task);
    SynthSpec spec;
    spec.subjects = subjects;
    spec.samples_per_subject_min = samples_min;
    spec.samples_per_subject_max = std::max(samples_min, samples_max);
    spec.num_classes = classes;
    spec.num_aus = aus;
    spec.seed = args.seed;
    spec.va_bin_width = args.bin_width;
    spec.base_accuracy = accuracy;
    if (gap != 0.0) {
        Attribute attribute = Attribute::Gender;
        if (gap_attribute == "race") attribute = Attribute::Race;
        else if (gap_attribute == "age") attribute = Attribute::Age;
        spec.accuracy_offsets[{attribute, 0}] = gap / 2.0;
        spec.accuracy_offsets[{attribute, 1}] = -gap / 2.0;
    }

    const Dataset dataset = generate_dataset(spec, task);

    // annotation table, predictions table (optional)
    std::ofstream stream(args.out, std::ios::binary);
    if (!stream) throw Error("cannot write " + args.out);
    stream << "sample_id,subject_id,age,gender,race,annotation_source";
    if (task == Task::Expr) stream << ",expression";
    if (task == Task::Au)
        for (const std::string& au : dataset.vocabulary()) stream << "," << au;
    if (task == Task::Va) stream << ",valence,arousal";
    stream << "\n";
    for (const Sample& sample : dataset.samples()) {
        stream << sample.sample_id << "," << sample.subject_id << ","
               << to_string(sample.demographics.age) << ","
               << to_string(sample.demographics.gender) << ","
               << to_string(sample.demographics.race) << ",manual";
        if (task == Task::Expr) stream << "," << std::get<ExprLabel>(sample.label).cls;
        if (task == Task::Au)
            for (std::uint8_t bit : std::get<AuLabel>(sample.label).active)
                stream << "," << static_cast<int>(bit);
        if (task == Task::Va) {
            const auto& va = std::get<VaLabel>(sample.label);
            stream << "," << format_double(va.valence) << "," << format_double(va.arousal);
        }
        stream << "\n";
    }
    std::cout << "wrote " << args.out << " (" << dataset.size() << " samples, "
              << subjects << " subjects)\n";

    if (!pred_out.empty()) {
        const PredictionSet predictions = generate_predictions(dataset, spec);
        std::ofstream pred_stream(pred_out, std::ios::binary);
        if (!pred_stream) throw Error("cannot write " + pred_out);
        pred_stream << "sample_id";
        if (task == Task::Expr) pred_stream << ",expression";
        if (task == Task::Au)
            for (const std::string& au : dataset.vocabulary()) pred_stream << "," << au;
        if (task == Task::Va) pred_stream << ",valence,arousal";
        pred_stream << "\n";
        for (const Sample& sample : dataset.samples()) {
            const TaskLabel* label = predictions.find(sample.sample_id);
            pred_stream << sample.sample_id;
            if (task == Task::Expr)
                pred_stream << "," << std::get<ExprLabel>(*label).cls;
            if (task == Task::Au)
                for (std::uint8_t bit : std::get<AuLabel>(*label).active)
                    pred_stream << "," << static_cast<int>(bit);
            if (task == Task::Va) {
                const auto& va = std::get<VaLabel>(*label);
                pred_stream << "," << format_double(va.valence) << ","
                            << format_double(va.arousal);
            }
            pred_stream << "\n";
        }
        std::cout << "wrote " << pred_out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware evaluation and protocol partitioning for affect analysis"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> report_inputs;
    std::size_t subjects = 100;
    std::size_t samples_min = 1;
    std::size_t samples_max = 1;
    std::size_t classes = 7;
    std::size_t aus = 4;
    std::string pred_out;
    double accuracy = 0.9;
    double gap = 0.0;
    std::string gap_attribute = "gender";

    auto* partition_cmd =
        app.add_subcommand("partition", "Create a protocol-compliant train/valid/test split");
    partition_cmd->add_option("--annotations", args.annotations, "annotation table (csv)")
        ->required();
    partition_cmd->add_option("--task", args.task, "expr|au|va")->required();
    partition_cmd->add_option("--ratios", args.ratios, "train,valid,test ratios");
    partition_cmd->add_option("--seed", args.seed, "random seed");
    partition_cmd->add_option("--bin-width", args.bin_width, "VA region edge length");
    partition_cmd->add_option("--tolerance", args.tolerance, "ratio slack");
    partition_cmd->add_option("--out", args.out, "manifest output path")->required();

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute the metric suite for one set");
    evaluate_cmd->add_option("--annotations", args.annotations, "annotation table (csv)")
        ->required();
    evaluate_cmd->add_option("--predictions", args.predictions, "prediction table (csv)")
        ->required();
    evaluate_cmd->add_option("--manifest", args.manifest, "partition manifest")->required();
    evaluate_cmd->add_option("--set", args.set, "train|valid|test")->required();
    evaluate_cmd->add_option("--task", args.task, "expr|au|va")->required();
    evaluate_cmd->add_option("--out", args.out, "report output path (stdout when absent)");
    evaluate_cmd->add_option("--format", args.format, "json|markdown");
    evaluate_cmd->add_option("--model", args.model, "model name recorded in the report");

    auto* validate_cmd =
        app.add_subcommand("validate", "Check a manifest against the protocol");
    validate_cmd->add_option("--annotations", args.annotations, "annotation table (csv)")
        ->required();
    validate_cmd->add_option("--manifest", args.manifest, "partition manifest")->required();
    validate_cmd->add_option("--task", args.task, "expr|au|va")->required();
    validate_cmd->add_option("--ratios", args.ratios, "train,valid,test ratios");
    validate_cmd->add_option("--bin-width", args.bin_width, "VA region edge length");
    validate_cmd->add_option("--tolerance", args.tolerance, "ratio slack");

    auto* report_cmd =
        app.add_subcommand("report", "Merge evaluation reports into a leaderboard");
    report_cmd->add_option("inputs", report_inputs, "report files (json)")->required();
    report_cmd->add_option("--format", args.format, "json|markdown");
    report_cmd->add_option("--out", args.out, "output path (stdout when absent)");

    auto* synth_cmd =
        app.add_subcommand("synth", "Generate a synthetic annotation table (and predictions)");
    synth_cmd->add_option("--task", args.task, "expr|au|va")->required();
    synth_cmd->add_option("--subjects", subjects, "number of subjects");
    synth_cmd->add_option("--samples-min", samples_min, "min samples per subject");
    synth_cmd->add_option("--samples-max", samples_max, "max samples per subject");
    synth_cmd->add_option("--classes", classes, "expression classes");
    synth_cmd->add_option("--aus", aus, "action units");
    synth_cmd->add_option("--seed", args.seed, "random seed");
    synth_cmd->add_option("--bin-width", args.bin_width, "VA region edge length");
    synth_cmd->add_option("--out", args.out, "annotation output path")->required();
    synth_cmd->add_option("--pred-out", pred_out, "also write synthetic predictions here");
    synth_cmd->add_option("--accuracy", accuracy, "base prediction accuracy");
    synth_cmd->add_option("--gap", gap, "accuracy/TPR gap planted between two subgroups");
    synth_cmd->add_option("--gap-attribute", gap_attribute, "attribute carrying the gap");

    CLI11_PARSE(app, argc, argv);

    try {
        if (partition_cmd->parsed()) return cmd_partition(args);
        if (evaluate_cmd->parsed()) return cmd_evaluate(args);
        if (validate_cmd->parsed()) return cmd_validate(args);
        if (report_cmd->parsed()) return cmd_report(report_inputs, args.format, args.out);
        if (synth_cmd->parsed())
            return cmd_synth(args, subjects, samples_min, samples_max, classes, aus, pred_out,
                             accuracy, gap, gap_attribute);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
