#include "fairaffect/report.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

#include "fairaffect/metrics_au.hpp"
#include "fairaffect/metrics_expr.hpp"
#include "fairaffect/metrics_va.hpp"

namespace fairaffect {

namespace {

void check_coverage(const Dataset& dataset, const PredictionSet& predictions) {
    if (predictions.task() != dataset.task())
        throw Error("predictions are for task '" +
                    std::string(to_string(predictions.task())) + "' but dataset is '" +
                    std::string(to_string(dataset.task())) + "'");
    std::vector<std::string> missing;
    for (const Sample& sample : dataset.samples())
        if (predictions.find(sample.sample_id) == nullptr) missing.push_back(sample.sample_id);
    if (missing.empty()) return;
    std::sort(missing.begin(), missing.end());
    std::ostringstream msg;
    msg << "predictions missing for " << missing.size() << " sample(s):";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg << " " << missing[i];
    if (missing.size() > shown) msg << " ... and " << missing.size() - shown << " more";
    throw Error(msg.str());
}

}  // namespace

MetricReport build_report(const Dataset& dataset, const PredictionSet& predictions,
                          std::map<std::string, std::string> metadata) {
    if (dataset.empty()) throw Error("build_report: empty dataset");
    check_coverage(dataset, predictions);

    MetricReport report;
    report.task = dataset.task();
    report.metadata = std::move(metadata);
    report.metadata.emplace("task", std::string(to_string(dataset.task())));
    report.metadata.emplace("samples", std::to_string(dataset.size()));

    const auto warn = [&](const std::string& message) { report.warnings.push_back(message); };

    switch (dataset.task()) {
        case Task::Expr:
            report.global["GF1"] = global_f1_expr(dataset, predictions);
            break;
        case Task::Au:
            report.global["GF1"] = global_f1_au(dataset, predictions);
            break;
        case Task::Va: {
            const GlobalCcc g = global_ccc_va(dataset, predictions);
            report.global["GVA"] = g.mean;
            report.global["GV"] = g.valence;
            report.global["GA"] = g.arousal;
            break;
        }
    }

    for (Attribute attribute : all_attributes()) {
        const std::string attr(to_string(attribute));
        try {
            switch (dataset.task()) {
                case Task::Expr:
                    report.local[attr]["LF1"] = local_f1_expr(dataset, predictions, attribute);
                    break;
                case Task::Au: {
                    const LocalF1Au local = local_f1_au_detail(dataset, predictions, attribute);
                    report.local[attr]["LF1"] = local.value;
                    for (int code : local.skipped_subgroups)
                        warn(attr + ": LF1 skipped subgroup " +
                             std::string(subgroup_name(attribute, code)) +
                             " (no AU support)");
                    break;
                }
                case Task::Va: {
                    const LocalCcc local = local_ccc_va_detail(dataset, predictions, attribute);
                    report.local[attr]["LVA"] = local.mean;
                    report.local[attr]["LV"] = local.valence;
                    report.local[attr]["LA"] = local.arousal;
                    for (int code : local.skipped_subgroups)
                        warn(attr + ": skipped degenerate subgroup " +
                             std::string(subgroup_name(attribute, code)));
                    break;
                }
            }
        } catch (const NotAssessable& e) {
            warn(attr + ": not assessable (" + std::string(e.what()) + ")");
            continue;  // no subgroups at all; disparity metrics cannot apply either
        }

        if (dataset.task() == Task::Va) continue;  // CCC has no disparity companion

        try {
            if (dataset.task() == Task::Expr) {
                const double sp_score = sp(dataset, predictions, attribute);
                const double eop_score = eop(dataset, predictions, attribute);
                report.fairness[attr]["SP"] = {sp_score, is_fair(sp_score)};
                report.fairness[attr]["EOP"] = {eop_score, is_fair(eop_score)};
            } else {
                const double dpd_score = dpd(dataset, predictions, attribute);
                report.fairness[attr]["DPD"] = {dpd_score, is_fair(dpd_score)};
                try {
                    const EodResult eod_result = eod_detail(dataset, predictions, attribute);
                    report.fairness[attr]["EOD"] = {eod_result.value,
                                                    is_fair(eod_result.value)};
                    for (std::size_t au : eod_result.skipped_aus)
                        warn(attr + ": EOD skipped " + dataset.vocabulary()[au] +
                             " (TPR defined in fewer than 2 subgroups)");
                } catch (const NotAssessable& e) {
                    warn(attr + ": EOD not assessable (" + std::string(e.what()) + ")");
                }
            }
        } catch (const NotAssessable& e) {
            warn(attr + ": disparity metrics not assessable (" + std::string(e.what()) + ")");
        }
    }
    return report;
}

Dataset select_split(const Dataset& dataset, const Partition& partition, Split split) {
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample& sample = dataset.samples()[i];
        const auto it = partition.assignment.find(sample.sample_id);
        if (it == partition.assignment.end())
            throw Error("partition does not cover sample " + sample.sample_id);
        if (it->second == split) indices.push_back(i);
    }
    return subset(dataset, indices);
}

}  // namespace fairaffect
