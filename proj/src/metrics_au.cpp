#include "fairaffect/metrics_au.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fairaffect {

namespace {

std::pair<std::vector<AuBits>, std::vector<AuBits>> au_pairs(
    const Dataset& dataset, const PredictionSet& predictions,
    std::span<const std::size_t> scope) {
    if (predictions.task() != Task::Au || dataset.task() != Task::Au)
        throw Error("AU metrics require an au dataset and predictions");
    std::vector<AuBits> truth;
    std::vector<AuBits> pred;
    truth.reserve(scope.size());
    pred.reserve(scope.size());
    for (std::size_t i : scope) {
        const Sample& sample = dataset.samples()[i];
        const TaskLabel* predicted = predictions.find(sample.sample_id);
        if (predicted == nullptr)
            throw Error("missing prediction for sample " + sample.sample_id);
        truth.push_back(std::get<AuLabel>(sample.label).active);
        pred.push_back(std::get<AuLabel>(*predicted).active);
    }
    return {std::move(truth), std::move(pred)};
}

std::vector<std::size_t> full_scope(const Dataset& dataset) {
    std::vector<std::size_t> scope(dataset.size());
    std::iota(scope.begin(), scope.end(), 0);
    return scope;
}

AuConfusion scoped_confusion(const Dataset& dataset, const PredictionSet& predictions,
                             std::span<const std::size_t> scope) {
    auto [truth, pred] = au_pairs(dataset, predictions, scope);
    return au_confusion(truth, pred);
}

double mean_f1(const AuConfusion& confusion) {
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& f1 : f1_per_au(confusion)) {
        if (!f1) continue;
        sum += *f1;
        ++defined;
    }
    if (defined == 0) throw Error("no AU with support in truth or prediction");
    return sum / static_cast<double>(defined);
}

}  // namespace

AuConfusion au_confusion(std::span<const AuBits> truth, std::span<const AuBits> pred) {
    if (truth.size() != pred.size())
        throw Error("au_confusion: truth and prediction lengths differ");
    const std::size_t m = truth.empty() ? 0 : truth.front().size();
    AuConfusion out;
    out.tp.assign(m, 0);
    out.fp.assign(m, 0);
    out.fn.assign(m, 0);
    out.tn.assign(m, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].size() != m || pred[i].size() != m)
            throw Error("au_confusion: AU count mismatch at position " + std::to_string(i));
        for (std::size_t au = 0; au < m; ++au) {
            const bool t = truth[i][au] != 0;
            const bool p = pred[i][au] != 0;
            if (t && p)
                ++out.tp[au];
            else if (!t && p)
                ++out.fp[au];
            else if (t && !p)
                ++out.fn[au];
            else
                ++out.tn[au];
        }
    }
    return out;
}

std::vector<std::optional<double>> f1_per_au(const AuConfusion& confusion) {
    std::vector<std::optional<double>> out(confusion.aus());
    for (std::size_t au = 0; au < confusion.aus(); ++au) {
        const std::int64_t tp = confusion.tp[au];
        const std::int64_t fp = confusion.fp[au];
        const std::int64_t fn = confusion.fn[au];
        if (tp + fp + fn == 0) continue;
        out[au] = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return out;
}

std::optional<double> tpr(const AuConfusion& confusion, std::size_t au) {
    if (au >= confusion.aus()) throw Error("tpr: AU index out of range");
    const std::int64_t positives = confusion.tp[au] + confusion.fn[au];
    if (positives == 0) return std::nullopt;
    return static_cast<double>(confusion.tp[au]) / static_cast<double>(positives);
}

std::uint8_t intensity_to_activation(int intensity) {
    if (intensity < 0 || intensity > 5)
        throw Error("AU intensity out of range: " + std::to_string(intensity));
    return intensity > 0 ? 1 : 0;
}

double global_f1_au(const Dataset& dataset, const PredictionSet& predictions,
                    std::span<const std::size_t> scope) {
    if (scope.empty()) throw Error("global_f1_au: empty scope");
    return mean_f1(scoped_confusion(dataset, predictions, scope));
}

double global_f1_au(const Dataset& dataset, const PredictionSet& predictions) {
    const auto scope = full_scope(dataset);
    return global_f1_au(dataset, predictions, scope);
}

LocalF1Au local_f1_au_detail(const Dataset& dataset, const PredictionSet& predictions,
                             Attribute attribute) {
    const auto groups = subgroup_index(dataset, attribute);
    if (groups.empty())
        throw NotAssessable("local_f1_au: no admitted subgroups for attribute " +
                            std::string(to_string(attribute)));
    LocalF1Au result;
    double sum = 0.0;
    std::size_t kept = 0;
    for (const auto& [code, members] : groups) {
        const auto confusion = scoped_confusion(dataset, predictions, members);
        bool scorable = false;
        for (const auto& f1 : f1_per_au(confusion)) scorable = scorable || f1.has_value();
        if (!scorable) {
            result.skipped_subgroups.push_back(code);
            continue;
        }
        sum += mean_f1(confusion);
        ++kept;
    }
    if (kept == 0)
        throw NotAssessable("local_f1_au: no subgroup of attribute " +
                            std::string(to_string(attribute)) + " has a scorable AU");
    result.value = sum / static_cast<double>(kept);
    return result;
}

double local_f1_au(const Dataset& dataset, const PredictionSet& predictions,
                   Attribute attribute) {
    return local_f1_au_detail(dataset, predictions, attribute).value;
}

EodResult eod_detail(const Dataset& dataset, const PredictionSet& predictions,
                     Attribute attribute) {
    const auto groups = subgroup_index(dataset, attribute);
    if (groups.size() < 2)
        throw NotAssessable("eod: attribute " + std::string(to_string(attribute)) +
                            " has fewer than 2 subgroups");
    std::vector<AuConfusion> confusions;
    confusions.reserve(groups.size());
    for (const auto& [code, members] : groups)
        confusions.push_back(scoped_confusion(dataset, predictions, members));

    const std::size_t m = dataset.cardinality();
    EodResult result;
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t au = 0; au < m; ++au) {
        double lo = 1.0;
        double hi = 0.0;
        std::size_t defined = 0;
        for (const auto& confusion : confusions) {
            const auto rate = tpr(confusion, au);
            if (!rate) continue;
            lo = std::min(lo, *rate);
            hi = std::max(hi, *rate);
            ++defined;
        }
        if (defined < 2) {
            result.skipped_aus.push_back(au);
            continue;
        }
        sum += hi - lo;
        ++counted;
    }
    if (counted == 0)
        throw NotAssessable("eod: no AU has a defined TPR in at least 2 subgroups");
    result.value = sum / static_cast<double>(counted);
    return result;
}

double eod(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute) {
    return eod_detail(dataset, predictions, attribute).value;
}

double selection_rate(const Dataset& dataset, const PredictionSet& predictions,
                      std::span<const std::size_t> subgroup, std::size_t au) {
    if (subgroup.empty()) throw Error("selection_rate: empty subgroup");
    if (au >= dataset.cardinality()) throw Error("selection_rate: AU index out of range");
    std::int64_t active = 0;
    for (std::size_t i : subgroup) {
        const Sample& sample = dataset.samples()[i];
        const TaskLabel* predicted = predictions.find(sample.sample_id);
        if (predicted == nullptr)
            throw Error("missing prediction for sample " + sample.sample_id);
        if (std::get<AuLabel>(*predicted).active[au] != 0) ++active;
    }
    return static_cast<double>(active) / static_cast<double>(subgroup.size());
}

double dpd(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute) {
    const auto groups = subgroup_index(dataset, attribute);
    if (groups.size() < 2)
        throw NotAssessable("dpd: attribute " + std::string(to_string(attribute)) +
                            " has fewer than 2 subgroups");
    const std::size_t m = dataset.cardinality();
    if (m == 0) throw Error("dpd: dataset has no AUs");
    double sum = 0.0;
    for (std::size_t au = 0; au < m; ++au) {
        double lo = 1.0;
        double hi = 0.0;
        for (const auto& [code, members] : groups) {
            const double rate = selection_rate(dataset, predictions, members, au);
            lo = std::min(lo, rate);
            hi = std::max(hi, rate);
        }
        sum += hi - lo;
    }
    return sum / static_cast<double>(m);
}

}  // namespace fairaffect
