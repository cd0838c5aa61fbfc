#include "fairaffect/metrics_va.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace fairaffect {

namespace {

// Neumaier-compensated accumulator; keeps long sums deterministic and
// accurate without a pairwise tree.
class CompensatedSum {
  public:
    void add(double value) {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value))
            c_ += (sum_ - t) + value;
        else
            c_ += (value - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + c_; }

  private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

struct VaSeries {
    std::vector<double> truth_v, truth_a, pred_v, pred_a;
};

VaSeries va_series(const Dataset& dataset, const PredictionSet& predictions,
                   std::span<const std::size_t> scope) {
    if (predictions.task() != Task::Va || dataset.task() != Task::Va)
        throw Error("VA metrics require a va dataset and predictions");
    VaSeries s;
    s.truth_v.reserve(scope.size());
    s.truth_a.reserve(scope.size());
    s.pred_v.reserve(scope.size());
    s.pred_a.reserve(scope.size());
    for (std::size_t i : scope) {
        const Sample& sample = dataset.samples()[i];
        const TaskLabel* predicted = predictions.find(sample.sample_id);
        if (predicted == nullptr)
            throw Error("missing prediction for sample " + sample.sample_id);
        const auto& t = std::get<VaLabel>(sample.label);
        const auto& p = std::get<VaLabel>(*predicted);
        s.truth_v.push_back(t.valence);
        s.truth_a.push_back(t.arousal);
        s.pred_v.push_back(p.valence);
        s.pred_a.push_back(p.arousal);
    }
    return s;
}

}  // namespace

double ccc(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) throw Error("ccc: series lengths differ");
    const std::size_t n = truth.size();
    if (n < 2) throw DegenerateSeries("ccc: need at least 2 points");

    CompensatedSum sum_x, sum_y;
    for (std::size_t i = 0; i < n; ++i) {
        sum_x.add(truth[i]);
        sum_y.add(pred[i]);
    }
    const double mean_x = sum_x.value() / static_cast<double>(n);
    const double mean_y = sum_y.value() / static_cast<double>(n);

    CompensatedSum var_x, var_y, cov;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = truth[i] - mean_x;
        const double dy = pred[i] - mean_y;
        var_x.add(dx * dx);
        var_y.add(dy * dy);
        cov.add(dx * dy);
    }
    const double sx2 = var_x.value() / static_cast<double>(n);
    const double sy2 = var_y.value() / static_cast<double>(n);
    const double sxy = cov.value() / static_cast<double>(n);
    const double bias = (mean_x - mean_y) * (mean_x - mean_y);
    const double denom = sx2 + sy2 + bias;
    if (denom == 0.0)
        throw DegenerateSeries("ccc: degenerate pair (constant series, equal means)");
    return 2.0 * sxy / denom;
}

GlobalCcc global_ccc_va(const Dataset& dataset, const PredictionSet& predictions,
                        std::span<const std::size_t> scope) {
    const VaSeries s = va_series(dataset, predictions, scope);
    GlobalCcc out;
    out.valence = ccc(s.truth_v, s.pred_v);
    out.arousal = ccc(s.truth_a, s.pred_a);
    out.mean = 0.5 * (out.valence + out.arousal);
    return out;
}

GlobalCcc global_ccc_va(const Dataset& dataset, const PredictionSet& predictions) {
    std::vector<std::size_t> scope(dataset.size());
    std::iota(scope.begin(), scope.end(), 0);
    return global_ccc_va(dataset, predictions, scope);
}

LocalCcc local_ccc_va_detail(const Dataset& dataset, const PredictionSet& predictions,
                             Attribute attribute) {
    const auto groups = subgroup_index(dataset, attribute);
    if (groups.empty())
        throw NotAssessable("local_ccc_va: no admitted subgroups for attribute " +
                            std::string(to_string(attribute)));
    LocalCcc out;
    double sum_v = 0.0;
    double sum_a = 0.0;
    std::size_t kept = 0;
    for (const auto& [code, members] : groups) {
        if (members.size() < 2) {
            out.skipped_subgroups.push_back(code);
            continue;
        }
        const VaSeries s = va_series(dataset, predictions, members);
        double v, a;
        try {
            v = ccc(s.truth_v, s.pred_v);
            a = ccc(s.truth_a, s.pred_a);
        } catch (const DegenerateSeries&) {
            out.skipped_subgroups.push_back(code);
            continue;
        }
        sum_v += v;
        sum_a += a;
        ++kept;
    }
    if (kept == 0)
        throw NotAssessable("local_ccc_va: every subgroup of attribute " +
                            std::string(to_string(attribute)) + " is degenerate");
    out.valence = sum_v / static_cast<double>(kept);
    out.arousal = sum_a / static_cast<double>(kept);
    out.mean = 0.5 * (out.valence + out.arousal);
    return out;
}

double local_ccc_va(const Dataset& dataset, const PredictionSet& predictions,
                    Attribute attribute) {
    return local_ccc_va_detail(dataset, predictions, attribute).mean;
}

}  // namespace fairaffect
