#include "fairaffect/metrics_expr.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace fairaffect {

namespace {

// Gathers aligned (truth, prediction) class vectors for the scoped samples.
std::pair<std::vector<int>, std::vector<int>> expr_pairs(const Dataset& dataset,
                                                         const PredictionSet& predictions,
                                                         std::span<const std::size_t> scope) {
    if (predictions.task() != Task::Expr || dataset.task() != Task::Expr)
        throw Error("expression metrics require an expr dataset and predictions");
    std::vector<int> truth;
    std::vector<int> pred;
    truth.reserve(scope.size());
    pred.reserve(scope.size());
    for (std::size_t i : scope) {
        const Sample& sample = dataset.samples()[i];
        const TaskLabel* predicted = predictions.find(sample.sample_id);
        if (predicted == nullptr)
            throw Error("missing prediction for sample " + sample.sample_id);
        truth.push_back(std::get<ExprLabel>(sample.label).cls);
        pred.push_back(std::get<ExprLabel>(*predicted).cls);
    }
    return {std::move(truth), std::move(pred)};
}

std::vector<std::size_t> full_scope(const Dataset& dataset) {
    std::vector<std::size_t> scope(dataset.size());
    std::iota(scope.begin(), scope.end(), 0);
    return scope;
}

ConfusionMatrix scoped_confusion(const Dataset& dataset, const PredictionSet& predictions,
                                 std::span<const std::size_t> scope) {
    auto [truth, pred] = expr_pairs(dataset, predictions, scope);
    return confusion_matrix(truth, pred, dataset.cardinality());
}

double mean_pairwise(const std::vector<double>& pair_values) {
    double sum = 0.0;
    for (double v : pair_values) sum += v;
    return sum / static_cast<double>(pair_values.size());
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> pred,
                                 std::size_t num_classes) {
    if (truth.size() != pred.size())
        throw Error("confusion_matrix: truth and prediction lengths differ");
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || pred[i] < 0 ||
            static_cast<std::size_t>(truth[i]) >= num_classes ||
            static_cast<std::size_t>(pred[i]) >= num_classes)
            throw Error("confusion_matrix: class index out of range at position " +
                        std::to_string(i));
        cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(pred[i]));
    }
    return cm;
}

std::vector<std::optional<double>> f1_per_class(const ConfusionMatrix& cm) {
    const std::size_t n = cm.classes();
    std::vector<std::optional<double>> out(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::int64_t tp = cm.at(c, c);
        std::int64_t fp = 0;
        std::int64_t fn = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == c) continue;
            fp += cm.at(k, c);
            fn += cm.at(c, k);
        }
        if (tp + fp + fn == 0) continue;  // class absent from truth and prediction
        out[c] = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    }
    return out;
}

double macro_f1(const ConfusionMatrix& cm) {
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& f1 : f1_per_class(cm)) {
        if (!f1) continue;
        sum += *f1;
        ++defined;
    }
    if (defined == 0) throw Error("macro_f1: no class with support");
    return sum / static_cast<double>(defined);
}

ErrorRateMatrix normalize_confusion(const ConfusionMatrix& cm) {
    const std::size_t n = cm.classes();
    ErrorRateMatrix out;
    out.classes = n;
    out.rates.assign(n * n, 0.0);
    out.row_defined.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::int64_t row_sum = 0;
        for (std::size_t j = 0; j < n; ++j) row_sum += cm.at(i, j);
        if (row_sum == 0) continue;
        out.row_defined[i] = true;
        for (std::size_t j = 0; j < n; ++j)
            out.rates[i * n + j] =
                static_cast<double>(cm.at(i, j)) / static_cast<double>(row_sum);
    }
    return out;
}

double mad_matrices(const ErrorRateMatrix& a, const ErrorRateMatrix& b) {
    if (a.classes != b.classes) throw Error("mad_matrices: dimension mismatch");
    const std::size_t n = a.classes;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!a.row_defined[i] || !b.row_defined[i]) continue;
        for (std::size_t j = 0; j < n; ++j) sum += std::abs(a.at(i, j) - b.at(i, j));
    }
    return sum / static_cast<double>(n * n);
}

std::vector<double> success_rates(const Dataset& dataset, const PredictionSet& predictions,
                                  std::span<const std::size_t> subgroup) {
    if (subgroup.empty()) throw Error("success_rates: empty subgroup");
    auto [truth, pred] = expr_pairs(dataset, predictions, subgroup);
    (void)truth;
    std::vector<double> rates(dataset.cardinality(), 0.0);
    for (int p : pred) rates[static_cast<std::size_t>(p)] += 1.0;
    for (double& r : rates) r /= static_cast<double>(pred.size());
    return rates;
}

double global_f1_expr(const Dataset& dataset, const PredictionSet& predictions,
                      std::span<const std::size_t> scope) {
    if (scope.empty()) throw Error("global_f1_expr: empty scope");
    return macro_f1(scoped_confusion(dataset, predictions, scope));
}

double global_f1_expr(const Dataset& dataset, const PredictionSet& predictions) {
    const auto scope = full_scope(dataset);
    return global_f1_expr(dataset, predictions, scope);
}

double local_f1_expr(const Dataset& dataset, const PredictionSet& predictions,
                     Attribute attribute) {
    const auto groups = subgroup_index(dataset, attribute);
    if (groups.empty())
        throw NotAssessable("local_f1_expr: no admitted subgroups for attribute " +
                            std::string(to_string(attribute)));
    double sum = 0.0;
    for (const auto& [code, members] : groups)
        sum += macro_f1(scoped_confusion(dataset, predictions, members));
    return sum / static_cast<double>(groups.size());
}

double eop(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute) {
    const auto groups = subgroup_index(dataset, attribute);
    if (groups.size() < 2)
        throw NotAssessable("eop: attribute " + std::string(to_string(attribute)) +
                            " has fewer than 2 subgroups");
    std::vector<ErrorRateMatrix> normalized;
    normalized.reserve(groups.size());
    for (const auto& [code, members] : groups)
        normalized.push_back(normalize_confusion(scoped_confusion(dataset, predictions, members)));

    std::vector<double> pair_values;
    for (std::size_t g = 0; g < normalized.size(); ++g)
        for (std::size_t h = g + 1; h < normalized.size(); ++h)
            pair_values.push_back(mad_matrices(normalized[g], normalized[h]));
    return mean_pairwise(pair_values);
}

double sp(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute) {
    const auto groups = subgroup_index(dataset, attribute);
    if (groups.size() < 2)
        throw NotAssessable("sp: attribute " + std::string(to_string(attribute)) +
                            " has fewer than 2 subgroups");
    const std::size_t num_classes = dataset.cardinality();
    std::vector<std::vector<double>> rates;
    rates.reserve(groups.size());
    for (const auto& [code, members] : groups)
        rates.push_back(success_rates(dataset, predictions, members));

    std::vector<double> pair_values;
    for (std::size_t g = 0; g < rates.size(); ++g) {
        for (std::size_t h = g + 1; h < rates.size(); ++h) {
            double sum = 0.0;
            for (std::size_t c = 0; c < num_classes; ++c)
                sum += std::abs(rates[g][c] - rates[h][c]);
            pair_values.push_back(sum / static_cast<double>(num_classes));
        }
    }
    return mean_pairwise(pair_values);
}

}  // namespace fairaffect
