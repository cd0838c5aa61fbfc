// Small builders for in-memory datasets and predictions used across the
// test suites.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fairaffect/types.hpp"

namespace testutil {

using namespace fairaffect;

inline std::string sample_name(std::size_t i) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "s%04zu", i);
    return buffer;
}

struct DemoPlan {
    std::vector<int> race;    // per-sample codes; empty = all 0
    std::vector<int> gender;  // empty = all Female
    std::vector<int> age;     // empty = all From20To29
    std::vector<std::string> subject;  // empty = one subject per sample

    Demographics demographics(std::size_t i) const {
        Demographics d;
        d.race = static_cast<Race>(race.empty() ? 0 : race[i]);
        d.gender = static_cast<Gender>(gender.empty() ? 0 : gender[i]);
        d.age = static_cast<AgeGroup>(age.empty() ? 3 : age[i]);
        return d;
    }
    std::string subject_of(std::size_t i) const {
        return subject.empty() ? sample_name(i) : subject[i];
    }
};

inline Dataset make_expr(const std::vector<int>& truth, int classes,
                         const DemoPlan& plan = {}) {
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < truth.size(); ++i)
        samples.push_back({sample_name(i), plan.subject_of(i), plan.demographics(i),
                           ExprLabel{truth[i]}});
    std::vector<std::string> vocabulary;
    for (int c = 0; c < classes; ++c) vocabulary.push_back("class_" + std::to_string(c));
    return Dataset::make(Task::Expr, std::move(samples), std::move(vocabulary));
}

inline PredictionSet make_expr_preds(const std::vector<int>& pred) {
    StringMap<TaskLabel> entries;
    for (std::size_t i = 0; i < pred.size(); ++i)
        entries.emplace(sample_name(i), ExprLabel{pred[i]});
    return PredictionSet(Task::Expr, std::move(entries));
}

using BitMatrix = std::vector<std::vector<std::uint8_t>>;

inline Dataset make_au(const BitMatrix& truth, const DemoPlan& plan = {}) {
    std::vector<Sample> samples;
    const std::size_t aus = truth.empty() ? 0 : truth.front().size();
    for (std::size_t i = 0; i < truth.size(); ++i)
        samples.push_back({sample_name(i), plan.subject_of(i), plan.demographics(i),
                           AuLabel{truth[i]}});
    std::vector<std::string> vocabulary;
    for (std::size_t m = 0; m < aus; ++m) vocabulary.push_back("au_" + std::to_string(m + 1));
    return Dataset::make(Task::Au, std::move(samples), std::move(vocabulary));
}

inline PredictionSet make_au_preds(const BitMatrix& pred) {
    StringMap<TaskLabel> entries;
    for (std::size_t i = 0; i < pred.size(); ++i)
        entries.emplace(sample_name(i), AuLabel{pred[i]});
    return PredictionSet(Task::Au, std::move(entries));
}

inline Dataset make_va(const std::vector<std::pair<double, double>>& truth,
                       const DemoPlan& plan = {}) {
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < truth.size(); ++i)
        samples.push_back({sample_name(i), plan.subject_of(i), plan.demographics(i),
                           VaLabel{truth[i].first, truth[i].second}});
    return Dataset::make(Task::Va, std::move(samples), {});
}

inline PredictionSet make_va_preds(const std::vector<std::pair<double, double>>& pred) {
    StringMap<TaskLabel> entries;
    for (std::size_t i = 0; i < pred.size(); ++i)
        entries.emplace(sample_name(i), VaLabel{pred[i].first, pred[i].second});
    return PredictionSet(Task::Va, std::move(entries));
}

inline std::vector<std::size_t> all_indices(const Dataset& dataset) {
    std::vector<std::size_t> indices(dataset.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    return indices;
}

}  // namespace testutil
