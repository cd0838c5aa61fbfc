#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "fairaffect/types.hpp"

namespace fairaffect {

/// Synthetic dataset + prediction generator used by property tests and
/// acceptance runs. Draws are keyed by (seed, subject, sample ordinal,
/// stream), so generation order never affects the output.
struct SynthSpec {
    std::size_t subjects = 100;
    std::size_t samples_per_subject_min = 1;
    std::size_t samples_per_subject_max = 1;

    std::size_t num_classes = 7;  // expr
    std::size_t num_aus = 4;      // au

    // marginal targets; empty means uniform (or the task default)
    std::vector<double> label_marginal;   // expr class weights | per-AU activation prob
    std::vector<double> race_marginal;    // 5 entries
    std::vector<double> age_marginal;     // 9 entries
    std::vector<double> gender_marginal;  // 3 entries

    // prediction behavior
    double base_accuracy = 0.9;  // expr: chance of predicting the true class
    double base_tpr = 0.8;       // au
    double base_fpr = 0.05;      // au
    double noise_sigma = 0.3;    // va prediction noise
    bool perfect_copy = false;   // predictions equal to truth

    // per-subgroup offsets; (attribute, subgroup code) -> additive offset
    std::map<std::pair<Attribute, int>, double> accuracy_offsets;   // accuracy / TPR
    std::map<std::pair<Attribute, int>, double> selection_offsets;  // FPR / class-0 bias

    std::uint64_t seed = 0;
    double va_bin_width = 0.2;  // VA truth is drawn per region, then uniform inside
};

Dataset generate_dataset(const SynthSpec& spec, Task task);
PredictionSet generate_predictions(const Dataset& dataset, const SynthSpec& spec);

}  // namespace fairaffect
