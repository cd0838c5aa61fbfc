#include "fairaffect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fairaffect/detail/rng.hpp"
#include "fairaffect/partition.hpp"

namespace fairaffect {

namespace {

using detail::fnv1a;
using detail::keyed_unit;

// independent draw streams; dataset and prediction streams must not overlap
enum Stream : std::uint64_t {
    kSize = 1,
    kRace = 2,
    kAge = 3,
    kGender = 4,
    kLabel = 5,
    kVaPosV = 6,
    kVaPosA = 7,
    kAuBase = 100,

    kPredHit = 50,
    kPredAlt = 51,
    kPredBias = 52,
    kPredNoiseV1 = 60,
    kPredNoiseV2 = 61,
    kPredNoiseA1 = 62,
    kPredNoiseA2 = 63,
    kPredAuBase = 1000,
};

std::vector<double> normalized(std::vector<double> weights, std::size_t expected,
                               const char* what) {
    if (weights.size() != expected)
        throw Error(std::string("synth: ") + what + " marginal must have " +
                    std::to_string(expected) + " entries");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw Error(std::string("synth: negative weight in ") + what);
        sum += w;
    }
    if (sum <= 0.0) throw Error(std::string("synth: ") + what + " marginal sums to zero");
    for (double& w : weights) w /= sum;
    return weights;
}

std::size_t categorical(const std::vector<double>& probabilities, double u) {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        cumulative += probabilities[i];
        if (u < cumulative) return i;
    }
    return probabilities.size() - 1;
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double offset_sum(const std::map<std::pair<Attribute, int>, double>& offsets,
                  const Demographics& demographics) {
    double sum = 0.0;
    for (Attribute attribute : all_attributes()) {
        const auto it = offsets.find({attribute, subgroup_code(demographics, attribute)});
        if (it != offsets.end()) sum += it->second;
    }
    return sum;
}

std::vector<double> default_race() { return {0.45, 0.25, 0.20, 0.0, 0.10}; }
std::vector<double> default_age() {
    return {0.05, 0.08, 0.12, 0.20, 0.18, 0.14, 0.10, 0.08, 0.05};
}
std::vector<double> default_gender() { return {0.49, 0.49, 0.02}; }

std::vector<double> default_expr_marginal(std::size_t classes) {
    std::vector<double> weights(classes);
    double w = 1.0;
    for (std::size_t c = 0; c < classes; ++c, w *= 0.75) weights[c] = w;
    return weights;
}

std::vector<double> default_au_activation(std::size_t aus) {
    std::vector<double> probs(aus);
    for (std::size_t m = 0; m < aus; ++m)
        probs[m] = 0.2 + 0.4 * (static_cast<double>(m) + 0.5) / static_cast<double>(aus);
    return probs;
}

// bell-shaped weight over the VA grid, peaked at the origin
std::vector<double> default_va_region_weights(int bins) {
    std::vector<double> weights(static_cast<std::size_t>(bins) * bins);
    for (int iv = 0; iv < bins; ++iv) {
        for (int ia = 0; ia < bins; ++ia) {
            const double cv = -1.0 + (iv + 0.5) * 2.0 / bins;
            const double ca = -1.0 + (ia + 0.5) * 2.0 / bins;
            weights[static_cast<std::size_t>(iv) * bins + ia] =
                std::exp(-(cv * cv + ca * ca) / 0.5);
        }
    }
    return weights;
}

double gaussian(double u1, double u2) {
    // Box-Muller; u1 shifted away from zero
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

void validate_common(const SynthSpec& spec) {
    if (spec.subjects == 0) throw Error("synth: infeasible spec (zero subjects)");
    if (spec.samples_per_subject_min == 0 ||
        spec.samples_per_subject_min > spec.samples_per_subject_max)
        throw Error("synth: invalid samples-per-subject range");
    for (const auto& offsets : {spec.accuracy_offsets, spec.selection_offsets})
        for (const auto& [key, value] : offsets)
            if (std::abs(value) > 1.0) throw Error("synth: offset magnitude above 1");
}

}  // namespace

Dataset generate_dataset(const SynthSpec& spec, Task task) {
    validate_common(spec);
    const auto race = normalized(spec.race_marginal.empty() ? default_race()
                                                            : spec.race_marginal,
                                 kRaceCount, "race");
    const auto age = normalized(spec.age_marginal.empty() ? default_age() : spec.age_marginal,
                                kAgeGroupCount, "age");
    const auto gender = normalized(spec.gender_marginal.empty() ? default_gender()
                                                                : spec.gender_marginal,
                                   kGenderCount, "gender");

    std::vector<double> label;
    std::vector<double> au_activation;
    int va_bins = 0;
    switch (task) {
        case Task::Expr:
            if (spec.num_classes == 0) throw Error("synth: num_classes must be positive");
            label = normalized(spec.label_marginal.empty()
                                   ? default_expr_marginal(spec.num_classes)
                                   : spec.label_marginal,
                               spec.num_classes, "label");
            break;
        case Task::Au: {
            if (spec.num_aus == 0) throw Error("synth: num_aus must be positive");
            au_activation = spec.label_marginal.empty() ? default_au_activation(spec.num_aus)
                                                        : spec.label_marginal;
            if (au_activation.size() != spec.num_aus)
                throw Error("synth: label marginal must have one activation prob per AU");
            for (double p : au_activation)
                if (p < 0.0 || p > 1.0)
                    throw Error("synth: AU activation prob outside [0, 1]");
            break;
        }
        case Task::Va:
            va_bins = va_bins_per_axis(spec.va_bin_width);
            label = normalized(spec.label_marginal.empty()
                                   ? default_va_region_weights(va_bins)
                                   : spec.label_marginal,
                               static_cast<std::size_t>(va_bins) * va_bins, "va region");
            break;
    }

    const std::size_t span = spec.samples_per_subject_max - spec.samples_per_subject_min + 1;
    std::vector<Sample> samples;
    samples.reserve(spec.subjects * spec.samples_per_subject_max);

    for (std::size_t s = 0; s < spec.subjects; ++s) {
        char subject_id[32];
        std::snprintf(subject_id, sizeof(subject_id), "subj_%05zu", s);
        const std::uint64_t h = fnv1a(subject_id);

        const std::size_t count =
            spec.samples_per_subject_min +
            static_cast<std::size_t>(keyed_unit(spec.seed, h, 0, kSize) *
                                     static_cast<double>(span));
        Demographics demographics{
            static_cast<AgeGroup>(categorical(age, keyed_unit(spec.seed, h, 0, kAge))),
            static_cast<Gender>(categorical(gender, keyed_unit(spec.seed, h, 0, kGender))),
            static_cast<Race>(categorical(race, keyed_unit(spec.seed, h, 0, kRace)))};

        for (std::size_t k = 0; k < count; ++k) {
            Sample sample;
            char sample_id[48];
            std::snprintf(sample_id, sizeof(sample_id), "%s_%04zu", subject_id, k);
            sample.sample_id = sample_id;
            sample.subject_id = subject_id;
            sample.demographics = demographics;

            const std::uint64_t ordinal = k + 1;
            switch (task) {
                case Task::Expr:
                    sample.label = ExprLabel{static_cast<int>(
                        categorical(label, keyed_unit(spec.seed, h, ordinal, kLabel)))};
                    break;
                case Task::Au: {
                    AuLabel au;
                    au.active.resize(spec.num_aus);
                    for (std::size_t m = 0; m < spec.num_aus; ++m)
                        au.active[m] =
                            keyed_unit(spec.seed, h, ordinal, kAuBase + m) < au_activation[m]
                                ? 1
                                : 0;
                    sample.label = std::move(au);
                    break;
                }
                case Task::Va: {
                    const auto region = static_cast<int>(
                        categorical(label, keyed_unit(spec.seed, h, ordinal, kLabel)));
                    const int iv = region / va_bins;
                    const int ia = region % va_bins;
                    const double w = spec.va_bin_width;
                    const double v =
                        -1.0 + (iv + keyed_unit(spec.seed, h, ordinal, kVaPosV)) * w;
                    const double a =
                        -1.0 + (ia + keyed_unit(spec.seed, h, ordinal, kVaPosA)) * w;
                    sample.label = VaLabel{std::clamp(v, -1.0, 1.0), std::clamp(a, -1.0, 1.0)};
                    break;
                }
            }
            samples.push_back(std::move(sample));
        }
    }

    std::vector<std::string> vocabulary;
    if (task == Task::Expr)
        for (std::size_t c = 0; c < spec.num_classes; ++c)
            vocabulary.push_back("class_" + std::to_string(c));
    if (task == Task::Au)
        for (std::size_t m = 0; m < spec.num_aus; ++m)
            vocabulary.push_back("au_" + std::to_string(m + 1));
    return Dataset::make(task, std::move(samples), std::move(vocabulary));
}

PredictionSet generate_predictions(const Dataset& dataset, const SynthSpec& spec) {
    validate_common(spec);
    StringMap<TaskLabel> entries;
    entries.reserve(dataset.size());
    const std::size_t classes = dataset.cardinality();

    for (const Sample& sample : dataset.samples()) {
        if (spec.perfect_copy) {
            entries.emplace(sample.sample_id, sample.label);
            continue;
        }
        const std::uint64_t h = fnv1a(sample.sample_id);
        const double accuracy_shift = offset_sum(spec.accuracy_offsets, sample.demographics);
        const double selection_shift = offset_sum(spec.selection_offsets, sample.demographics);

        switch (dataset.task()) {
            case Task::Expr: {
                const int truth = std::get<ExprLabel>(sample.label).cls;
                int predicted;
                if (selection_shift > 0.0 &&
                    keyed_unit(spec.seed, h, 0, kPredBias) < clamp01(selection_shift)) {
                    predicted = 0;
                } else if (classes <= 1 ||
                           keyed_unit(spec.seed, h, 0, kPredHit) <
                               clamp01(spec.base_accuracy + accuracy_shift)) {
                    predicted = truth;
                } else {
                    const auto other = static_cast<int>(
                        keyed_unit(spec.seed, h, 0, kPredAlt) *
                        static_cast<double>(classes - 1));
                    predicted = other >= truth ? other + 1 : other;
                }
                entries.emplace(sample.sample_id, ExprLabel{predicted});
                break;
            }
            case Task::Au: {
                const auto& truth = std::get<AuLabel>(sample.label).active;
                AuLabel predicted;
                predicted.active.resize(truth.size());
                const double tpr = clamp01(spec.base_tpr + accuracy_shift);
                const double fpr = clamp01(spec.base_fpr + selection_shift);
                for (std::size_t m = 0; m < truth.size(); ++m) {
                    const double u = keyed_unit(spec.seed, h, 0, kPredAuBase + m);
                    predicted.active[m] = (truth[m] != 0 ? u < tpr : u < fpr) ? 1 : 0;
                }
                entries.emplace(sample.sample_id, std::move(predicted));
                break;
            }
            case Task::Va: {
                const auto& truth = std::get<VaLabel>(sample.label);
                const double sigma = std::max(0.0, spec.noise_sigma - accuracy_shift);
                const double zv = gaussian(keyed_unit(spec.seed, h, 0, kPredNoiseV1),
                                           keyed_unit(spec.seed, h, 0, kPredNoiseV2));
                const double za = gaussian(keyed_unit(spec.seed, h, 0, kPredNoiseA1),
                                           keyed_unit(spec.seed, h, 0, kPredNoiseA2));
                entries.emplace(sample.sample_id,
                                VaLabel{std::clamp(truth.valence + sigma * zv, -1.0, 1.0),
                                        std::clamp(truth.arousal + sigma * za, -1.0, 1.0)});
                break;
            }
        }
    }
    return PredictionSet(dataset.task(), std::move(entries));
}

}  // namespace fairaffect
