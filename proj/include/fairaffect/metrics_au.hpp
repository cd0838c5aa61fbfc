#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fairaffect/types.hpp"

namespace fairaffect {

/// Per-AU binary tallies; TP+FP+FN+TN equals the scored sample count for
/// every AU.
struct AuConfusion {
    std::vector<std::int64_t> tp;
    std::vector<std::int64_t> fp;
    std::vector<std::int64_t> fn;
    std::vector<std::int64_t> tn;

    std::size_t aus() const { return tp.size(); }
};

using AuBits = std::vector<std::uint8_t>;

AuConfusion au_confusion(std::span<const AuBits> truth, std::span<const AuBits> pred);

/// Binary F1 per AU (positive class = activation); nullopt when the AU has
/// no support in either truth or prediction.
std::vector<std::optional<double>> f1_per_au(const AuConfusion& confusion);

/// True positive rate for one AU; nullopt when the AU has no positive
/// ground truth.
std::optional<double> tpr(const AuConfusion& confusion, std::size_t au);

/// Maps an annotation intensity in 0..5 to an activation bit (>0 is active).
std::uint8_t intensity_to_activation(int intensity);

double global_f1_au(const Dataset& dataset, const PredictionSet& predictions,
                    std::span<const std::size_t> scope);
double global_f1_au(const Dataset& dataset, const PredictionSet& predictions);

struct LocalF1Au {
    double value = 0.0;
    // subgroups with no AU support in truth or prediction; excluded from the mean
    std::vector<int> skipped_subgroups;
};

LocalF1Au local_f1_au_detail(const Dataset& dataset, const PredictionSet& predictions,
                             Attribute attribute);
double local_f1_au(const Dataset& dataset, const PredictionSet& predictions,
                   Attribute attribute);

struct EodResult {
    double value = 0.0;
    // AUs lacking two subgroups with defined TPR; excluded from the mean.
    std::vector<std::size_t> skipped_aus;
};

/// Equal opportunity difference: mean over AUs of the TPR spread
/// (max - min) across subgroups. AUs with fewer than two defined subgroup
/// TPRs are skipped and the divisor adjusted; throws NotAssessable when
/// nothing remains.
EodResult eod_detail(const Dataset& dataset, const PredictionSet& predictions,
                     Attribute attribute);
double eod(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute);

/// Fraction of subgroup samples with a predicted activation for `au`.
double selection_rate(const Dataset& dataset, const PredictionSet& predictions,
                      std::span<const std::size_t> subgroup, std::size_t au);

/// Demographic parity difference: mean over all M AUs of the selection-rate
/// spread across subgroups.
double dpd(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute);

}  // namespace fairaffect
