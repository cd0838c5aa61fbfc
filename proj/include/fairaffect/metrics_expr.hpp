#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fairaffect/types.hpp"

namespace fairaffect {

/// Row-normalized confusion matrix. Rows without support are flagged
/// undefined and left all-zero.
struct ErrorRateMatrix {
    std::size_t classes = 0;
    std::vector<double> rates;       // classes x classes, row-major
    std::vector<bool> row_defined;   // per row

    double at(std::size_t row, std::size_t col) const { return rates[row * classes + col]; }
};

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> pred,
                                 std::size_t num_classes);

/// Per-class F1 = 2*TP / (2*TP + FP + FN). A class with no support in
/// either truth or prediction yields nullopt rather than zero.
std::vector<std::optional<double>> f1_per_class(const ConfusionMatrix& cm);

/// Mean of the defined per-class F1 scores. Throws if none is defined.
double macro_f1(const ConfusionMatrix& cm);

ErrorRateMatrix normalize_confusion(const ConfusionMatrix& cm);

/// Mean absolute deviation between two equally sized error-rate matrices.
/// Rows undefined in either matrix contribute zero; the divisor stays C^2.
double mad_matrices(const ErrorRateMatrix& a, const ErrorRateMatrix& b);

/// Fraction of the subgroup predicted as each class; sums to 1.
std::vector<double> success_rates(const Dataset& dataset, const PredictionSet& predictions,
                                  std::span<const std::size_t> subgroup);

double global_f1_expr(const Dataset& dataset, const PredictionSet& predictions,
                      std::span<const std::size_t> scope);
double global_f1_expr(const Dataset& dataset, const PredictionSet& predictions);

/// Two-level mean: macro-F1 within each subgroup, then across subgroups.
double local_f1_expr(const Dataset& dataset, const PredictionSet& predictions,
                     Attribute attribute);

/// Equality of opportunity: mean pairwise MAD between subgroup error-rate
/// matrices. Throws NotAssessable with fewer than two subgroups.
double eop(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute);

/// Statistical parity: mean pairwise MAD between subgroup success-rate
/// vectors. Throws NotAssessable with fewer than two subgroups.
double sp(const Dataset& dataset, const PredictionSet& predictions, Attribute attribute);

}  // namespace fairaffect
