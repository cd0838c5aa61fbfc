#pragma once

#include <span>
#include <vector>

#include "fairaffect/types.hpp"

namespace fairaffect {

/// Thrown when CCC is undefined for a pair of series.
class DegenerateSeries : public Error {
  public:
    using Error::Error;
};

/// Concordance correlation coefficient using population moments
/// (divide by n). Throws DegenerateSeries on n < 2 or when the denominator
/// vanishes (both series constant with equal means).
double ccc(std::span<const double> truth, std::span<const double> pred);

struct GlobalCcc {
    double valence = 0.0;
    double arousal = 0.0;
    double mean = 0.0;
};

GlobalCcc global_ccc_va(const Dataset& dataset, const PredictionSet& predictions,
                        std::span<const std::size_t> scope);
GlobalCcc global_ccc_va(const Dataset& dataset, const PredictionSet& predictions);

struct LocalCcc {
    double valence = 0.0;  // mean CCC^V over admitted subgroups
    double arousal = 0.0;
    double mean = 0.0;     // (valence + arousal) / 2
    std::vector<int> skipped_subgroups;  // degenerate in either dimension
};

/// Mean per-subgroup CCC, both dimensions. Degenerate subgroups (n < 2 or
/// vanishing denominator in either dimension) are skipped and the divisor
/// adjusted; throws NotAssessable when every subgroup is degenerate.
LocalCcc local_ccc_va_detail(const Dataset& dataset, const PredictionSet& predictions,
                             Attribute attribute);
double local_ccc_va(const Dataset& dataset, const PredictionSet& predictions,
                    Attribute attribute);

}  // namespace fairaffect
