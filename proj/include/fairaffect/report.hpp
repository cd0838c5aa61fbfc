#pragma once

#include <map>
#include <string>

#include "fairaffect/types.hpp"

namespace fairaffect {

/// Computes the full metric suite for one task over an already-scoped
/// dataset: the global metric(s), and per demographic attribute the local
/// metric plus both disparity metrics (flagged against the fairness
/// threshold). Attributes that cannot be assessed are reported as
/// warnings. Throws when predictions do not cover every sample, listing
/// the missing ids.
MetricReport build_report(const Dataset& dataset, const PredictionSet& predictions,
                          std::map<std::string, std::string> metadata = {});

/// Restricts a dataset to the samples the partition assigns to `split`.
/// Samples missing from the partition raise an error.
Dataset select_split(const Dataset& dataset, const Partition& partition, Split split);

}  // namespace fairaffect
