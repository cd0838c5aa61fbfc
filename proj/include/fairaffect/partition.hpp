#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairaffect/types.hpp"

namespace fairaffect {

/// 2D valence-arousal grid cell. Bins are half-open [lo, lo+w) except the
/// top bin, which absorbs the upper boundary.
struct VaRegion {
    int valence_bin = 0;
    int arousal_bin = 0;

    auto operator<=>(const VaRegion&) const = default;
};

VaRegion va_region(double valence, double arousal, double bin_width);
/// Number of bins per axis for a given width (2/w must be integral).
int va_bins_per_axis(double bin_width);

struct StratifyConfig {
    double bin_width = 0.2;        // VA region edge length
    double au_rare_floor = 0.01;   // AU patterns below this sample share merge into "other"
};

/// Maps task labels to dense stratum ids. For AU datasets the mapping
/// depends on pattern frequencies, so it is built once per dataset.
class StratumTable {
  public:
    static StratumTable build(const Dataset& dataset, const StratifyConfig& config = {});

    int stratum_of(const TaskLabel& label) const;
    std::size_t count() const { return count_; }
    std::string name(int stratum) const;

  private:
    Task task_ = Task::Expr;
    StratifyConfig config_;
    std::size_t count_ = 0;
    int va_bins_ = 0;
    std::map<std::vector<std::uint8_t>, int> au_patterns_;  // frequent patterns only
    int au_other_ = -1;                                     // -1 when every pattern is frequent
};

/// Joint stratification cell: task stratum x race x age x gender.
struct JointCell {
    int stratum = 0;
    int race = 0;
    int age = 0;
    int gender = 0;

    auto operator<=>(const JointCell&) const = default;
};

/// Per-subject histogram over joint cells.
struct StratProfile {
    std::map<JointCell, int> cells;
    int total = 0;
};

std::map<std::string, StratProfile> build_profiles(const Dataset& dataset,
                                                   const StratifyConfig& config = {});

/// Marginal-matching dimensions, in objective order.
enum class MatchDimension { Label = 0, Race = 1, Age = 2, Gender = 3 };
inline constexpr std::size_t kMatchDimensions = 4;
std::string_view to_string(MatchDimension dimension);

struct PartitionSpec {
    std::array<double, 3> ratios = {0.55, 0.15, 0.30};  // train, valid, test
    std::uint64_t seed = 0;
    std::array<double, kMatchDimensions> dimension_weights = {1.0, 1.0, 1.0, 1.0};
    double tolerance = 0.02;       // ratio slack for validation / capacity warnings
    double ratio_penalty = 10.0;   // objective weight on set-fraction error
    StratifyConfig stratify;
    int max_moves = 2000;          // refinement budget (accepted moves)
    int restarts = 0;              // 0 = choose by subject count
    int exact_search_limit = 11;   // up to this many subjects, enumerate all 3^n

    void validate() const;  // ratios positive, summing to 1
};

struct PartitionQuality {
    std::array<double, 3> set_fractions = {0, 0, 0};
    std::array<double, 3> ratio_errors = {0, 0, 0};
    // [set][dimension] L1 divergence between set marginal and global marginal
    std::array<std::array<double, kMatchDimensions>, 3> divergence = {};
    bool subject_independent = false;
    double objective = 0.0;
    std::vector<double> objective_trace;  // greedy result + each accepted refinement move
    std::vector<std::string> warnings;
};

struct PartitionResult {
    Partition partition;
    PartitionQuality quality;
};

/// Subject-atomic three-way split: greedy seeding by descending subject
/// size, then steepest-descent refinement over subject moves and swaps.
/// Deterministic for a fixed (dataset, spec); input sample order never
/// matters. Throws on fewer than 3 subjects.
PartitionResult partition_dataset(const Dataset& dataset, const PartitionSpec& spec);

/// Recomputes every quality field from scratch; independent of how the
/// partition was produced. Throws on unknown sample ids or incomplete
/// assignments.
PartitionQuality validate_partition(const Dataset& dataset, const Partition& partition,
                                    const PartitionSpec& spec);

/// Objective value of an arbitrary subject assignment; exposed so small
/// instances can be checked against exhaustive enumeration.
double partition_objective(const Dataset& dataset,
                           const std::map<std::string, Split>& subject_assignment,
                           const PartitionSpec& spec);

}  // namespace fairaffect
