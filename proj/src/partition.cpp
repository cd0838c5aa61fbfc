#include "fairaffect/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "fairaffect/detail/rng.hpp"

namespace fairaffect {

namespace {
constexpr double kEdgeNudge = 1e-9;  // in units of bin width
}

VaRegion va_region(double valence, double arousal, double bin_width) {
    const int bins = va_bins_per_axis(bin_width);
    if (std::abs(valence) > 1.0 || std::abs(arousal) > 1.0)
        throw Error("va_region: valence/arousal outside [-1, 1]");
    const auto bin_of = [&](double x) {
        const int i = static_cast<int>(std::floor((x + 1.0) / bin_width + kEdgeNudge));
        return std::clamp(i, 0, bins - 1);
    };
    return VaRegion{bin_of(valence), bin_of(arousal)};
}

int va_bins_per_axis(double bin_width) {
    if (!(bin_width > 0.0) || bin_width > 2.0) throw Error("va_region: invalid bin width");
    const double bins = 2.0 / bin_width;
    const int rounded = static_cast<int>(std::lround(bins));
    if (std::abs(bins - rounded) > 1e-9)
        throw Error("va_region: 2 / bin_width must be integral");
    return rounded;
}

StratumTable StratumTable::build(const Dataset& dataset, const StratifyConfig& config) {
    StratumTable table;
    table.task_ = dataset.task();
    table.config_ = config;
    switch (dataset.task()) {
        case Task::Expr:
            table.count_ = dataset.cardinality();
            break;
        case Task::Va:
            table.va_bins_ = va_bins_per_axis(config.bin_width);
            table.count_ = static_cast<std::size_t>(table.va_bins_) * table.va_bins_;
            break;
        case Task::Au: {
            std::map<std::vector<std::uint8_t>, std::size_t> freq;
            for (const Sample& sample : dataset.samples())
                ++freq[std::get<AuLabel>(sample.label).active];
            const double floor_count = config.au_rare_floor * static_cast<double>(dataset.size());
            int next_id = 0;
            bool any_rare = false;
            for (const auto& [pattern, count] : freq) {
                if (static_cast<double>(count) >= floor_count)
                    table.au_patterns_[pattern] = next_id++;
                else
                    any_rare = true;
            }
            if (any_rare) table.au_other_ = next_id++;
            table.count_ = static_cast<std::size_t>(next_id);
            break;
        }
    }
    return table;
}

int StratumTable::stratum_of(const TaskLabel& label) const {
    switch (task_) {
        case Task::Expr:
            return std::get<ExprLabel>(label).cls;
        case Task::Va: {
            const auto& va = std::get<VaLabel>(label);
            const VaRegion cell = va_region(va.valence, va.arousal, config_.bin_width);
            return cell.valence_bin * va_bins_ + cell.arousal_bin;
        }
        case Task::Au: {
            const auto it = au_patterns_.find(std::get<AuLabel>(label).active);
            if (it != au_patterns_.end()) return it->second;
            if (au_other_ < 0) throw Error("stratum_of: unseen AU pattern");
            return au_other_;
        }
    }
    throw Error("invalid task");
}

std::string StratumTable::name(int stratum) const {
    switch (task_) {
        case Task::Expr:
            return "class_" + std::to_string(stratum);
        case Task::Va:
            return "region_" + std::to_string(stratum / va_bins_) + "_" +
                   std::to_string(stratum % va_bins_);
        case Task::Au: {
            if (stratum == au_other_) return "pattern_other";
            for (const auto& [pattern, id] : au_patterns_) {
                if (id != stratum) continue;
                std::string bits;
                for (std::uint8_t b : pattern) bits += b ? '1' : '0';
                return "pattern_" + bits;
            }
            throw Error("unknown stratum id");
        }
    }
    throw Error("invalid task");
}

std::string_view to_string(MatchDimension dimension) {
    switch (dimension) {
        case MatchDimension::Label: return "label";
        case MatchDimension::Race: return "race";
        case MatchDimension::Age: return "age";
        case MatchDimension::Gender: return "gender";
    }
    throw Error("invalid dimension");
}

std::map<std::string, StratProfile> build_profiles(const Dataset& dataset,
                                                   const StratifyConfig& config) {
    const StratumTable table = StratumTable::build(dataset, config);
    std::map<std::string, StratProfile> profiles;
    for (const Sample& sample : dataset.samples()) {
        StratProfile& profile = profiles[sample.subject_id];
        const JointCell cell{table.stratum_of(sample.label),
                             static_cast<int>(sample.demographics.race),
                             static_cast<int>(sample.demographics.age),
                             static_cast<int>(sample.demographics.gender)};
        ++profile.cells[cell];
        ++profile.total;
    }
    return profiles;
}

void PartitionSpec::validate() const {
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0)) throw Error("partition ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("partition ratios must sum to 1");
    if (!(tolerance >= 0.0)) throw Error("tolerance must be non-negative");
}

namespace {

int cell_dimension_value(const JointCell& cell, std::size_t dim) {
    switch (static_cast<MatchDimension>(dim)) {
        case MatchDimension::Label: return cell.stratum;
        case MatchDimension::Race: return cell.race;
        case MatchDimension::Age: return cell.age;
        case MatchDimension::Gender: return cell.gender;
    }
    throw Error("invalid dimension");
}

struct SubjectData {
    std::string id;
    int size = 0;
    // per dimension: (value, count) pairs, sorted by value
    std::array<std::vector<std::pair<int, int>>, kMatchDimensions> dim_counts;
};

std::vector<SubjectData> subject_data_from_profiles(
    const std::map<std::string, StratProfile>& profiles) {
    std::vector<SubjectData> subjects;
    subjects.reserve(profiles.size());
    for (const auto& [id, profile] : profiles) {
        SubjectData s;
        s.id = id;
        s.size = profile.total;
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim) {
            std::map<int, int> counts;
            for (const auto& [cell, count] : profile.cells)
                counts[cell_dimension_value(cell, dim)] += count;
            s.dim_counts[dim].assign(counts.begin(), counts.end());
        }
        subjects.push_back(std::move(s));
    }
    return subjects;  // lexicographic by id, courtesy of the profile map
}

// Incremental objective over per-set, per-dimension marginal counts.
//
//   objective = sum_sets sum_dims w_d * L1(set marginal_d, global marginal_d)
//             + lambda * sum_sets |set fraction - target ratio|
//
// An empty set contributes the full mass of the global marginal (L1 = 1).
class ObjectiveState {
  public:
    ObjectiveState(const std::vector<SubjectData>& subjects, const PartitionSpec& spec)
        : weights_(spec.dimension_weights), ratios_(spec.ratios),
          ratio_penalty_(spec.ratio_penalty) {
        for (const SubjectData& s : subjects) total_ += s.size;
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim) {
            int max_value = -1;
            for (const SubjectData& s : subjects)
                for (const auto& [value, count] : s.dim_counts[dim])
                    max_value = std::max(max_value, value);
            global_[dim].assign(static_cast<std::size_t>(max_value + 1), 0.0);
            for (const SubjectData& s : subjects)
                for (const auto& [value, count] : s.dim_counts[dim])
                    global_[dim][static_cast<std::size_t>(value)] += count;
            for (double& g : global_[dim]) g /= static_cast<double>(total_);
            for (int set = 0; set < 3; ++set)
                counts_[set][dim].assign(global_[dim].size(), 0);
        }
        for (int set = 0; set < 3; ++set) {
            for (std::size_t dim = 0; dim < kMatchDimensions; ++dim)
                refresh_divergence(set, dim);
            refresh_ratio(set);
        }
    }

    void apply(const SubjectData& s, int set, int sign) {
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim)
            for (const auto& [value, count] : s.dim_counts[dim])
                counts_[set][dim][static_cast<std::size_t>(value)] += sign * count;
        set_sizes_[set] += sign * s.size;
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim)
            refresh_divergence(set, dim);
        refresh_ratio(set);
    }

    double objective() const { return objective_; }

    double move_delta(const SubjectData& s, int from, int to) {
        const double before = objective_;
        apply(s, from, -1);
        apply(s, to, +1);
        const double after = objective_;
        apply(s, to, -1);
        apply(s, from, +1);
        return after - before;
    }

    double swap_delta(const SubjectData& a, int set_a, const SubjectData& b, int set_b) {
        const double before = objective_;
        apply(a, set_a, -1);
        apply(b, set_b, -1);
        apply(a, set_b, +1);
        apply(b, set_a, +1);
        const double after = objective_;
        apply(a, set_b, -1);
        apply(b, set_a, -1);
        apply(a, set_a, +1);
        apply(b, set_b, +1);
        return after - before;
    }

    double divergence(int set, std::size_t dim) const { return divergence_[set][dim]; }
    double set_fraction(int set) const {
        return total_ == 0 ? 0.0 : static_cast<double>(set_sizes_[set]) / total_;
    }

  private:
    void refresh_divergence(int set, std::size_t dim) {
        objective_ -= weights_[dim] * divergence_[set][dim];
        double l1;
        const std::int64_t size = set_sizes_[set];
        if (size == 0) {
            l1 = 2.0;  // empty set: maximal divergence from the global marginal
        } else {
            l1 = 0.0;
            const auto& counts = counts_[set][dim];
            const auto& global = global_[dim];
            for (std::size_t v = 0; v < global.size(); ++v)
                l1 += std::abs(static_cast<double>(counts[v]) / static_cast<double>(size) -
                               global[v]);
        }
        divergence_[set][dim] = l1;
        objective_ += weights_[dim] * l1;
    }

    void refresh_ratio(int set) {
        objective_ -= ratio_penalty_ * ratio_term_[set];
        ratio_term_[set] = std::abs(set_fraction(set) - ratios_[set]);
        objective_ += ratio_penalty_ * ratio_term_[set];
    }

    std::array<double, kMatchDimensions> weights_;
    std::array<double, 3> ratios_;
    double ratio_penalty_;
    std::int64_t total_ = 0;
    std::array<std::vector<double>, kMatchDimensions> global_;
    std::array<std::array<std::vector<std::int64_t>, kMatchDimensions>, 3> counts_ = {};
    std::array<std::int64_t, 3> set_sizes_ = {0, 0, 0};
    std::array<std::array<double, kMatchDimensions>, 3> divergence_ = {};
    std::array<double, 3> ratio_term_ = {0, 0, 0};
    double objective_ = 0.0;
};

struct SearchOutcome {
    std::vector<int> assignment;  // per subject index
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
};

// Greedy seeding in descending subject size, then steepest-descent
// refinement: single-subject moves first (cheap), a full swap scan once no
// move improves. Candidate order is canonical, so equal-objective choices
// resolve to the earliest candidate and the result is deterministic.
SearchOutcome run_search(const std::vector<SubjectData>& subjects, const PartitionSpec& spec,
                         const std::vector<std::size_t>& order) {
    ObjectiveState state(subjects, spec);
    SearchOutcome outcome;
    outcome.assignment.assign(subjects.size(), -1);

    for (std::size_t subject : order) {
        int best_set = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int set = 0; set < 3; ++set) {
            state.apply(subjects[subject], set, +1);
            const double candidate = state.objective();
            state.apply(subjects[subject], set, -1);
            if (candidate < best - 1e-12) {
                best = candidate;
                best_set = set;
            }
        }
        state.apply(subjects[subject], best_set, +1);
        outcome.assignment[subject] = best_set;
    }
    outcome.trace.push_back(state.objective());

    int moves = 0;
    while (moves < spec.max_moves) {
        // steepest single-subject move
        double best_delta = -1e-12;
        std::size_t best_subject = 0;
        int best_to = -1;
        for (std::size_t rank : order) {
            const int from = outcome.assignment[rank];
            for (int to = 0; to < 3; ++to) {
                if (to == from) continue;
                const double delta = state.move_delta(subjects[rank], from, to);
                if (delta < best_delta) {
                    best_delta = delta;
                    best_subject = rank;
                    best_to = to;
                }
            }
        }
        if (best_to >= 0) {
            const int from = outcome.assignment[best_subject];
            state.apply(subjects[best_subject], from, -1);
            state.apply(subjects[best_subject], best_to, +1);
            outcome.assignment[best_subject] = best_to;
            outcome.trace.push_back(state.objective());
            ++moves;
            continue;
        }

        // no improving move: steepest swap scan
        double best_swap_delta = -1e-12;
        std::size_t swap_a = 0, swap_b = 0;
        bool found_swap = false;
        for (std::size_t i = 0; i < order.size(); ++i) {
            for (std::size_t j = i + 1; j < order.size(); ++j) {
                const std::size_t a = order[i], b = order[j];
                if (outcome.assignment[a] == outcome.assignment[b]) continue;
                const double delta = state.swap_delta(subjects[a], outcome.assignment[a],
                                                      subjects[b], outcome.assignment[b]);
                if (delta < best_swap_delta) {
                    best_swap_delta = delta;
                    swap_a = a;
                    swap_b = b;
                    found_swap = true;
                }
            }
        }
        if (!found_swap) break;
        const int set_a = outcome.assignment[swap_a];
        const int set_b = outcome.assignment[swap_b];
        state.apply(subjects[swap_a], set_a, -1);
        state.apply(subjects[swap_b], set_b, -1);
        state.apply(subjects[swap_a], set_b, +1);
        state.apply(subjects[swap_b], set_a, +1);
        outcome.assignment[swap_a] = set_b;
        outcome.assignment[swap_b] = set_a;
        outcome.trace.push_back(state.objective());
        ++moves;
    }

    outcome.objective = state.objective();
    return outcome;
}

// Exhaustive DFS over all 3^n subject assignments with incremental
// objective updates; used when the instance is small enough that exact
// search is cheaper than arguing about local optima.
SearchOutcome run_exact(const std::vector<SubjectData>& subjects, const PartitionSpec& spec) {
    ObjectiveState state(subjects, spec);
    SearchOutcome outcome;
    std::vector<int> current(subjects.size(), 0);

    const auto dfs = [&](auto&& self, std::size_t depth) -> void {
        if (depth == subjects.size()) {
            const double objective = state.objective();
            if (objective < outcome.objective) {
                outcome.objective = objective;
                outcome.assignment = current;
            }
            return;
        }
        for (int set = 0; set < 3; ++set) {
            state.apply(subjects[depth], set, +1);
            current[depth] = set;
            self(self, depth + 1);
            state.apply(subjects[depth], set, -1);
        }
    };
    dfs(dfs, 0);
    outcome.trace.push_back(outcome.objective);
    return outcome;
}

int restart_count(const PartitionSpec& spec, std::size_t subjects) {
    if (spec.restarts > 0) return spec.restarts;
    if (subjects <= 64) return 8;
    if (subjects <= 200) return 4;
    return 2;
}

std::vector<std::size_t> subject_order(const std::vector<SubjectData>& subjects,
                                       std::uint64_t seed, int restart) {
    // canonical (lexicographic) base order with a seeded shuffle; restart 0
    // then restores descending sample size (the shuffle only breaks ties),
    // later restarts keep the shuffled order to explore other basins
    std::vector<std::size_t> order(subjects.size());
    std::iota(order.begin(), order.end(), 0);
    detail::SplitMixStream stream(
        detail::keyed_bits(seed, 0x5EEDULL, static_cast<std::uint64_t>(restart)));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[stream.next_below(i)]);
    if (restart == 0) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return subjects[a].size > subjects[b].size;
        });
    }
    return order;
}

}  // namespace

PartitionResult partition_dataset(const Dataset& dataset, const PartitionSpec& spec) {
    spec.validate();
    const auto profiles = build_profiles(dataset, spec.stratify);
    if (profiles.size() < 3)
        throw Error("partition requires at least 3 subjects, got " +
                    std::to_string(profiles.size()));

    const std::vector<SubjectData> subjects = subject_data_from_profiles(profiles);

    SearchOutcome best;
    if (subjects.size() <= static_cast<std::size_t>(spec.exact_search_limit)) {
        best = run_exact(subjects, spec);
    } else {
        const int restarts = restart_count(spec, subjects.size());
        for (int restart = 0; restart < restarts; ++restart) {
            const auto order = subject_order(subjects, spec.seed, restart);
            SearchOutcome outcome = run_search(subjects, spec, order);
            if (outcome.objective < best.objective - 1e-12) best = std::move(outcome);
        }
    }

    Partition partition;
    std::map<std::string, Split> by_subject;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        by_subject[subjects[i].id] = static_cast<Split>(best.assignment[i]);
    for (const Sample& sample : dataset.samples())
        partition.assignment[sample.sample_id] = by_subject.at(sample.subject_id);

    PartitionQuality quality = validate_partition(dataset, partition, spec);
    quality.objective = best.objective;
    quality.objective_trace = std::move(best.trace);
    return PartitionResult{std::move(partition), std::move(quality)};
}

PartitionQuality validate_partition(const Dataset& dataset, const Partition& partition,
                                    const PartitionSpec& spec) {
    spec.validate();
    for (const auto& [sample_id, split] : partition.assignment)
        if (!dataset.index_of(sample_id))
            throw Error("partition references unknown sample " + sample_id);

    const StratumTable table = StratumTable::build(dataset, spec.stratify);
    std::array<std::array<std::map<int, std::int64_t>, kMatchDimensions>, 3> counts;
    std::array<std::map<int, std::int64_t>, kMatchDimensions> global;
    std::array<std::int64_t, 3> sizes = {0, 0, 0};
    std::map<std::string, int> subject_set;
    std::set<std::string> straddlers;

    for (const Sample& sample : dataset.samples()) {
        const auto it = partition.assignment.find(sample.sample_id);
        if (it == partition.assignment.end())
            throw Error("partition does not cover sample " + sample.sample_id);
        const int set = static_cast<int>(it->second);
        const std::array<int, kMatchDimensions> values = {
            table.stratum_of(sample.label), static_cast<int>(sample.demographics.race),
            static_cast<int>(sample.demographics.age),
            static_cast<int>(sample.demographics.gender)};
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim) {
            ++counts[set][dim][values[dim]];
            ++global[dim][values[dim]];
        }
        ++sizes[set];

        const auto [entry, inserted] = subject_set.emplace(sample.subject_id, set);
        if (!inserted && entry->second != set) straddlers.insert(sample.subject_id);
    }

    const double total = static_cast<double>(dataset.size());
    PartitionQuality quality;
    quality.subject_independent = straddlers.empty();
    for (const std::string& subject : straddlers)
        quality.warnings.push_back("subject " + subject + " straddles sets");

    for (int set = 0; set < 3; ++set) {
        quality.set_fractions[set] = total == 0 ? 0.0 : sizes[set] / total;
        quality.ratio_errors[set] = std::abs(quality.set_fractions[set] - spec.ratios[set]);
        for (std::size_t dim = 0; dim < kMatchDimensions; ++dim) {
            double l1 = 0.0;
            if (sizes[set] == 0) {
                l1 = 2.0;
            } else {
                for (const auto& [value, count] : global[dim]) {
                    const auto found = counts[set][dim].find(value);
                    const double set_share =
                        found == counts[set][dim].end()
                            ? 0.0
                            : static_cast<double>(found->second) / sizes[set];
                    l1 += std::abs(set_share - static_cast<double>(count) / total);
                }
            }
            quality.divergence[set][dim] = l1;
        }
        if (sizes[set] == 0)
            quality.warnings.push_back("set " + std::string(to_string(static_cast<Split>(set))) +
                                       " is empty");
    }

    // demographic subgroups forced empty in one set are tolerated, but noted
    for (std::size_t dim = 1; dim < kMatchDimensions; ++dim) {
        for (const auto& [value, count] : global[dim]) {
            for (int set = 0; set < 3; ++set) {
                if (sizes[set] == 0) continue;
                if (counts[set][dim].count(value)) continue;
                const auto attribute = dim == 1   ? Attribute::Race
                                       : dim == 2 ? Attribute::Age
                                                  : Attribute::Gender;
                std::ostringstream msg;
                msg << to_string(attribute) << "=" << subgroup_name(attribute, value)
                    << " has no samples in " << to_string(static_cast<Split>(set));
                quality.warnings.push_back(msg.str());
            }
        }
    }

    // a subject larger than a set's capacity (+ tolerance) makes the ratio
    // target unreachable; report it rather than fail
    std::map<std::string, std::int64_t> subject_sizes;
    for (const Sample& sample : dataset.samples()) ++subject_sizes[sample.subject_id];
    for (const auto& [subject, count] : subject_sizes) {
        const int set = subject_set.at(subject);
        const double share = static_cast<double>(count) / total;
        if (share > spec.ratios[set] + spec.tolerance) {
            std::ostringstream msg;
            msg.precision(1);
            msg << std::fixed << "subject " << subject << " alone holds " << share * 100.0
                << "% of samples, above the " << to_string(static_cast<Split>(set))
                << " target of " << spec.ratios[set] * 100.0 << "%";
            quality.warnings.push_back(msg.str());
        }
    }

    std::map<std::string, Split> subject_assignment;
    for (const auto& [subject, set] : subject_set)
        subject_assignment[subject] = static_cast<Split>(set);
    if (quality.subject_independent)
        quality.objective = partition_objective(dataset, subject_assignment, spec);
    return quality;
}

double partition_objective(const Dataset& dataset,
                           const std::map<std::string, Split>& subject_assignment,
                           const PartitionSpec& spec) {
    const auto profiles = build_profiles(dataset, spec.stratify);
    const std::vector<SubjectData> subjects = subject_data_from_profiles(profiles);
    ObjectiveState state(subjects, spec);
    for (const SubjectData& s : subjects) {
        const auto it = subject_assignment.find(s.id);
        if (it == subject_assignment.end())
            throw Error("assignment missing subject " + s.id);
        state.apply(s, static_cast<int>(it->second), +1);
    }
    return state.objective();
}

}  // namespace fairaffect
