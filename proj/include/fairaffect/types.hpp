#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace fairaffect {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a fairness metric cannot be computed for an attribute
/// (e.g. fewer than two admitted subgroups). Callers typically convert
/// this into a report warning rather than aborting.
class NotAssessable : public Error {
  public:
    using Error::Error;
};

class IngestError : public Error {
  public:
    using Error::Error;
};

enum class Task { Expr, Au, Va };
enum class Split { Train, Valid, Test };
enum class Attribute { Age, Gender, Race };

std::string_view to_string(Task task);
std::string_view to_string(Split split);
std::string_view to_string(Attribute attribute);
Task task_from_string(std::string_view token);
Split split_from_string(std::string_view token);

/// Nine ordered age bands.
enum class AgeGroup : int {
    Under3 = 0,
    From3To9,
    From10To19,
    From20To29,
    From30To39,
    From40To49,
    From50To59,
    From60To69,
    Over70,
};
inline constexpr int kAgeGroupCount = 9;

enum class Gender : int { Female = 0, Male, OtherUncertain };
inline constexpr int kGenderCount = 3;

enum class Race : int { Asian = 0, Black, Indian, NativeHawaiian, White };
inline constexpr int kRaceCount = 5;

/// Buckets an integer age in years into its band. Monotone in `years`.
AgeGroup age_group_from_years(int years);

std::string_view to_string(AgeGroup group);
std::string_view to_string(Gender gender);
std::string_view to_string(Race race);

/// Token parsers accept the canonical names plus common variants
/// (case-insensitive; age also accepts raw integer years and zero-padded
/// bands such as "03-09"). Return nullopt on unknown tokens.
std::optional<AgeGroup> parse_age_group(std::string_view token);
std::optional<Gender> parse_gender(std::string_view token);
std::optional<Race> parse_race(std::string_view token);

struct Demographics {
    AgeGroup age = AgeGroup::Under3;
    Gender gender = Gender::Female;
    Race race = Race::Asian;

    bool operator==(const Demographics&) const = default;
};

/// Number of subgroups an attribute can take.
int attribute_cardinality(Attribute attribute);
/// Subgroup code of a sample for the given attribute.
int subgroup_code(const Demographics& demographics, Attribute attribute);
/// Canonical subgroup name, e.g. ("race", 0) -> "asian".
std::string_view subgroup_name(Attribute attribute, int code);
/// Report ordering used throughout: race, gender, age.
std::span<const Attribute> all_attributes();

struct ExprLabel {
    int cls = 0;
    bool operator==(const ExprLabel&) const = default;
};

struct AuLabel {
    std::vector<std::uint8_t> active;  // one bit per AU
    bool operator==(const AuLabel&) const = default;
};

struct VaLabel {
    double valence = 0.0;
    double arousal = 0.0;
    bool operator==(const VaLabel&) const = default;
};

using TaskLabel = std::variant<ExprLabel, AuLabel, VaLabel>;

Task task_of(const TaskLabel& label);

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
};

template <typename T>
using StringMap = std::unordered_map<std::string, T, StringHash, std::equal_to<>>;

struct Sample {
    std::string sample_id;
    std::string subject_id;
    Demographics demographics;
    TaskLabel label;
};

/// Immutable, validated collection of samples for one task.
///
/// The vocabulary holds expression class names or AU names; its size is
/// the class count C (Expr) or AU count M (Au). VA datasets carry an
/// empty vocabulary.
class Dataset {
  public:
    static Dataset make(Task task, std::vector<Sample> samples,
                        std::vector<std::string> vocabulary);

    Task task() const { return task_; }
    const std::vector<Sample>& samples() const { return samples_; }
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    std::size_t cardinality() const { return vocabulary_.size(); }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }

    std::optional<std::size_t> index_of(std::string_view sample_id) const;

  private:
    Dataset() = default;

    Task task_ = Task::Expr;
    std::vector<Sample> samples_;
    std::vector<std::string> vocabulary_;
    StringMap<std::size_t> index_;
};

/// Keeps only the samples whose ids satisfy `keep`; vocabulary is preserved.
Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

struct Partition {
    std::map<std::string, Split> assignment;  // sample_id -> set

    bool operator==(const Partition&) const = default;
};

class PredictionSet {
  public:
    PredictionSet(Task task, StringMap<TaskLabel> entries);

    Task task() const { return task_; }
    std::size_t size() const { return entries_.size(); }
    const TaskLabel* find(std::string_view sample_id) const;

  private:
    Task task_;
    StringMap<TaskLabel> entries_;
};

/// Square count grid; rows are true classes, columns predicted classes.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t classes);

    std::size_t classes() const { return classes_; }
    std::int64_t at(std::size_t row, std::size_t col) const;
    void add(std::size_t row, std::size_t col, std::int64_t count = 1);
    std::int64_t total() const;

  private:
    std::size_t classes_;
    std::vector<std::int64_t> counts_;
};

inline constexpr double kFairnessThreshold = 0.1;

inline bool is_fair(double score) { return score <= kFairnessThreshold; }

struct FairnessScore {
    double score = 0.0;
    bool fair = true;
};

struct MetricReport {
    Task task = Task::Expr;
    std::map<std::string, std::string> metadata;
    std::map<std::string, double> global;
    // attribute name -> metric name -> value, all in [0, 1] (or [-1, 1] for CCC)
    std::map<std::string, std::map<std::string, double>> local;
    std::map<std::string, std::map<std::string, FairnessScore>> fairness;
    std::vector<std::string> warnings;
};

/// Groups sample indices by subgroup of `attribute`. Subgroups with no
/// samples are absent. Gender=OtherUncertain samples are omitted from the
/// Gender index only; they participate in every other grouping.
std::map<int, std::vector<std::size_t>> subgroup_index(const Dataset& dataset,
                                                       Attribute attribute);

/// Groups sample indices by subject id (exhaustive and disjoint).
std::map<std::string, std::vector<std::size_t>> subject_groups(const Dataset& dataset);

}  // namespace fairaffect
