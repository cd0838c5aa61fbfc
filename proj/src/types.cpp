#include "fairaffect/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace fairaffect {

namespace {

std::string lowered(std::string_view token) {
    std::string out(token);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<int> parse_int(std::string_view token) {
    int value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return value;
}

}  // namespace

std::string_view to_string(Task task) {
    switch (task) {
        case Task::Expr: return "expr";
        case Task::Au: return "au";
        case Task::Va: return "va";
    }
    throw Error("invalid task");
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    throw Error("invalid split");
}

std::string_view to_string(Attribute attribute) {
    switch (attribute) {
        case Attribute::Age: return "age";
        case Attribute::Gender: return "gender";
        case Attribute::Race: return "race";
    }
    throw Error("invalid attribute");
}

Task task_from_string(std::string_view token) {
    const std::string t = lowered(token);
    if (t == "expr") return Task::Expr;
    if (t == "au") return Task::Au;
    if (t == "va") return Task::Va;
    throw Error("unknown task: " + std::string(token));
}

Split split_from_string(std::string_view token) {
    const std::string t = lowered(token);
    if (t == "train") return Split::Train;
    if (t == "valid") return Split::Valid;
    if (t == "test") return Split::Test;
    throw Error("unknown set: " + std::string(token));
}

AgeGroup age_group_from_years(int years) {
    if (years < 0) throw Error("negative age");
    if (years <= 2) return AgeGroup::Under3;
    if (years <= 9) return AgeGroup::From3To9;
    if (years <= 19) return AgeGroup::From10To19;
    if (years <= 29) return AgeGroup::From20To29;
    if (years <= 39) return AgeGroup::From30To39;
    if (years <= 49) return AgeGroup::From40To49;
    if (years <= 59) return AgeGroup::From50To59;
    if (years <= 69) return AgeGroup::From60To69;
    return AgeGroup::Over70;
}

namespace {
constexpr std::array<std::string_view, kAgeGroupCount> kAgeNames = {
    "<=2", "3-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", ">=70"};
constexpr std::array<std::string_view, kGenderCount> kGenderNames = {"female", "male",
                                                                     "other_uncertain"};
constexpr std::array<std::string_view, kRaceCount> kRaceNames = {"asian", "black", "indian",
                                                                 "native_hawaiian", "white"};
}  // namespace

std::string_view to_string(AgeGroup group) { return kAgeNames[static_cast<int>(group)]; }
std::string_view to_string(Gender gender) { return kGenderNames[static_cast<int>(gender)]; }
std::string_view to_string(Race race) { return kRaceNames[static_cast<int>(race)]; }

std::optional<AgeGroup> parse_age_group(std::string_view token) {
    const std::string t = lowered(token);
    if (t.empty()) return std::nullopt;
    if (auto years = parse_int(t); years && *years >= 0) return age_group_from_years(*years);
    if (t == "<=2" || t == "0-2" || t == "≤2") return AgeGroup::Under3;
    if (t == ">=70" || t == "70+" || t == "≥70") return AgeGroup::Over70;
    // band form "lo-hi", tolerating zero padding
    const auto dash = t.find('-');
    if (dash == std::string::npos || dash == 0) return std::nullopt;
    const auto lo = parse_int(t.substr(0, dash));
    const auto hi = parse_int(t.substr(dash + 1));
    if (!lo || !hi || *lo < 0 || *hi < *lo) return std::nullopt;
    const AgeGroup a = age_group_from_years(*lo);
    const AgeGroup b = age_group_from_years(*hi);
    if (a != b) return std::nullopt;  // spans multiple bands
    return a;
}

std::optional<Gender> parse_gender(std::string_view token) {
    const std::string t = lowered(token);
    if (t == "female" || t == "f") return Gender::Female;
    if (t == "male" || t == "m") return Gender::Male;
    if (t == "other_uncertain" || t == "other/uncertain" || t == "other" || t == "uncertain")
        return Gender::OtherUncertain;
    return std::nullopt;
}

std::optional<Race> parse_race(std::string_view token) {
    const std::string t = lowered(token);
    if (t == "asian") return Race::Asian;
    if (t == "black") return Race::Black;
    if (t == "indian") return Race::Indian;
    if (t == "native_hawaiian" || t == "native hawaiian" || t == "nativehawaiian" ||
        t == "native-hawaiian")
        return Race::NativeHawaiian;
    if (t == "white") return Race::White;
    return std::nullopt;
}

int attribute_cardinality(Attribute attribute) {
    switch (attribute) {
        case Attribute::Age: return kAgeGroupCount;
        case Attribute::Gender: return kGenderCount;
        case Attribute::Race: return kRaceCount;
    }
    throw Error("invalid attribute");
}

int subgroup_code(const Demographics& demographics, Attribute attribute) {
    switch (attribute) {
        case Attribute::Age: return static_cast<int>(demographics.age);
        case Attribute::Gender: return static_cast<int>(demographics.gender);
        case Attribute::Race: return static_cast<int>(demographics.race);
    }
    throw Error("invalid attribute");
}

std::string_view subgroup_name(Attribute attribute, int code) {
    switch (attribute) {
        case Attribute::Age: return to_string(static_cast<AgeGroup>(code));
        case Attribute::Gender: return to_string(static_cast<Gender>(code));
        case Attribute::Race: return to_string(static_cast<Race>(code));
    }
    throw Error("invalid attribute");
}

std::span<const Attribute> all_attributes() {
    static constexpr std::array<Attribute, 3> order = {Attribute::Race, Attribute::Gender,
                                                       Attribute::Age};
    return order;
}

Task task_of(const TaskLabel& label) {
    if (std::holds_alternative<ExprLabel>(label)) return Task::Expr;
    if (std::holds_alternative<AuLabel>(label)) return Task::Au;
    return Task::Va;
}

Dataset Dataset::make(Task task, std::vector<Sample> samples,
                      std::vector<std::string> vocabulary) {
    Dataset dataset;
    dataset.task_ = task;
    dataset.samples_ = std::move(samples);
    dataset.vocabulary_ = std::move(vocabulary);
    dataset.index_.reserve(dataset.samples_.size());

    for (std::size_t i = 0; i < dataset.samples_.size(); ++i) {
        const Sample& sample = dataset.samples_[i];
        if (sample.sample_id.empty()) throw Error("empty sample_id");
        if (sample.subject_id.empty())
            throw Error("empty subject_id for sample " + sample.sample_id);
        if (task_of(sample.label) != task)
            throw Error("label task mismatch for sample " + sample.sample_id);
        if (task == Task::Expr) {
            const int cls = std::get<ExprLabel>(sample.label).cls;
            if (cls < 0 || static_cast<std::size_t>(cls) >= dataset.vocabulary_.size())
                throw Error("expression class out of range for sample " + sample.sample_id);
        } else if (task == Task::Au) {
            if (std::get<AuLabel>(sample.label).active.size() != dataset.vocabulary_.size())
                throw Error("AU vector length mismatch for sample " + sample.sample_id);
        } else {
            const auto& va = std::get<VaLabel>(sample.label);
            if (std::abs(va.valence) > 1.0 || std::abs(va.arousal) > 1.0)
                throw Error("valence/arousal out of range for sample " + sample.sample_id);
        }
        auto [it, inserted] = dataset.index_.emplace(dataset.samples_[i].sample_id, i);
        if (!inserted) throw Error("duplicate sample_id: " + sample.sample_id);
    }
    return dataset;
}

std::optional<std::size_t> Dataset::index_of(std::string_view sample_id) const {
    const auto it = index_.find(sample_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
    std::vector<Sample> kept;
    kept.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= dataset.size()) throw Error("subset index out of range");
        kept.push_back(dataset.samples()[i]);
    }
    return Dataset::make(dataset.task(), std::move(kept), dataset.vocabulary());
}

PredictionSet::PredictionSet(Task task, StringMap<TaskLabel> entries)
    : task_(task), entries_(std::move(entries)) {
    for (const auto& [id, label] : entries_) {
        if (task_of(label) != task_) throw Error("prediction task mismatch for sample " + id);
    }
}

const TaskLabel* PredictionSet::find(std::string_view sample_id) const {
    const auto it = entries_.find(sample_id);
    if (it == entries_.end()) return nullptr;
    return &it->second;
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {}

std::int64_t ConfusionMatrix::at(std::size_t row, std::size_t col) const {
    return counts_[row * classes_ + col];
}

void ConfusionMatrix::add(std::size_t row, std::size_t col, std::int64_t count) {
    if (row >= classes_ || col >= classes_) throw Error("confusion index out of range");
    counts_[row * classes_ + col] += count;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t sum = 0;
    for (std::int64_t c : counts_) sum += c;
    return sum;
}

std::map<int, std::vector<std::size_t>> subgroup_index(const Dataset& dataset,
                                                       Attribute attribute) {
    if (dataset.empty()) throw Error("subgroup_index: empty dataset");
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Demographics& d = dataset.samples()[i].demographics;
        if (attribute == Attribute::Gender && d.gender == Gender::OtherUncertain) continue;
        groups[subgroup_code(d, attribute)].push_back(i);
    }
    return groups;
}

std::map<std::string, std::vector<std::size_t>> subject_groups(const Dataset& dataset) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        groups[dataset.samples()[i].subject_id].push_back(i);
    }
    return groups;
}

}  // namespace fairaffect
