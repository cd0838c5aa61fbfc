#include "fairaffect/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fairaffect/metrics_au.hpp"

namespace fairaffect {

namespace {

using nlohmann::json;

std::string lowered(std::string_view token) {
    std::string out(token);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trimmed(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(trimmed(line.substr(start)));
            break;
        }
        fields.emplace_back(trimmed(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::optional<int> parse_int(std::string_view token) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::optional<double> parse_double(std::string_view token) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream stream(path, std::ios::binary);
    if (!stream) throw IngestError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return buffer.str();
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

struct Header {
    std::map<std::string, std::size_t> columns;   // lowered name -> index
    std::vector<std::size_t> au_columns;          // in header order
    std::vector<std::string> au_names;
    std::size_t field_count = 0;

    std::optional<std::size_t> find(std::string_view name) const {
        const auto it = columns.find(std::string(name));
        if (it == columns.end()) return std::nullopt;
        return it->second;
    }
};

Header parse_header(std::string_view line, const std::filesystem::path& path) {
    Header header;
    const auto fields = split_fields(line);
    header.field_count = fields.size();
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string name = lowered(fields[i]);
        if (name.empty()) throw IngestError(path.string() + ": empty column name in header");
        if (!header.columns.emplace(name, i).second)
            throw IngestError(path.string() + ": duplicate column '" + name + "'");
        if (name.rfind("au_", 0) == 0) {
            header.au_columns.push_back(i);
            header.au_names.push_back(name);
        }
    }
    return header;
}

void require_task_columns(const Header& header, Task task,
                          const std::filesystem::path& path) {
    switch (task) {
        case Task::Expr:
            if (!header.find("expression"))
                throw IngestError(path.string() + ": missing column 'expression'");
            break;
        case Task::Au:
            if (header.au_columns.empty())
                throw IngestError(path.string() + ": no au_* columns found");
            break;
        case Task::Va:
            if (!header.find("valence") || !header.find("arousal"))
                throw IngestError(path.string() + ": missing column 'valence' or 'arousal'");
            break;
    }
}

// parses the task columns of one row; returns an error string on failure
std::optional<std::string> parse_task_label(const Header& header,
                                            const std::vector<std::string>& fields, Task task,
                                            bool intensities_allowed, TaskLabel& out) {
    switch (task) {
        case Task::Expr: {
            const auto& field = fields[*header.find("expression")];
            const auto cls = parse_int(field);
            if (!cls || *cls < 0) return "invalid expression class '" + field + "'";
            out = ExprLabel{*cls};
            return std::nullopt;
        }
        case Task::Au: {
            AuLabel label;
            label.active.reserve(header.au_columns.size());
            for (std::size_t k = 0; k < header.au_columns.size(); ++k) {
                const auto& field = fields[header.au_columns[k]];
                const auto value = parse_int(field);
                if (!value) return "invalid value '" + field + "' for " + header.au_names[k];
                if (intensities_allowed) {
                    if (*value < 0 || *value > 5)
                        return "intensity out of range for " + header.au_names[k] + ": " + field;
                    label.active.push_back(intensity_to_activation(*value));
                } else {
                    if (*value != 0 && *value != 1)
                        return "prediction for " + header.au_names[k] +
                               " must be 0 or 1, got " + field;
                    label.active.push_back(static_cast<std::uint8_t>(*value));
                }
            }
            out = std::move(label);
            return std::nullopt;
        }
        case Task::Va: {
            const auto& v_field = fields[*header.find("valence")];
            const auto& a_field = fields[*header.find("arousal")];
            const auto v = parse_double(v_field);
            const auto a = parse_double(a_field);
            if (!v) return "invalid valence '" + v_field + "'";
            if (!a) return "invalid arousal '" + a_field + "'";
            if (std::abs(*v) > 1.0) return "valence out of range: " + v_field;
            if (std::abs(*a) > 1.0) return "arousal out of range: " + a_field;
            out = VaLabel{*v, *a};
            return std::nullopt;
        }
    }
    return "invalid task";
}

[[noreturn]] void throw_rejections(const std::filesystem::path& path,
                                   const std::vector<RowRejection>& rejections) {
    std::ostringstream msg;
    msg << path.string() << ": " << rejections.size() << " row(s) rejected";
    const std::size_t shown = std::min<std::size_t>(rejections.size(), 10);
    for (std::size_t i = 0; i < shown; ++i)
        msg << "\n  line " << rejections[i].line << ": " << rejections[i].reason;
    if (rejections.size() > shown)
        msg << "\n  ... and " << rejections.size() - shown << " more";
    throw IngestError(msg.str());
}

}  // namespace

LoadResult load_annotations(const std::filesystem::path& path, Task task,
                            const LoadOptions& options) {
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.empty()) throw IngestError(path.string() + ": empty file");
    const Header header = parse_header(lines[0], path);

    for (const char* required : {"sample_id", "age", "gender", "race"})
        if (!header.find(required))
            throw IngestError(path.string() + ": missing column '" + std::string(required) +
                              "'");
    require_task_columns(header, task, path);

    const auto subject_col = header.find("subject_id");
    const auto source_col = header.find("annotation_source");

    LoadResult result{Dataset::make(task, {}, {}), 0, 0, {}, !subject_col.has_value()};

    struct PendingRow {
        Sample sample;
        std::size_t line;
    };
    std::vector<PendingRow> rows;
    std::map<std::string, std::size_t> first_line;  // duplicate detection
    int max_class = -1;

    for (std::size_t n = 1; n < lines.size(); ++n) {
        const std::string_view line = trimmed(lines[n]);
        if (line.empty()) continue;
        ++result.rows_total;
        const std::size_t line_no = n + 1;
        const auto fields = split_fields(line);
        if (fields.size() != header.field_count) {
            result.rejections.push_back({line_no, "expected " +
                                                      std::to_string(header.field_count) +
                                                      " fields, got " +
                                                      std::to_string(fields.size())});
            continue;
        }

        if (source_col) {
            const std::string source = lowered(fields[*source_col]);
            if (source == "automatic" || source == "auto") {
                ++result.rows_dropped_automatic;
                continue;
            }
            if (source != "manual" && !source.empty()) {
                result.rejections.push_back({line_no, "unknown annotation_source '" +
                                                          fields[*source_col] + "'"});
                continue;
            }
        }

        Sample sample;
        sample.sample_id = fields[*header.find("sample_id")];
        if (sample.sample_id.empty()) {
            result.rejections.push_back({line_no, "missing sample_id"});
            continue;
        }
        if (const auto seen = first_line.find(sample.sample_id); seen != first_line.end()) {
            result.rejections.push_back({line_no, "duplicate sample_id '" + sample.sample_id +
                                                      "' (first seen at line " +
                                                      std::to_string(seen->second) + ")"});
            continue;
        }

        sample.subject_id = subject_col ? fields[*subject_col] : sample.sample_id;
        if (sample.subject_id.empty()) {
            result.rejections.push_back({line_no, "missing subject_id"});
            continue;
        }

        const auto age = parse_age_group(fields[*header.find("age")]);
        const auto gender = parse_gender(fields[*header.find("gender")]);
        const auto race = parse_race(fields[*header.find("race")]);
        if (!age || !gender || !race) {
            std::string reason;
            if (!age) reason = "unknown age token '" + fields[*header.find("age")] + "'";
            else if (!gender)
                reason = "unknown gender token '" + fields[*header.find("gender")] + "'";
            else
                reason = "unknown race token '" + fields[*header.find("race")] + "'";
            result.rejections.push_back({line_no, reason});
            continue;
        }
        sample.demographics = {*age, *gender, *race};

        if (auto error = parse_task_label(header, fields, task, true, sample.label)) {
            result.rejections.push_back({line_no, *error});
            continue;
        }
        if (task == Task::Expr)
            max_class = std::max(max_class, std::get<ExprLabel>(sample.label).cls);

        first_line[sample.sample_id] = line_no;
        rows.push_back({std::move(sample), line_no});
    }

    if (options.strict && !result.rejections.empty()) throw_rejections(path, result.rejections);

    std::vector<std::string> vocabulary;
    if (task == Task::Expr) {
        for (int c = 0; c <= max_class; ++c) vocabulary.push_back("class_" + std::to_string(c));
    } else if (task == Task::Au) {
        vocabulary = header.au_names;
    }

    std::vector<Sample> samples;
    samples.reserve(rows.size());
    for (auto& row : rows) samples.push_back(std::move(row.sample));
    result.dataset = Dataset::make(task, std::move(samples), std::move(vocabulary));
    return result;
}

PredictionSet load_predictions(const std::filesystem::path& path, Task task) {
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.empty()) throw IngestError(path.string() + ": empty file");
    const Header header = parse_header(lines[0], path);
    if (!header.find("sample_id"))
        throw IngestError(path.string() + ": missing column 'sample_id'");
    require_task_columns(header, task, path);

    StringMap<TaskLabel> entries;
    std::vector<RowRejection> rejections;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const std::string_view line = trimmed(lines[n]);
        if (line.empty()) continue;
        const std::size_t line_no = n + 1;
        const auto fields = split_fields(line);
        if (fields.size() != header.field_count) {
            rejections.push_back({line_no, "expected " + std::to_string(header.field_count) +
                                               " fields, got " +
                                               std::to_string(fields.size())});
            continue;
        }
        const std::string& sample_id = fields[*header.find("sample_id")];
        if (sample_id.empty()) {
            rejections.push_back({line_no, "missing sample_id"});
            continue;
        }
        TaskLabel label;
        if (auto error = parse_task_label(header, fields, task, false, label)) {
            rejections.push_back({line_no, *error});
            continue;
        }
        if (!entries.emplace(sample_id, std::move(label)).second) {
            rejections.push_back({line_no, "duplicate sample_id '" + sample_id + "'"});
            continue;
        }
    }
    if (!rejections.empty()) throw_rejections(path, rejections);
    return PredictionSet(task, std::move(entries));
}

std::string manifest_to_string(const Partition& partition) {
    std::string out = "sample_id,set\n";
    for (const auto& [sample_id, split] : partition.assignment) {
        out += sample_id;
        out += ',';
        out += to_string(split);
        out += '\n';
    }
    return out;
}

Partition manifest_from_string(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw IngestError("manifest: empty input");
    const auto header = split_fields(lines[0]);
    if (header.size() != 2 || lowered(header[0]) != "sample_id" || lowered(header[1]) != "set")
        throw IngestError("manifest: header must be 'sample_id,set'");
    Partition partition;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const std::string_view line = trimmed(lines[n]);
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2)
            throw IngestError("manifest line " + std::to_string(n + 1) + ": expected 2 fields");
        if (fields[0].empty())
            throw IngestError("manifest line " + std::to_string(n + 1) + ": missing sample_id");
        Split split;
        try {
            split = split_from_string(fields[1]);
        } catch (const Error&) {
            throw IngestError("manifest line " + std::to_string(n + 1) + ": unknown set '" +
                              fields[1] + "'");
        }
        if (!partition.assignment.emplace(fields[0], split).second)
            throw IngestError("manifest line " + std::to_string(n + 1) +
                              ": duplicate sample_id '" + fields[0] + "'");
    }
    return partition;
}

void write_manifest(const Partition& partition, const std::filesystem::path& path) {
    std::ofstream stream(path, std::ios::binary);
    if (!stream) throw IngestError("cannot write " + path.string());
    stream << manifest_to_string(partition);
}

Partition load_manifest(const std::filesystem::path& path) {
    return manifest_from_string(read_file(path));
}

ReportFormat report_format_from_string(std::string_view token) {
    const std::string t = lowered(token);
    if (t == "json") return ReportFormat::Json;
    if (t == "markdown" || t == "md") return ReportFormat::Markdown;
    throw Error("unknown format: " + std::string(token));
}

std::string format_percent(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value * 100.0,
                                         std::chars_format::fixed, 1);
    if (ec != std::errc{}) throw Error("format_percent failed");
    return std::string(buffer, ptr);
}

namespace {

json report_to_json(const MetricReport& report) {
    json out;
    out["task"] = std::string(to_string(report.task));
    out["metadata"] = report.metadata;
    out["global"] = report.global;
    json local = json::object();
    for (const auto& [attr, metrics] : report.local) local[attr] = metrics;
    out["local"] = local;
    json fairness = json::object();
    for (const auto& [attr, metrics] : report.fairness) {
        json entry = json::object();
        for (const auto& [name, fs] : metrics)
            entry[name] = {{"score", fs.score}, {"fair", fs.fair}};
        fairness[attr] = entry;
    }
    out["fairness"] = fairness;
    out["warnings"] = report.warnings;
    return out;
}

MetricReport report_from_json(const json& in) {
    MetricReport report;
    report.task = task_from_string(in.at("task").get<std::string>());
    for (const auto& [key, value] : in.at("metadata").items())
        report.metadata[key] = value.get<std::string>();
    for (const auto& [key, value] : in.at("global").items())
        report.global[key] = value.get<double>();
    for (const auto& [attr, metrics] : in.at("local").items())
        for (const auto& [name, value] : metrics.items())
            report.local[attr][name] = value.get<double>();
    for (const auto& [attr, metrics] : in.at("fairness").items())
        for (const auto& [name, value] : metrics.items())
            report.fairness[attr][name] = {value.at("score").get<double>(),
                                           value.at("fair").get<bool>()};
    for (const auto& w : in.at("warnings")) report.warnings.push_back(w.get<std::string>());
    return report;
}

struct Column {
    enum class Source { Global, Local, Fairness };
    std::string title;
    Source source;
    std::string attribute;  // empty for Global
    std::string key;
};

std::vector<Column> report_columns(Task task) {
    std::vector<Column> columns;
    const auto attr_block = [&](std::string_view attr) {
        const std::string a(attr);
        const std::string cap = std::string(1, static_cast<char>(std::toupper(a[0]))) +
                                a.substr(1);
        if (task == Task::Expr) {
            columns.push_back({cap + " SP", Column::Source::Fairness, a, "SP"});
            columns.push_back({cap + " LF1", Column::Source::Local, a, "LF1"});
            columns.push_back({cap + " EOP", Column::Source::Fairness, a, "EOP"});
        } else if (task == Task::Au) {
            columns.push_back({cap + " LF1", Column::Source::Local, a, "LF1"});
            columns.push_back({cap + " EOD", Column::Source::Fairness, a, "EOD"});
            columns.push_back({cap + " DPD", Column::Source::Fairness, a, "DPD"});
        } else {
            columns.push_back({cap + " LVA", Column::Source::Local, a, "LVA"});
            columns.push_back({cap + " LV", Column::Source::Local, a, "LV"});
            columns.push_back({cap + " LA", Column::Source::Local, a, "LA"});
        }
    };
    if (task == Task::Va) {
        columns.push_back({"GVA", Column::Source::Global, "", "GVA"});
        columns.push_back({"GV", Column::Source::Global, "", "GV"});
        columns.push_back({"GA", Column::Source::Global, "", "GA"});
    } else {
        columns.push_back({"GF1", Column::Source::Global, "", "GF1"});
    }
    for (Attribute attribute : all_attributes()) attr_block(to_string(attribute));
    return columns;
}

// "/" marks metrics that could not be computed
std::string column_value(const MetricReport& report, const Column& column) {
    switch (column.source) {
        case Column::Source::Global: {
            const auto it = report.global.find(column.key);
            return it == report.global.end() ? "/" : format_percent(it->second);
        }
        case Column::Source::Local: {
            const auto attr = report.local.find(column.attribute);
            if (attr == report.local.end()) return "/";
            const auto it = attr->second.find(column.key);
            return it == attr->second.end() ? "/" : format_percent(it->second);
        }
        case Column::Source::Fairness: {
            const auto attr = report.fairness.find(column.attribute);
            if (attr == report.fairness.end()) return "/";
            const auto it = attr->second.find(column.key);
            return it == attr->second.end() ? "/" : format_percent(it->second.score);
        }
    }
    return "/";
}

std::string model_name(const MetricReport& report) {
    const auto it = report.metadata.find("model");
    return it == report.metadata.end() || it->second.empty() ? "model" : it->second;
}

void render_table(std::ostringstream& out, std::span<const MetricReport> reports, Task task) {
    const auto columns = report_columns(task);
    out << "| Model |";
    for (const auto& column : columns) out << " " << column.title << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) out << "---:|";
    out << "\n";
    for (const auto& report : reports) {
        out << "| " << model_name(report) << " |";
        for (const auto& column : columns) out << " " << column_value(report, column) << " |";
        out << "\n";
    }
}

std::string render_markdown(const MetricReport& report) {
    std::ostringstream out;
    out << "# Evaluation report: " << model_name(report) << "\n\n";
    for (const auto& [key, value] : report.metadata)
        out << "- " << key << ": " << value << "\n";
    out << "\n";
    render_table(out, std::span(&report, 1), report.task);
    if (!report.fairness.empty()) {
        out << "\n## Fairness flags (fair iff score <= "
            << format_percent(kFairnessThreshold) << ")\n\n";
        out << "| Attribute | Metric | Score | Flag |\n|---|---|---:|---|\n";
        for (const auto& [attr, metrics] : report.fairness)
            for (const auto& [name, fs] : metrics)
                out << "| " << attr << " | " << name << " | " << format_percent(fs.score)
                    << " | " << (fs.fair ? "fair" : "unfair") << " |\n";
    }
    if (!report.warnings.empty()) {
        out << "\n## Warnings\n\n";
        for (const auto& warning : report.warnings) out << "- " << warning << "\n";
    }
    return out.str();
}

}  // namespace

std::string render_report(const MetricReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(report).dump(2) + "\n";
    return render_markdown(report);
}

void write_report(const MetricReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
    std::ofstream stream(path, std::ios::binary);
    if (!stream) throw IngestError("cannot write " + path.string());
    stream << render_report(report, format);
}

MetricReport load_report(const std::filesystem::path& path) {
    try {
        return report_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
}

std::string render_leaderboard(std::span<const MetricReport> reports, ReportFormat format) {
    if (reports.empty()) throw Error("render_leaderboard: no reports");
    const Task task = reports.front().task;
    for (const auto& report : reports)
        if (report.task != task) throw Error("render_leaderboard: mixed tasks");

    const std::string primary = task == Task::Va ? "GVA" : "GF1";
    std::vector<const MetricReport*> sorted;
    for (const auto& report : reports) sorted.push_back(&report);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](const MetricReport* a, const MetricReport* b) {
                         const double ga = a->global.count(primary) ? a->global.at(primary)
                                                                    : -std::numeric_limits<double>::infinity();
                         const double gb = b->global.count(primary) ? b->global.at(primary)
                                                                    : -std::numeric_limits<double>::infinity();
                         if (ga != gb) return ga > gb;
                         return model_name(*a) < model_name(*b);
                     });

    if (format == ReportFormat::Json) {
        json out = json::array();
        for (const MetricReport* report : sorted) out.push_back(report_to_json(*report));
        return out.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "# Leaderboard (" << to_string(task) << ", by " << primary << ")\n\n";
    std::vector<MetricReport> ordered;
    for (const MetricReport* report : sorted) ordered.push_back(*report);
    render_table(out, ordered, task);
    return out.str();
}

}  // namespace fairaffect
