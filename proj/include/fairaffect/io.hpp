#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairaffect/types.hpp"

namespace fairaffect {

struct RowRejection {
    std::size_t line = 0;  // 1-based, counting the header
    std::string reason;
};

struct LoadOptions {
    // with strict set, any rejected row raises IngestError listing every
    // diagnosed line; otherwise rejections are returned for inspection
    bool strict = true;
};

struct LoadResult {
    Dataset dataset;
    std::size_t rows_total = 0;              // data rows in the file
    std::size_t rows_dropped_automatic = 0;  // annotation_source != manual
    std::vector<RowRejection> rejections;
    bool synthetic_subjects = false;  // no subject_id column; sample ids reused
};

/// Loads a comma-separated annotation table. Required columns: sample_id,
/// age, gender, race, plus the task columns (expression | au_* | valence,
/// arousal). Optional: subject_id, annotation_source. Column order is
/// free; AU columns are detected by the au_ prefix and may hold 0-5
/// intensities or activation bits.
LoadResult load_annotations(const std::filesystem::path& path, Task task,
                            const LoadOptions& options = {});

/// Loads a prediction table: sample_id plus the task columns. AU
/// predictions must be activation bits.
PredictionSet load_predictions(const std::filesystem::path& path, Task task);

std::string manifest_to_string(const Partition& partition);
Partition manifest_from_string(std::string_view text);
void write_manifest(const Partition& partition, const std::filesystem::path& path);
Partition load_manifest(const std::filesystem::path& path);

enum class ReportFormat { Json, Markdown };
ReportFormat report_format_from_string(std::string_view token);

/// Percent with one decimal: 0.064 -> "6.4".
std::string format_percent(double value);

std::string render_report(const MetricReport& report, ReportFormat format);
void write_report(const MetricReport& report, const std::filesystem::path& path,
                  ReportFormat format);
MetricReport load_report(const std::filesystem::path& path);  // JSON only

/// Multi-model table sorted by the task's primary global metric,
/// descending; ties break lexicographically on the model name. All
/// reports must share one task.
std::string render_leaderboard(std::span<const MetricReport> reports, ReportFormat format);

}  // namespace fairaffect
