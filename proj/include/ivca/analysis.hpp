#ifndef IVCA_ANALYSIS_HPP
#define IVCA_ANALYSIS_HPP

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ivca/records.hpp"

namespace ivca {

struct SessionLog {
    std::string session_id;
    Condition condition = Condition::TrainedLoA;
    std::vector<ObservationRecord> records; // iteration order
};

struct StudyDataset {
    std::vector<SessionLog> sessions;

    /// Group records by session id (first-seen order) and sort each by iteration.
    static StudyDataset from_records(const std::vector<ObservationRecord>& records);
    /// Throws unless every session's iterations are 1..n and its condition is uniform.
    void validate() const;
    std::size_t size() const noexcept { return sessions.size(); }
};

/// Load every *.jsonl under a directory (or a single file).
StudyDataset load_dataset(const std::filesystem::path& path);

double pearson(std::span<const double> xs, std::span<const double> ys);

enum class CorrelationScope { AllPareto, AllObservations, Condition1Pareto, Condition2Pareto };
const char* to_string(CorrelationScope s) noexcept;

/// Indices of a session's records on its own Pareto front (canonical space).
std::vector<std::size_t> session_front(const SessionLog& session);

/// Raw objective rows (mental demand, predictability, usefulness) within a scope.
Eigen::Matrix<double, Eigen::Dynamic, 3> scope_objectives(const StudyDataset& data, CorrelationScope scope);

/// Pairwise Pearson over the three raw objectives. Entries whose pair has zero
/// variance are NaN.
Eigen::Matrix3d correlation_matrix(const StudyDataset& data, CorrelationScope scope);

struct ProgressionRow {
    int iteration = 0;
    int n_sessions = 0;
    double mental_demand = 0.0;
    double predictability = 0.0;
    double usefulness = 0.0;
};

/// Per-iteration means across sessions of one condition that have at least one front member.
std::vector<ProgressionRow> progression_means(const StudyDataset& data, Condition condition);

struct SummaryStats {
    int n = 0;
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
    double iqr = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Type-7 (linear interpolation) sample quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double p);
SummaryStats summarize(std::vector<double> values);

struct ParameterSummary {
    Condition condition = Condition::TrainedLoA;
    int n_front_points = 0;
    /// p1..p3 always; p4 only for the trained condition.
    std::vector<std::pair<std::string, SummaryStats>> parameters;
};

ParameterSummary parameter_summary(const StudyDataset& data, Condition condition);

/// Correlation matrices, progression tables and parameter summaries as JSON + CSV.
/// Scopes or conditions without data are reported as skipped in the JSON index.
nlohmann::json write_report(const StudyDataset& data, const std::filesystem::path& out_dir);

// --- external CSV ingest ----------------------------------------------------

/// Maps schema fields (session_id, condition, iteration, phase, p1..p4, md_raw,
/// pred1_raw, pred2_raw, use1_raw, use2_raw, mental_demand, predictability,
/// usefulness, timestamp, disposition_score, fixed_loa) onto CSV headers.
struct ColumnMap {
    std::map<std::string, std::string> columns;
    /// Raw cell value -> "trained" / "fixed".
    std::map<std::string, std::string> condition_values;
    std::optional<std::string> default_condition;
    std::optional<int> sampling_budget_trained;
    std::optional<int> sampling_budget_fixed;

    static ColumnMap from_json(const nlohmann::json& j);
    static ColumnMap identity();
};

struct IngestSessionEntry {
    std::string session_id;
    Condition condition = Condition::TrainedLoA;
    int n_records = 0;
    std::optional<double> fixed_loa;
    bool p4_filled = false;
};

struct IngestResult {
    std::vector<ObservationRecord> records;
    std::vector<IngestSessionEntry> sessions;

    nlohmann::json manifest() const;
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text);
IngestResult ingest_csv(const std::string& csv_text, const ColumnMap& map);

} // namespace ivca

#endif // IVCA_ANALYSIS_HPP
