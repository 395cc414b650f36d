#ifndef IVCA_RECORDS_HPP
#define IVCA_RECORDS_HPP

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivca/scenario.hpp"
#include "ivca/session.hpp"

namespace ivca {

/// Wire/disk form of one observation. Raw questionnaire items are optional because
/// external datasets may only carry the scored objectives.
struct ObservationRecord {
    std::string session_id;
    Condition condition = Condition::TrainedLoA;
    int iteration = 0;
    Phase phase = Phase::Sampling;
    DesignPoint design;
    std::optional<QuestionnaireResponse> raw;
    ObjectiveVector objectives;
    std::string timestamp;

    bool operator==(const ObservationRecord&) const = default;
};

/// Column order shared by JSONL keys and the CSV header.
inline const std::vector<std::string>& record_fields()
{
    static const std::vector<std::string> fields{
        "session_id", "condition", "iteration",  "phase",         "p1",           "p2",
        "p3",         "p4",        "md_raw",     "pred1_raw",     "pred2_raw",    "use1_raw",
        "use2_raw",   "mental_demand", "predictability", "usefulness", "timestamp"};
    return fields;
}

ObservationRecord to_record(const Session& session, const Observation& obs);
std::vector<ObservationRecord> session_records(const Session& session);

nlohmann::json to_json(const ObservationRecord& rec);
ObservationRecord record_from_json(const nlohmann::json& j);

std::string to_jsonl(const std::vector<ObservationRecord>& records);
std::vector<ObservationRecord> parse_jsonl(const std::string& text);
std::vector<ObservationRecord> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<ObservationRecord>& records);

std::string to_csv(const std::vector<ObservationRecord>& records);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Session descriptor persisted next to the log so a session can be rebuilt by replay.
nlohmann::json session_descriptor(const Session& session);
SessionConfig config_from_descriptor(const nlohmann::json& j);

nlohmann::json to_json(const PresentationDescriptor& d);
nlohmann::json to_json(const DesignPoint& d);
nlohmann::json to_json(const ScenarioLogEntry& e);

/// Append-only JSONL file. Each append is flushed and fsync'd before returning.
class JsonlAppender {
public:
    explicit JsonlAppender(const std::filesystem::path& path);
    ~JsonlAppender();
    JsonlAppender(const JsonlAppender&) = delete;
    JsonlAppender& operator=(const JsonlAppender&) = delete;

    void append(const nlohmann::json& line);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
};

} // namespace ivca

#endif // IVCA_RECORDS_HPP
