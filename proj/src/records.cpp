#include "ivca/records.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "ivca/errors.hpp"

namespace ivca {

using nlohmann::json;

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

ObservationRecord to_record(const Session& session, const Observation& obs)
{
    ObservationRecord r;
    r.session_id = session.id();
    r.condition = session.condition();
    r.iteration = obs.iteration;
    r.phase = obs.phase;
    r.design = obs.design;
    r.raw = obs.response;
    r.objectives = obs.objectives;
    r.timestamp = obs.timestamp;
    return r;
}

std::vector<ObservationRecord> session_records(const Session& session)
{
    std::vector<ObservationRecord> out;
    out.reserve(session.observations().size());
    for (const auto& o : session.observations()) out.push_back(to_record(session, o));
    return out;
}

json to_json(const ObservationRecord& r)
{
    json j;
    j["session_id"] = r.session_id;
    j["condition"] = to_string(r.condition);
    j["iteration"] = r.iteration;
    j["phase"] = to_string(r.phase);
    j["p1"] = r.design.glow;
    j["p2"] = r.design.volume;
    j["p3"] = r.design.transparency;
    j["p4"] = r.design.loa;
    if (r.raw) {
        j["md_raw"] = r.raw->mental_demand_raw;
        j["pred1_raw"] = r.raw->pred_item1_raw;
        j["pred2_raw"] = r.raw->pred_item2_raw;
        j["use1_raw"] = r.raw->use_item1_raw;
        j["use2_raw"] = r.raw->use_item2_raw;
    } else {
        for (const char* k : {"md_raw", "pred1_raw", "pred2_raw", "use1_raw", "use2_raw"}) j[k] = nullptr;
    }
    j["mental_demand"] = r.objectives.mental_demand;
    j["predictability"] = r.objectives.predictability;
    j["usefulness"] = r.objectives.usefulness;
    j["timestamp"] = r.timestamp;
    return j;
}

ObservationRecord record_from_json(const json& j)
{
    try {
        ObservationRecord r;
        r.session_id = j.at("session_id").get<std::string>();
        r.condition = parse_condition(j.at("condition").get<std::string>());
        r.iteration = j.at("iteration").get<int>();
        r.phase = parse_phase(j.at("phase").get<std::string>());
        r.design = {j.at("p1").get<double>(), j.at("p2").get<double>(), j.at("p3").get<double>(),
                    j.at("p4").get<double>()};
        if (j.contains("md_raw") && !j.at("md_raw").is_null()) {
            QuestionnaireResponse q;
            q.mental_demand_raw = j.at("md_raw").get<int>();
            q.pred_item1_raw = j.at("pred1_raw").get<int>();
            q.pred_item2_raw = j.at("pred2_raw").get<int>();
            q.use_item1_raw = j.at("use1_raw").get<int>();
            q.use_item2_raw = j.at("use2_raw").get<int>();
            validate(q);
            r.raw = q;
        }
        r.objectives = {j.at("mental_demand").get<double>(), j.at("predictability").get<double>(),
                        j.at("usefulness").get<double>()};
        validate(r.objectives);
        r.timestamp = j.value("timestamp", std::string{});
        if (r.iteration < 1) throw ValidationError("iteration", "must be at least 1");
        return r;
    } catch (const json::exception& e) {
        throw ValidationError("record", e.what());
    }
}

std::string to_jsonl(const std::vector<ObservationRecord>& records)
{
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<ObservationRecord> parse_jsonl(const std::string& text)
{
    std::vector<ObservationRecord> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("line " + std::to_string(lineno), std::string("malformed JSON: ") + e.what());
        }
        out.push_back(record_from_json(j));
    }
    return out;
}

std::vector<ObservationRecord> read_jsonl(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_jsonl(ss.str());
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ObservationRecord>& records)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << to_jsonl(records);
}

namespace {

std::string csv_escape(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

} // namespace

std::string to_csv(const std::vector<ObservationRecord>& records)
{
    std::string out;
    const auto& fields = record_fields();
    for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + fields[i];
    out += '\n';
    for (const auto& r : records) {
        auto raw = [&](int QuestionnaireResponse::*m) { return r.raw ? std::to_string((*r.raw).*m) : std::string{}; };
        std::vector<std::string> cells{csv_escape(r.session_id),
                                       to_string(r.condition),
                                       std::to_string(r.iteration),
                                       to_string(r.phase),
                                       format_double(r.design.glow),
                                       format_double(r.design.volume),
                                       format_double(r.design.transparency),
                                       format_double(r.design.loa),
                                       raw(&QuestionnaireResponse::mental_demand_raw),
                                       raw(&QuestionnaireResponse::pred_item1_raw),
                                       raw(&QuestionnaireResponse::pred_item2_raw),
                                       raw(&QuestionnaireResponse::use_item1_raw),
                                       raw(&QuestionnaireResponse::use_item2_raw),
                                       format_double(r.objectives.mental_demand),
                                       format_double(r.objectives.predictability),
                                       format_double(r.objectives.usefulness),
                                       csv_escape(r.timestamp)};
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
        out += '\n';
    }
    return out;
}

json session_descriptor(const Session& s)
{
    json j;
    j["session_id"] = s.id();
    j["condition"] = to_string(s.condition());
    j["seed"] = s.seed();
    j["sampling_budget"] = s.sampling_budget();
    j["optimization_budget"] = s.optimization_budget();
    j["disposition_score"] = s.disposition_score() ? json(*s.disposition_score()) : json(nullptr);
    j["fixed_loa"] = s.fixed_loa_step() ? json(*s.fixed_loa_step()) : json(nullptr);
    j["phase"] = to_string(s.phase());
    j["observations"] = s.observations().size();
    j["acquisition"] = {{"n_mc_samples", s.config().acquisition.n_mc_samples},
                        {"n_candidates", s.config().acquisition.n_candidates},
                        {"batch_size", s.config().acquisition.batch_size}};
    return j;
}

SessionConfig config_from_descriptor(const json& j)
{
    try {
        SessionConfig c;
        c.condition = parse_condition(j.at("condition").get<std::string>());
        c.seed = j.value("seed", std::uint64_t{3});
        if (j.contains("sampling_budget") && !j["sampling_budget"].is_null())
            c.sampling_budget = j["sampling_budget"].get<int>();
        if (j.contains("optimization_budget") && !j["optimization_budget"].is_null())
            c.optimization_budget = j["optimization_budget"].get<int>();
        if (j.contains("disposition_score") && !j["disposition_score"].is_null())
            c.disposition_score = j["disposition_score"].get<int>();
        if (j.contains("acquisition")) {
            const json& a = j["acquisition"];
            c.acquisition.n_mc_samples = a.value("n_mc_samples", c.acquisition.n_mc_samples);
            c.acquisition.n_candidates = a.value("n_candidates", c.acquisition.n_candidates);
            c.acquisition.batch_size = a.value("batch_size", c.acquisition.batch_size);
        }
        c.acquisition.seed = c.seed;
        return c;
    } catch (const json::exception& e) {
        throw ValidationError("session", e.what());
    }
}

json to_json(const PresentationDescriptor& d)
{
    return {{"hue", d.hue},
            {"glow_intensity", d.glow_intensity},
            {"alert_gain", d.alert_gain},
            {"symbol_transparency", d.symbol_transparency},
            {"symbol_opacity", d.symbol_opacity},
            {"loa_level", d.loa_level},
            {"level_name", d.level_name},
            {"script", d.script},
            {"lighting_visible", d.lighting_visible},
            {"audible", d.audible},
            {"symbol_visible", d.symbol_visible}};
}

json to_json(const DesignPoint& d)
{
    return {{"p1", d.glow}, {"p2", d.volume}, {"p3", d.transparency}, {"p4", d.loa}};
}

json to_json(const ScenarioLogEntry& e)
{
    return {{"t_s", e.t_s},   {"kind", e.kind},     {"detail", e.detail},          {"level", e.level},
            {"p1", e.glow}, {"p2", e.volume}, {"p3", e.transparency}};
}

JsonlAppender::JsonlAppender(const std::filesystem::path& path) : path_(path)
{
    file_ = std::fopen(path.c_str(), "a");
    if (!file_) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for append");
}

JsonlAppender::~JsonlAppender()
{
    if (file_) std::fclose(file_);
}

void JsonlAppender::append(const json& line)
{
    const std::string s = line.dump() + "\n";
    if (std::fwrite(s.data(), 1, s.size(), file_) != s.size() || std::fflush(file_) != 0 ||
        ::fsync(::fileno(file_)) != 0)
        throw Error(ErrorCode::Io, "append to " + path_.string() + " failed");
}

} // namespace ivca
