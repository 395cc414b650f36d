#include "ivca/service.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "ivca/errors.hpp"
#include "ivca/scenario.hpp"

namespace ivca {

using nlohmann::json;
namespace fs = std::filesystem;

struct SessionService::Entry {
    Entry(Session s, const fs::path& log) : session(std::move(s)), appender(log) {}
    std::mutex mutex;
    Session session;
    JsonlAppender appender;
};

namespace {

int status_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Validation: return 422;
    case ErrorCode::InsufficientData: return 409;
    case ErrorCode::Protocol: return 409;
    case ErrorCode::SessionComplete: return 410;
    case ErrorCode::NotFound: return 404;
    default: return 500;
    }
}

HttpResponse json_response(int status, const json& j)
{
    return {status, j.dump(), "application/json"};
}

HttpResponse error_response(const Error& e)
{
    json j{{"code", to_string(e.code())}, {"message", e.what()}};
    if (auto* v = dynamic_cast<const ValidationError*>(&e)) j["field"] = v->field();
    return json_response(status_for(e.code()), j);
}

json pending_json(const Session& s, const PendingDesign& p)
{
    const auto pres = presentation_descriptor(p.design);
    json j{{"session_id", s.id()},
           {"iteration", p.iteration},
           {"phase", to_string(p.phase)},
           {"total_iterations", s.total_budget()},
           {"design", to_json(p.design)},
           {"presentation", to_json(pres)},
           {"script", pres.script}};
    if (p.phase == Phase::Optimizing && s.last_proposal())
        j["acquisition_value"] = s.last_proposal()->acquisition_value;
    return j;
}

json parse_body(const std::string& body)
{
    if (body.empty()) return json::object();
    try {
        json j = json::parse(body);
        if (!j.is_object()) throw ValidationError("body", "expected a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw ValidationError("body", std::string("malformed JSON: ") + e.what());
    }
}

template <typename T>
T field(const json& j, const char* name)
{
    try {
        return j.at(name).get<T>();
    } catch (const json::out_of_range&) {
        throw ValidationError(name, "missing");
    } catch (const json::exception&) {
        throw ValidationError(name, "wrong type");
    }
}

int int_field(const json& j, const char* name)
{
    const json& v = j.contains(name) ? j.at(name) : throw ValidationError(name, "missing");
    if (!v.is_number_integer()) throw ValidationError(name, "must be an integer");
    return v.get<int>();
}

std::vector<std::string> split_path(const std::string& path)
{
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '/'))
        if (!part.empty()) parts.push_back(part);
    return parts;
}

void write_atomically(const fs::path& p, const std::string& text)
{
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

} // namespace

bool valid_session_id(const std::string& id)
{
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; });
}

SessionService::SessionService(fs::path data_dir) : data_dir_(std::move(data_dir))
{
    fs::create_directories(data_dir_);
    load_existing();
}

SessionService::~SessionService() = default;

std::size_t SessionService::session_count() const
{
    std::shared_lock lock(map_mutex_);
    return sessions_.size();
}

void SessionService::load_existing()
{
    std::vector<fs::path> descriptors;
    for (const auto& entry : fs::directory_iterator(data_dir_)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 13 && name.ends_with(".session.json")) descriptors.push_back(entry.path());
    }
    std::sort(descriptors.begin(), descriptors.end());
    for (const auto& d : descriptors) {
        std::ifstream in(d);
        json desc;
        try {
            desc = json::parse(in);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Io, "corrupt session descriptor " + d.string() + ": " + e.what());
        }
        const std::string id = field<std::string>(desc, "session_id");
        Session s(id, config_from_descriptor(desc));
        const fs::path log = data_dir_ / (id + ".jsonl");
        if (fs::exists(log)) {
            for (const auto& rec : read_jsonl(log)) {
                const auto& p = s.next_design();
                if (!rec.raw) throw Error(ErrorCode::Io, "log " + log.string() + " lacks raw questionnaire items");
                if (rec.iteration != p.iteration || !(rec.design == p.design))
                    throw Error(ErrorCode::Io, "log " + log.string() + " diverges from replay at iteration " +
                                                   std::to_string(rec.iteration));
                s.submit_rating(*rec.raw, rec.timestamp);
            }
        }
        sessions_.emplace(id, std::make_shared<Entry>(std::move(s), log));
    }
}

std::string SessionService::fresh_id()
{
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    for (;;) {
        char buf[20];
        std::snprintf(buf, sizeof buf, "s%012llx", static_cast<unsigned long long>(gen() & 0xffffffffffffULL));
        if (!sessions_.count(buf)) return buf;
    }
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) const
{
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "unknown session '" + id + "'");
    return it->second;
}

HttpResponse SessionService::handle(const std::string& method, const std::string& path,
                                    const std::map<std::string, std::string>& query, const std::string& body)
{
    try {
        const auto parts = split_path(path);
        if (parts.size() == 1 && parts[0] == "healthz" && method == "GET")
            return json_response(200, {{"status", "ok"}, {"sessions", session_count()}});
        if (parts.empty() || parts[0] != "sessions")
            return json_response(404, {{"code", "not_found"}, {"message", "no route for " + path}});
        if (parts.size() == 1) {
            if (method == "POST") return create_session(body);
            if (method == "GET") {
                std::shared_lock lock(map_mutex_);
                json list = json::array();
                for (const auto& [id, e] : sessions_) list.push_back(id);
                return json_response(200, {{"sessions", list}});
            }
        }
        if (parts.size() >= 2) {
            auto e = find(parts[1]);
            std::lock_guard lock(e->mutex);
            if (parts.size() == 2 && method == "GET") return json_response(200, session_descriptor(e->session));
            if (parts.size() == 3) {
                const std::string& op = parts[2];
                if (op == "next" && method == "GET") return next_design(*e);
                if (op == "ratings" && method == "POST") return submit_rating(*e, body);
                if (op == "pareto" && method == "GET") return pareto(*e);
                if (op == "export" && method == "GET") return export_log(*e, query);
                if (op != "next" && op != "ratings" && op != "pareto" && op != "export")
                    return json_response(404, {{"code", "not_found"}, {"message", "no route for " + path}});
            }
            if (parts.size() > 3)
                return json_response(404, {{"code", "not_found"}, {"message", "no route for " + path}});
        }
        return json_response(405, {{"code", "method_not_allowed"}, {"message", method + " " + path}});
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return json_response(500, {{"code", "internal_error"}, {"message", e.what()}});
    }
}

HttpResponse SessionService::create_session(const std::string& body)
{
    const json j = parse_body(body);
    SessionConfig cfg;
    cfg.condition = parse_condition(field<std::string>(j, "condition"));
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("seed", "must be a non-negative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("disposition_score") && !j["disposition_score"].is_null())
        cfg.disposition_score = int_field(j, "disposition_score");
    if (j.contains("budgets")) {
        const json& b = j["budgets"];
        if (!b.is_object()) throw ValidationError("budgets", "expected {sampling, optimization}");
        if (b.contains("sampling")) cfg.sampling_budget = int_field(b, "sampling");
        if (b.contains("optimization")) cfg.optimization_budget = int_field(b, "optimization");
    }
    if (j.contains("sampling_budget")) cfg.sampling_budget = int_field(j, "sampling_budget");
    if (j.contains("optimization_budget")) cfg.optimization_budget = int_field(j, "optimization_budget");
    if (j.contains("n_mc_samples")) cfg.acquisition.n_mc_samples = int_field(j, "n_mc_samples");
    if (j.contains("n_candidates")) cfg.acquisition.n_candidates = int_field(j, "n_candidates");
    cfg.acquisition.seed = cfg.seed;

    std::unique_lock lock(map_mutex_);
    std::string id;
    if (j.contains("session_id")) {
        id = field<std::string>(j, "session_id");
        if (!valid_session_id(id)) throw ValidationError("session_id", "use 1-64 characters from [A-Za-z0-9_-]");
        if (sessions_.count(id)) throw ProtocolError("session '" + id + "' already exists");
    } else {
        id = fresh_id();
    }
    Session s(id, cfg);
    write_atomically(data_dir_ / (id + ".session.json"), session_descriptor(s).dump(2));
    auto entry = std::make_shared<Entry>(std::move(s), data_dir_ / (id + ".jsonl"));
    json out = session_descriptor(entry->session);
    sessions_.emplace(id, std::move(entry));
    return json_response(201, out);
}

HttpResponse SessionService::next_design(Entry& e)
{
    Session& s = e.session;
    if (s.phase() == Phase::Complete) throw SessionCompleteError("session " + s.id() + " is complete");
    if (s.pending()) {
        json j{{"code", to_string(ErrorCode::Protocol)},
               {"message", "a design was already issued for iteration " + std::to_string(s.pending()->iteration) +
                               "; submit its rating first"},
               {"pending", pending_json(s, *s.pending())}};
        return json_response(409, j);
    }
    const PendingDesign& p = s.next_design();
    return json_response(200, pending_json(s, p));
}

HttpResponse SessionService::submit_rating(Entry& e, const std::string& body)
{
    Session& s = e.session;
    const json j = parse_body(body);
    if (s.phase() == Phase::Complete) throw SessionCompleteError("session " + s.id() + " is complete");
    if (!s.pending()) throw ProtocolError("no design is pending for session " + s.id() + "; request /next first");

    QuestionnaireResponse q;
    q.mental_demand_raw = int_field(j, "md_raw");
    q.pred_item1_raw = int_field(j, "pred1_raw");
    q.pred_item2_raw = int_field(j, "pred2_raw");
    q.use_item1_raw = int_field(j, "use1_raw");
    q.use_item2_raw = int_field(j, "use2_raw");
    validate(q);
    std::string ts = j.contains("timestamp") ? field<std::string>(j, "timestamp") : now_iso8601();

    // durable first, then in memory
    ObservationRecord rec;
    rec.session_id = s.id();
    rec.condition = s.condition();
    rec.iteration = s.pending()->iteration;
    rec.phase = s.pending()->phase;
    rec.design = s.pending()->design;
    rec.raw = q;
    rec.objectives = score_questionnaire(q);
    rec.timestamp = ts;
    e.appender.append(to_json(rec));
    s.submit_rating(q, ts);

    return json_response(200, {{"observation", to_json(rec)},
                                {"phase", to_string(s.phase())},
                                {"remaining", s.total_budget() - static_cast<int>(s.observations().size())}});
}

HttpResponse SessionService::pareto(Entry& e)
{
    const Session& s = e.session;
    json j{{"session_id", s.id()}, {"points", json::array()}, {"reference_point", nullptr}};
    if (s.observations().empty()) return json_response(200, j);
    const ParetoFront f = session_pareto(s);
    j["reference_point"] = {f.reference_point[0], f.reference_point[1], f.reference_point[2]};
    for (std::size_t k = 0; k < f.observation_indices.size(); ++k) {
        const auto& o = s.observations()[f.observation_indices[k]];
        j["points"].push_back({{"iteration", o.iteration},
                               {"design", to_json(o.design)},
                               {"objectives",
                                {{"mental_demand", o.objectives.mental_demand},
                                 {"predictability", o.objectives.predictability},
                                 {"usefulness", o.objectives.usefulness}}},
                               {"canonical", {o.canonical.y1, o.canonical.y2, o.canonical.y3}}});
    }
    return json_response(200, j);
}

HttpResponse SessionService::export_log(Entry& e, const std::map<std::string, std::string>& query)
{
    std::string format = "jsonl";
    if (auto it = query.find("format"); it != query.end()) format = it->second;
    const auto records = session_records(e.session);
    if (format == "jsonl") return {200, to_jsonl(records), "application/x-ndjson"};
    if (format == "csv") return {200, to_csv(records), "text/csv"};
    throw ValidationError("format", "expected 'jsonl' or 'csv'");
}

void SessionService::mount(httplib::Server& server)
{
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query.emplace(k, v);
        const HttpResponse r = handle(req.method, req.path, query, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type.c_str());
    };
    server.Get(R"(/.*)", route);
    server.Post(R"(/.*)", route);
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
}

void serve(SessionService& service, const std::string& host, int port)
{
    httplib::Server server;
    service.mount(server);
    if (!server.listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace ivca
