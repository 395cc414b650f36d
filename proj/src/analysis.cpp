#include "ivca/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "ivca/errors.hpp"
#include "ivca/pareto.hpp"

namespace ivca {

using nlohmann::json;

StudyDataset StudyDataset::from_records(const std::vector<ObservationRecord>& records)
{
    StudyDataset data;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, inserted] = index.emplace(r.session_id, data.sessions.size());
        if (inserted) data.sessions.push_back({r.session_id, r.condition, {}});
        data.sessions[it->second].records.push_back(r);
    }
    for (auto& s : data.sessions)
        std::stable_sort(s.records.begin(), s.records.end(),
                         [](const auto& a, const auto& b) { return a.iteration < b.iteration; });
    return data;
}

void StudyDataset::validate() const
{
    for (const auto& s : sessions) {
        for (std::size_t i = 0; i < s.records.size(); ++i) {
            if (s.records[i].iteration != static_cast<int>(i) + 1)
                throw ValidationError("iteration", "session " + s.session_id + " iterations are not contiguous from 1");
            if (s.records[i].condition != s.condition)
                throw ValidationError("condition", "session " + s.session_id + " mixes conditions");
        }
    }
}

StudyDataset load_dataset(const std::filesystem::path& path)
{
    namespace fs = std::filesystem;
    std::vector<ObservationRecord> records;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            auto part = read_jsonl(f);
            records.insert(records.end(), part.begin(), part.end());
        }
    } else if (fs::exists(path)) {
        records = read_jsonl(path);
    } else {
        throw Error(ErrorCode::Io, "no such file or directory: " + path.string());
    }
    StudyDataset data = StudyDataset::from_records(records);
    data.validate();
    return data;
}

double pearson(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size()) throw ValidationError("pearson", "inputs must have equal length");
    if (xs.size() < 2) throw InsufficientDataError("pearson needs at least 2 pairs");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("correlation undefined: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

const char* to_string(CorrelationScope s) noexcept
{
    switch (s) {
    case CorrelationScope::AllPareto: return "all_pareto";
    case CorrelationScope::AllObservations: return "all_observations";
    case CorrelationScope::Condition1Pareto: return "condition1_pareto";
    case CorrelationScope::Condition2Pareto: return "condition2_pareto";
    }
    return "unknown";
}

std::vector<std::size_t> session_front(const SessionLog& session)
{
    Eigen::Matrix<double, Eigen::Dynamic, 3> pts(static_cast<Eigen::Index>(session.records.size()), 3);
    for (std::size_t i = 0; i < session.records.size(); ++i)
        pts.row(static_cast<Eigen::Index>(i)) = to_canonical(session.records[i].objectives).array().transpose();
    std::vector<std::size_t> out;
    for (Eigen::Index i : pareto_filter(pts)) out.push_back(static_cast<std::size_t>(i));
    return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> scope_objectives(const StudyDataset& data, CorrelationScope scope)
{
    std::vector<const ObservationRecord*> rows;
    for (const auto& s : data.sessions) {
        if (scope == CorrelationScope::Condition1Pareto && s.condition != Condition::TrainedLoA) continue;
        if (scope == CorrelationScope::Condition2Pareto && s.condition != Condition::FixedLoA) continue;
        if (scope == CorrelationScope::AllObservations) {
            for (const auto& r : s.records) rows.push_back(&r);
        } else {
            for (std::size_t i : session_front(s)) rows.push_back(&s.records[i]);
        }
    }
    Eigen::Matrix<double, Eigen::Dynamic, 3> out(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& o = rows[i]->objectives;
        out.row(static_cast<Eigen::Index>(i)) << o.mental_demand, o.predictability, o.usefulness;
    }
    return out;
}

Eigen::Matrix3d correlation_matrix(const StudyDataset& data, CorrelationScope scope)
{
    const auto obj = scope_objectives(data, scope);
    if (obj.rows() < 2)
        throw InsufficientDataError(std::string("scope ") + to_string(scope) + " has fewer than 2 observations");

    std::array<std::vector<double>, 3> cols;
    for (int k = 0; k < 3; ++k) cols[k].assign(obj.col(k).data(), obj.col(k).data() + obj.rows());

    Eigen::Matrix3d r;
    for (int a = 0; a < 3; ++a) {
        for (int b = a; b < 3; ++b) {
            double v;
            try {
                v = a == b ? (pearson(cols[a], cols[a]), 1.0) : pearson(cols[a], cols[b]);
            } catch (const UndefinedCorrelationError&) {
                v = std::numeric_limits<double>::quiet_NaN();
            }
            r(a, b) = r(b, a) = v;
        }
    }
    return r;
}

std::vector<ProgressionRow> progression_means(const StudyDataset& data, Condition condition)
{
    std::vector<const SessionLog*> cohort;
    for (const auto& s : data.sessions)
        if (s.condition == condition && !s.records.empty() && !session_front(s).empty()) cohort.push_back(&s);
    if (cohort.empty())
        throw InsufficientDataError(std::string("no qualifying sessions for condition ") + to_string(condition));

    std::size_t max_len = 0;
    for (const auto* s : cohort) max_len = std::max(max_len, s->records.size());

    std::vector<ProgressionRow> rows;
    for (std::size_t i = 0; i < max_len; ++i) {
        ProgressionRow row;
        row.iteration = static_cast<int>(i) + 1;
        for (const auto* s : cohort) {
            if (i >= s->records.size()) continue;
            const auto& o = s->records[i].objectives;
            row.mental_demand += o.mental_demand;
            row.predictability += o.predictability;
            row.usefulness += o.usefulness;
            ++row.n_sessions;
        }
        row.mental_demand /= row.n_sessions;
        row.predictability /= row.n_sessions;
        row.usefulness /= row.n_sessions;
        rows.push_back(row);
    }
    return rows;
}

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) throw InsufficientDataError("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

SummaryStats summarize(std::vector<double> v)
{
    if (v.empty()) throw InsufficientDataError("summary of empty sample");
    std::sort(v.begin(), v.end());
    SummaryStats s;
    s.n = static_cast<int>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / s.n;
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
    s.median = quantile_sorted(v, 0.5);
    s.iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
    s.min = v.front();
    s.max = v.back();
    return s;
}

ParameterSummary parameter_summary(const StudyDataset& data, Condition condition)
{
    std::array<std::vector<double>, 4> values;
    for (const auto& s : data.sessions) {
        if (s.condition != condition) continue;
        for (std::size_t i : session_front(s)) {
            const auto& d = s.records[i].design;
            values[0].push_back(d.glow);
            values[1].push_back(d.volume);
            values[2].push_back(d.transparency);
            values[3].push_back(d.loa);
        }
    }
    if (values[0].empty())
        throw InsufficientDataError(std::string("no Pareto-front designs for condition ") + to_string(condition));

    ParameterSummary out;
    out.condition = condition;
    out.n_front_points = static_cast<int>(values[0].size());
    const char* names[] = {"p1", "p2", "p3", "p4"};
    const int n_params = condition == Condition::TrainedLoA ? 4 : 3;
    for (int k = 0; k < n_params; ++k) out.parameters.emplace_back(names[k], summarize(values[k]));
    return out;
}

// --- report emission ----------------------------------------------------------

namespace {

json nullable(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json stats_json(const SummaryStats& s)
{
    return {{"n", s.n},     {"mean", s.mean}, {"median", s.median}, {"sd", s.sd},
            {"iqr", s.iqr}, {"min", s.min},   {"max", s.max}};
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    out << text;
}

std::string cell(double v)
{
    return std::isfinite(v) ? format_double(v) : std::string{};
}

const char* kObjectiveNames[] = {"mental_demand", "predictability", "usefulness"};
const char* kParameterLabels[] = {"p1: Interior Lighting Glow", "p2: Auditory Alert Volume",
                                  "p3: Symbol Transparency", "p4: Level of Autonomy (LoA)"};

} // namespace

json write_report(const StudyDataset& data, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    json index;
    index["sessions"] = data.sessions.size();
    std::size_t n_records = 0;
    for (const auto& s : data.sessions) n_records += s.records.size();
    index["records"] = n_records;

    json corr = json::object();
    for (auto scope : {CorrelationScope::AllPareto, CorrelationScope::AllObservations,
                       CorrelationScope::Condition1Pareto, CorrelationScope::Condition2Pareto}) {
        const std::string name = to_string(scope);
        try {
            const Eigen::Matrix3d m = correlation_matrix(data, scope);
            json jm = json::array();
            std::string csv = "objective,mental_demand,predictability,usefulness\n";
            for (int a = 0; a < 3; ++a) {
                json row = json::array();
                csv += kObjectiveNames[a];
                for (int b = 0; b < 3; ++b) {
                    row.push_back(nullable(m(a, b)));
                    csv += "," + cell(m(a, b));
                }
                jm.push_back(row);
                csv += "\n";
            }
            corr[name] = {{"n", scope_objectives(data, scope).rows()}, {"matrix", jm}};
            write_file(out_dir / ("correlation_" + name + ".csv"), csv);
        } catch (const InsufficientDataError& e) {
            corr[name] = {{"skipped", e.what()}};
        }
    }
    write_file(out_dir / "correlation.json", corr.dump(2));
    index["correlation"] = corr;

    json prog = json::object();
    json summary = json::object();
    std::map<Condition, ParameterSummary> summaries;
    for (auto cond : {Condition::TrainedLoA, Condition::FixedLoA}) {
        const std::string name = to_string(cond);
        try {
            const auto rows = progression_means(data, cond);
            json jr = json::array();
            std::string csv = "iteration,n_sessions,mental_demand,predictability,usefulness\n";
            for (const auto& r : rows) {
                jr.push_back({{"iteration", r.iteration},
                              {"n_sessions", r.n_sessions},
                              {"mental_demand", r.mental_demand},
                              {"predictability", r.predictability},
                              {"usefulness", r.usefulness}});
                csv += std::to_string(r.iteration) + "," + std::to_string(r.n_sessions) + "," +
                       format_double(r.mental_demand) + "," + format_double(r.predictability) + "," +
                       format_double(r.usefulness) + "\n";
            }
            prog[name] = jr;
            write_file(out_dir / ("progression_" + name + ".csv"), csv);
        } catch (const InsufficientDataError& e) {
            prog[name] = {{"skipped", e.what()}};
        }
        try {
            auto ps = parameter_summary(data, cond);
            json jp = {{"n_front_points", ps.n_front_points}};
            for (const auto& [param, st] : ps.parameters) jp[param] = stats_json(st);
            summary[name] = jp;
            summaries.emplace(cond, std::move(ps));
        } catch (const InsufficientDataError& e) {
            summary[name] = {{"skipped", e.what()}};
        }
    }
    write_file(out_dir / "progression.json", prog.dump(2));
    write_file(out_dir / "parameter_summary.json", summary.dump(2));
    index["progression"] = prog;
    index["parameter_summary"] = summary;

    // Trained and fixed side by side, one row per parameter
    std::string table = "parameter";
    for (const char* c : {"trained", "fixed"})
        for (const char* s : {"mean", "median", "sd", "iqr", "min", "max"}) table += std::string(",") + c + "_" + s;
    table += "\n";
    for (int k = 0; k < 4; ++k) {
        table += kParameterLabels[k];
        for (auto cond : {Condition::TrainedLoA, Condition::FixedLoA}) {
            const SummaryStats* st = nullptr;
            if (auto it = summaries.find(cond); it != summaries.end() && k < static_cast<int>(it->second.parameters.size()))
                st = &it->second.parameters[static_cast<std::size_t>(k)].second;
            for (int c = 0; c < 6; ++c) {
                table += ",";
                if (!st) {
                    table += "-";
                    continue;
                }
                const double vals[] = {st->mean, st->median, st->sd, st->iqr, st->min, st->max};
                table += format_double(vals[c]);
            }
        }
        table += "\n";
    }
    write_file(out_dir / "parameter_summary.csv", table);

    // front members for external plotting
    std::string pts = "session_id,condition,iteration,p1,p2,p3,p4,mental_demand,predictability,usefulness\n";
    for (const auto& s : data.sessions) {
        for (std::size_t i : session_front(s)) {
            const auto& r = s.records[i];
            pts += s.session_id + "," + to_string(s.condition) + "," + std::to_string(r.iteration) + "," +
                   format_double(r.design.glow) + "," + format_double(r.design.volume) + "," +
                   format_double(r.design.transparency) + "," + format_double(r.design.loa) + "," +
                   format_double(r.objectives.mental_demand) + "," + format_double(r.objectives.predictability) +
                   "," + format_double(r.objectives.usefulness) + "\n";
        }
    }
    write_file(out_dir / "pareto_points.csv", pts);

    write_file(out_dir / "report.json", index.dump(2));
    return index;
}

// --- ingest -------------------------------------------------------------------

ColumnMap ColumnMap::from_json(const json& j)
{
    static const std::set<std::string> known{
        "session_id", "condition", "iteration", "phase", "p1", "p2", "p3", "p4", "md_raw", "pred1_raw",
        "pred2_raw", "use1_raw", "use2_raw", "mental_demand", "predictability", "usefulness", "timestamp",
        "disposition_score", "fixed_loa"};
    ColumnMap m;
    try {
        const json& cols = j.contains("columns") ? j.at("columns") : j;
        for (auto it = cols.begin(); it != cols.end(); ++it) {
            if (!known.count(it.key())) {
                if (j.contains("columns")) throw ValidationError("column map", "unknown schema field '" + it.key() + "'");
                continue;
            }
            m.columns[it.key()] = it.value().get<std::string>();
        }
        if (j.contains("condition_values"))
            for (auto it = j["condition_values"].begin(); it != j["condition_values"].end(); ++it)
                m.condition_values[it.key()] = it.value().get<std::string>();
        if (j.contains("default_condition")) m.default_condition = j["default_condition"].get<std::string>();
        if (j.contains("sampling_budget_trained")) m.sampling_budget_trained = j["sampling_budget_trained"].get<int>();
        if (j.contains("sampling_budget_fixed")) m.sampling_budget_fixed = j["sampling_budget_fixed"].get<int>();
    } catch (const json::exception& e) {
        throw ValidationError("column map", e.what());
    }
    return m;
}

ColumnMap ColumnMap::identity()
{
    ColumnMap m;
    for (const auto& f : record_fields()) m.columns[f] = f;
    return m;
}

json IngestResult::manifest() const
{
    json j;
    j["records"] = records.size();
    j["sessions"] = json::array();
    json filled = json::array();
    for (const auto& s : sessions) {
        j["sessions"].push_back({{"session_id", s.session_id},
                                 {"condition", to_string(s.condition)},
                                 {"n_records", s.n_records},
                                 {"fixed_loa", s.fixed_loa ? json(*s.fixed_loa) : json(nullptr)},
                                 {"p4_filled", s.p4_filled}});
        if (s.p4_filled) filled.push_back(s.session_id);
    }
    j["p4_filled_sessions"] = filled;
    return j;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"': quoted = true; any = true; break;
        case ',': row.push_back(std::move(field)); field.clear(); any = true; break;
        case '\r': break;
        case '\n':
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
            break;
        default: field += c; any = true;
        }
    }
    if (quoted) throw ValidationError("csv", "unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double to_real(const std::string& s, const std::string& where)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(where, "not a number: '" + s + "'");
    }
}

int to_int(const std::string& s, const std::string& where)
{
    const double v = to_real(s, where);
    if (v != std::round(v)) throw ValidationError(where, "not an integer: '" + s + "'");
    return static_cast<int>(v);
}

} // namespace

IngestResult ingest_csv(const std::string& csv_text, const ColumnMap& map)
{
    const auto table = parse_csv(csv_text);
    if (table.empty()) throw InsufficientDataError("CSV has no header");
    const auto& header = table.front();

    std::map<std::string, std::size_t> col_index;
    for (const auto& [field, name] : map.columns) {
        auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return trim(h) == name; });
        if (it != header.end()) col_index[field] = static_cast<std::size_t>(it - header.begin());
    }
    for (const char* req : {"session_id", "p1", "p2", "p3"})
        if (!col_index.count(req)) throw ValidationError("column map", std::string("required field '") + req + "' not mapped to a CSV column");
    if (!col_index.count("condition") && !map.default_condition)
        throw ValidationError("column map", "map 'condition' or set default_condition");

    const bool has_raw = col_index.count("md_raw") && col_index.count("pred1_raw") && col_index.count("pred2_raw") &&
                         col_index.count("use1_raw") && col_index.count("use2_raw");
    const bool has_derived =
        col_index.count("mental_demand") && col_index.count("predictability") && col_index.count("usefulness");
    if (!has_raw && !has_derived)
        throw ValidationError("column map", "map either all five raw items or the three scored objectives");

    struct Pending {
        ObservationRecord rec;
        bool has_iteration = false;
        bool has_phase = false;
        bool has_p4 = false;
        std::optional<double> fixed_loa;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<Pending>> by_session;

    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        const std::string where = "row " + std::to_string(r + 1);
        auto get = [&](const std::string& field) -> std::optional<std::string> {
            auto it = col_index.find(field);
            if (it == col_index.end() || it->second >= row.size()) return std::nullopt;
            std::string v = trim(row[it->second]);
            if (v.empty() || v == "NA" || v == "-") return std::nullopt;
            return v;
        };
        auto need = [&](const std::string& field) {
            auto v = get(field);
            if (!v) throw ValidationError(where + " " + field, "missing value");
            return *v;
        };

        Pending p;
        p.rec.session_id = need("session_id");
        std::string cond = get("condition").value_or(map.default_condition.value_or(""));
        if (auto it = map.condition_values.find(cond); it != map.condition_values.end()) cond = it->second;
        p.rec.condition = parse_condition(cond);
        if (auto v = get("iteration")) {
            p.rec.iteration = to_int(*v, where + " iteration");
            p.has_iteration = true;
        }
        if (auto v = get("phase")) {
            p.rec.phase = parse_phase(*v);
            p.has_phase = true;
        }
        p.rec.design.glow = to_real(need("p1"), where + " p1");
        p.rec.design.volume = to_real(need("p2"), where + " p2");
        p.rec.design.transparency = to_real(need("p3"), where + " p3");
        if (auto v = get("p4")) {
            p.rec.design.loa = to_real(*v, where + " p4");
            p.has_p4 = true;
        }
        if (auto v = get("fixed_loa")) p.fixed_loa = to_real(*v, where + " fixed_loa");
        else if (auto d = get("disposition_score")) p.fixed_loa = disposition_to_loa(to_int(*d, where + " disposition_score"));

        if (has_raw && get("md_raw")) {
            QuestionnaireResponse q;
            q.mental_demand_raw = to_int(need("md_raw"), where + " md_raw");
            q.pred_item1_raw = to_int(need("pred1_raw"), where + " pred1_raw");
            q.pred_item2_raw = to_int(need("pred2_raw"), where + " pred2_raw");
            q.use_item1_raw = to_int(need("use1_raw"), where + " use1_raw");
            q.use_item2_raw = to_int(need("use2_raw"), where + " use2_raw");
            validate(q);
            p.rec.raw = q;
            p.rec.objectives = score_questionnaire(q);
        }
        if (has_derived && get("mental_demand")) {
            p.rec.objectives = {to_real(need("mental_demand"), where + " mental_demand"),
                                to_real(need("predictability"), where + " predictability"),
                                to_real(need("usefulness"), where + " usefulness")};
        } else if (!p.rec.raw) {
            throw ValidationError(where, "no questionnaire values");
        }
        validate(p.rec.objectives);
        p.rec.timestamp = get("timestamp").value_or("");

        for (double v : {p.rec.design.glow, p.rec.design.volume, p.rec.design.transparency})
            if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(where, "design parameter outside [0,1]");

        if (!by_session.count(p.rec.session_id)) order.push_back(p.rec.session_id);
        by_session[p.rec.session_id].push_back(std::move(p));
    }

    IngestResult result;
    for (const auto& id : order) {
        auto& rows = by_session[id];
        IngestSessionEntry entry;
        entry.session_id = id;
        entry.condition = rows.front().rec.condition;
        for (const auto& p : rows) {
            if (p.rec.condition != entry.condition)
                throw ValidationError("condition", "session " + id + " mixes conditions");
            if (p.fixed_loa && !entry.fixed_loa) entry.fixed_loa = *p.fixed_loa;
        }
        if (std::all_of(rows.begin(), rows.end(), [](const Pending& p) { return p.has_iteration; }))
            std::stable_sort(rows.begin(), rows.end(),
                             [](const Pending& a, const Pending& b) { return a.rec.iteration < b.rec.iteration; });
        const int budget = entry.condition == Condition::TrainedLoA ? map.sampling_budget_trained.value_or(9)
                                                                    : map.sampling_budget_fixed.value_or(7);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto& p = rows[i];
            if (!p.has_iteration) p.rec.iteration = static_cast<int>(i) + 1;
            if (!p.has_phase) p.rec.phase = p.rec.iteration <= budget ? Phase::Sampling : Phase::Optimizing;
            if (!p.has_p4) {
                if (entry.condition != Condition::FixedLoA || !entry.fixed_loa)
                    throw ValidationError("p4", "session " + id + " has no LoA value and no fixed-LoA source");
                p.rec.design.loa = *entry.fixed_loa;
                entry.p4_filled = true;
            }
            if (!(p.rec.design.loa >= 0.0 && p.rec.design.loa <= 1.0))
                throw ValidationError("p4", "session " + id + " LoA outside [0,1]");
            result.records.push_back(p.rec);
        }
        entry.n_records = static_cast<int>(rows.size());
        result.sessions.push_back(entry);
    }
    return result;
}

} // namespace ivca
