#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivca/analysis.hpp"
#include "ivca/errors.hpp"
#include "ivca/records.hpp"
#include "ivca/service.hpp"
#include "ivca/synthetic_driver.hpp"

using namespace ivca;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void env_default(T& target, const char* name)
{
    const char* v = std::getenv(name);
    if (!v || !*v) return;
    std::istringstream in(v);
    T parsed;
    if (!(in >> parsed)) throw ValidationError(name, std::string("cannot parse environment value '") + v + "'");
    target = parsed;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    out << text;
}

struct SyntheticArgs {
    std::string condition = "trained";
    std::string profiles;
    int seeds = 1;
    std::uint64_t seed = 3;
    std::string out = "synthetic";
    int n_mc = 512;
    int n_candidates = 1024;
};

int run_synthetic(const SyntheticArgs& a)
{
    std::vector<Condition> conditions;
    if (a.condition == "both") conditions = {Condition::TrainedLoA, Condition::FixedLoA};
    else conditions = {parse_condition(a.condition)};
    const auto profiles = load_profiles(a.profiles);
    if (profiles.empty()) throw InsufficientDataError("profile file has no profiles");
    fs::create_directories(a.out);

    json manifest{{"base_seed", a.seed}, {"seeds", a.seeds}, {"profiles", a.profiles}, {"runs", json::array()}};
    for (Condition cond : conditions) {
        for (const auto& prof : profiles) {
            for (int k = 0; k < a.seeds; ++k) {
                SessionConfig cfg;
                cfg.condition = cond;
                cfg.seed = a.seed + static_cast<std::uint64_t>(k);
                cfg.acquisition.n_mc_samples = a.n_mc;
                cfg.acquisition.n_candidates = a.n_candidates;
                cfg.acquisition.seed = cfg.seed;
                if (cond == Condition::FixedLoA) cfg.disposition_score = prof.disposition_score;
                const std::string id =
                    std::string(to_string(cond)) + "-" + prof.id + "-s" + std::to_string(cfg.seed);
                if (!valid_session_id(id)) throw ValidationError("profile id", "'" + prof.id + "' is not usable in a file name");
                const auto run = run_synthetic_session(prof, cfg, id);
                const fs::path file = fs::path(a.out) / (id + ".jsonl");
                write_jsonl(file, session_records(run.session));
                json outcomes = json::array();
                for (const auto& sr : run.scenarios) outcomes.push_back(to_string(sr.event.outcome));
                manifest["runs"].push_back({{"session_id", id},
                                            {"condition", to_string(cond)},
                                            {"profile", prof.id},
                                            {"seed", cfg.seed},
                                            {"file", file.filename().string()},
                                            {"observations", run.session.observations().size()},
                                            {"outcomes", outcomes}});
                std::cerr << "wrote " << file.string() << "\n";
            }
        }
    }
    write_file(fs::path(a.out) / "manifest.json", manifest.dump(2));
    return 0;
}

int run_analyze(const std::string& in, const std::string& out)
{
    const StudyDataset data = load_dataset(in);
    if (data.sessions.empty()) {
        std::cerr << "error: no sessions found under " << in << "\n";
        return 2;
    }
    const json index = write_report(data, out);
    std::cout << index.dump(2) << "\n";
    return 0;
}

int run_ingest(const std::string& csv, const std::string& map_path, const std::string& out)
{
    ColumnMap map = ColumnMap::identity();
    if (!map_path.empty()) {
        try {
            map = ColumnMap::from_json(json::parse(read_file(map_path)));
        } catch (const json::exception& e) {
            throw ValidationError("map", e.what());
        }
    }
    const IngestResult result = ingest_csv(read_file(csv), map);
    const json manifest = result.manifest();
    const fs::path target(out);
    if (target.extension() == ".jsonl") {
        // single log plus manifest alongside
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        write_jsonl(target, result.records);
        fs::path mpath = target;
        mpath.replace_extension(".manifest.json");
        write_file(mpath, manifest.dump(2));
    } else {
        fs::create_directories(target);
        for (const auto& s : result.sessions) {
            if (!valid_session_id(s.session_id))
                throw ValidationError("session_id", "'" + s.session_id + "' is not usable in a file name");
            std::vector<ObservationRecord> recs;
            for (const auto& r : result.records)
                if (r.session_id == s.session_id) recs.push_back(r);
            write_jsonl(target / (s.session_id + ".jsonl"), recs);
        }
        write_file(target / "manifest.json", manifest.dump(2));
    }
    std::cout << manifest.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Preference-based optimisation of proactive voice assistant interventions"};
    app.require_subcommand(1);

    SyntheticArgs syn;
    int port = 8080;
    std::string data_dir = "data";
    std::string host = "0.0.0.0";
    std::string in_dir, out_dir = "report";
    std::string csv_path, map_path, ingest_out = "ingested";

    try {
        env_default(syn.seed, "IVCA_SEED");
        env_default(port, "IVCA_PORT");
        env_default(data_dir, "IVCA_DATA");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    auto* syn_cmd = app.add_subcommand("run-synthetic", "Run simulated participants through full sessions");
    syn_cmd->add_option("--condition", syn.condition, "trained, fixed or both")
        ->check(CLI::IsMember({"trained", "fixed", "both"}))
        ->capture_default_str();
    syn_cmd->add_option("--profiles", syn.profiles, "Driver profile JSON file")->required()->check(CLI::ExistingFile);
    syn_cmd->add_option("--seeds", syn.seeds, "Sessions per profile")->check(CLI::PositiveNumber)->capture_default_str();
    syn_cmd->add_option("--seed", syn.seed, "Base session seed (env IVCA_SEED)")->capture_default_str();
    syn_cmd->add_option("--out", syn.out, "Output directory")->capture_default_str();
    syn_cmd->add_option("--mc-samples", syn.n_mc, "Monte Carlo samples per acquisition")->capture_default_str();
    syn_cmd->add_option("--candidates", syn.n_candidates, "Candidate designs per proposal")->capture_default_str();

    auto* an_cmd = app.add_subcommand("analyze", "Correlations, progression and parameter summaries");
    an_cmd->add_option("--in", in_dir, "Directory of session logs or a single .jsonl")->required();
    an_cmd->add_option("--out", out_dir, "Report directory")->capture_default_str();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session API");
    serve_cmd->add_option("--port", port, "Port (env IVCA_PORT)")->capture_default_str();
    serve_cmd->add_option("--data", data_dir, "Session log directory (env IVCA_DATA)")->capture_default_str();
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();

    auto* ing_cmd = app.add_subcommand("ingest", "Convert an external study CSV into session logs");
    ing_cmd->add_option("--csv", csv_path, "Input CSV")->required()->check(CLI::ExistingFile);
    ing_cmd->add_option("--map", map_path, "Column map JSON")->check(CLI::ExistingFile);
    ing_cmd->add_option("--out", ingest_out, "Output .jsonl file or directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*syn_cmd) return run_synthetic(syn);
        if (*an_cmd) return run_analyze(in_dir, out_dir);
        if (*ing_cmd) return run_ingest(csv_path, map_path, ingest_out);
        if (*serve_cmd) {
            SessionService service(data_dir);
            std::cerr << "listening on " << host << ":" << port << ", data in " << data_dir << " ("
                      << service.session_count() << " sessions restored)\n";
            serve(service, host, port);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return e.code() == ErrorCode::Validation ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
