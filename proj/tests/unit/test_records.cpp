#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "ivca/analysis.hpp"
#include "ivca/errors.hpp"
#include "ivca/records.hpp"

using namespace ivca;
namespace fs = std::filesystem;

namespace {

std::vector<ObservationRecord> random_records(int n, std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u;
    std::uniform_int_distribution<int> md(0, 20), item(1, 5);
    std::vector<ObservationRecord> out;
    for (int i = 0; i < n; ++i) {
        ObservationRecord r;
        r.session_id = i < n / 2 ? "alpha" : "beta,\"quoted\"";
        r.condition = i < n / 2 ? Condition::TrainedLoA : Condition::FixedLoA;
        r.iteration = i < n / 2 ? i + 1 : i - n / 2 + 1;
        r.phase = r.iteration <= 3 ? Phase::Sampling : Phase::Optimizing;
        r.design = {u(g), u(g), u(g), snap_loa(u(g))};
        r.raw = QuestionnaireResponse{md(g), item(g), item(g), item(g), item(g)};
        r.objectives = score_questionnaire(*r.raw);
        r.timestamp = "2026-01-0" + std::to_string(1 + i % 9) + "T10:00:00Z";
        out.push_back(r);
    }
    return out;
}

fs::path temp_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("ivca_records_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("JSONL round trip keeps every field exactly")
{
    const auto recs = random_records(20, 1);
    CHECK(parse_jsonl(to_jsonl(recs)) == recs);

    const fs::path dir = temp_dir("jsonl");
    write_jsonl(dir / "a.jsonl", recs);
    CHECK(read_jsonl(dir / "a.jsonl") == recs);
    fs::remove_all(dir);
}

TEST_CASE("JSONL uses the schema keys")
{
    const auto recs = random_records(2, 2);
    const nlohmann::json j = to_json(recs[0]);
    for (const auto& f : record_fields()) CHECK(j.contains(f));
    CHECK(j.size() == record_fields().size());
}

TEST_CASE("records without raw items")
{
    auto recs = random_records(4, 3);
    recs[1].raw.reset();
    const auto back = parse_jsonl(to_jsonl(recs));
    CHECK(back == recs);
    CHECK(to_json(recs[1])["md_raw"].is_null());
}

TEST_CASE("CSV export then ingest is lossless")
{
    auto recs = random_records(24, 4);
    recs[3].raw.reset();
    const std::string csv = to_csv(recs);
    CHECK(csv.rfind("session_id,condition,iteration,phase,p1,p2,p3,p4,md_raw", 0) == 0);
    const IngestResult in = ingest_csv(csv, ColumnMap::identity());
    REQUIRE(in.records.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(in.records[i] == recs[i]);
    CHECK(in.sessions.size() == 2);
}

TEST_CASE("format_double round-trips")
{
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(g);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("malformed lines are rejected with the line number")
{
    const auto recs = random_records(2, 6);
    const std::string text = to_jsonl(recs) + "{not json\n";
    try {
        parse_jsonl(text);
        FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "line 3");
    }
    nlohmann::json bad = to_json(recs[0]);
    bad["md_raw"] = 30;
    CHECK_THROWS_AS(record_from_json(bad), ValidationError);
    bad = to_json(recs[0]);
    bad.erase("p2");
    CHECK_THROWS_AS(record_from_json(bad), ValidationError);
    CHECK_THROWS_AS(read_jsonl("/nonexistent/ivca.jsonl"), Error);
}

TEST_CASE("session descriptor rebuilds the configuration")
{
    SessionConfig cfg;
    cfg.condition = Condition::FixedLoA;
    cfg.seed = 1234567890123ull;
    cfg.disposition_score = 70;
    cfg.acquisition.n_mc_samples = 48;
    cfg.acquisition.n_candidates = 300;
    const Session s("desc", cfg);
    const SessionConfig back = config_from_descriptor(session_descriptor(s));
    CHECK(back.condition == cfg.condition);
    CHECK(back.seed == cfg.seed);
    CHECK(back.disposition_score == cfg.disposition_score);
    CHECK(back.sampling_budget == 7);
    CHECK(back.optimization_budget == 6);
    CHECK(back.acquisition.n_mc_samples == 48);
    CHECK(back.acquisition.n_candidates == 300);
}

TEST_CASE("appender writes one line per call")
{
    const fs::path dir = temp_dir("append");
    const auto recs = random_records(5, 7);
    {
        JsonlAppender app(dir / "log.jsonl");
        for (const auto& r : recs) app.append(to_json(r));
    }
    {
        JsonlAppender app(dir / "log.jsonl");
        app.append(to_json(recs[0]));
    }
    auto back = read_jsonl(dir / "log.jsonl");
    REQUIRE(back.size() == 6);
    CHECK(back[5] == recs[0]);
    back.pop_back();
    CHECK(back == recs);
    CHECK_THROWS_AS(JsonlAppender("/nonexistent/dir/x.jsonl"), Error);
    fs::remove_all(dir);
}
