#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "ivca/analysis.hpp"
#include "ivca/service.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

using namespace ivca;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("ivca_service_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

struct Client {
    SessionService& svc;

    std::pair<int, json> call(const std::string& method, const std::string& path, const json& body = nullptr,
                              const std::map<std::string, std::string>& query = {})
    {
        const HttpResponse r = svc.handle(method, path, query, body.is_null() ? "" : body.dump());
        if (r.content_type == "application/json") return {r.status, json::parse(r.body)};
        return {r.status, json(r.body)};
    }
};

json rating_for(const json& design, int salt)
{
    const double g = design["p1"], v = design["p2"];
    return {{"md_raw", static_cast<int>(std::lround(20 * g))},
            {"pred1_raw", 1 + static_cast<int>(std::lround(4 * v))},
            {"pred2_raw", 1 + salt % 5},
            {"use1_raw", 5 - static_cast<int>(std::lround(4 * v))},
            {"use2_raw", 3},
            {"timestamp", "2026-03-01T09:00:" + std::to_string(10 + salt) + "Z"}};
}

json fixed_body(const std::string& id)
{
    return {{"condition", "fixed"}, {"disposition_score", 88}, {"seed", 9},
            {"session_id", id},     {"n_mc_samples", 32},      {"n_candidates", 128}};
}

QuestionnaireResponse to_response(const json& r)
{
    return {r["md_raw"], r["pred1_raw"], r["pred2_raw"], r["use1_raw"], r["use2_raw"]};
}

// drives a session over the API and returns (designs, ratings sent)
std::pair<std::vector<json>, std::vector<json>> run_block(Client& c, const std::string& id, int n)
{
    std::vector<json> designs, sent;
    for (int k = 0; k < n; ++k) {
        auto [st, nx] = c.call("GET", "/sessions/" + id + "/next");
        REQUIRE(st == 200);
        const json r = rating_for(nx["design"], k);
        REQUIRE(c.call("POST", "/sessions/" + id + "/ratings", r).first == 200);
        designs.push_back(nx["design"]);
        sent.push_back(r);
    }
    return {designs, sent};
}

} // namespace

TEST_CASE("session creation validates its input")
{
    const fs::path dir = fresh_dir("create");
    SessionService svc(dir);
    Client c{svc};

    auto [s1, b1] = c.call("POST", "/sessions", {{"condition", "fixed"}});
    CHECK(s1 == 422);
    CHECK(b1["code"] == "validation_error");
    CHECK(b1["field"] == "disposition_score");

    CHECK(c.call("POST", "/sessions", {{"condition", "sideways"}}).first == 422);
    CHECK(c.call("POST", "/sessions", {{"condition", "trained"}, {"seed", -3}}).first == 422);
    CHECK(c.call("POST", "/sessions", {{"condition", "trained"}, {"session_id", "../etc"}}).first == 422);
    CHECK(c.call("POST", "/sessions", {{"condition", "fixed"}, {"disposition_score", 200}}).first == 422);
    CHECK(svc.handle("POST", "/sessions", {}, "{oops").status == 422);
    CHECK(svc.session_count() == 0);

    auto [s2, b2] = c.call("POST", "/sessions", {{"condition", "trained"}, {"session_id", "abc"}});
    CHECK(s2 == 201);
    CHECK(b2["session_id"] == "abc");
    CHECK(b2["sampling_budget"] == 9);
    CHECK(c.call("POST", "/sessions", {{"condition", "trained"}, {"session_id", "abc"}}).first == 409);
    CHECK(fs::exists(dir / "abc.session.json"));

    auto [s3, b3] =
        c.call("POST", "/sessions", {{"condition", "trained"}, {"budgets", {{"sampling", 4}, {"optimization", 2}}}});
    CHECK(s3 == 201);
    CHECK(b3["sampling_budget"] == 4);
    CHECK(b3["optimization_budget"] == 2);
    CHECK(valid_session_id(b3["session_id"].get<std::string>()));

    CHECK(c.call("GET", "/sessions").second["sessions"].size() == 2);
    CHECK(c.call("GET", "/sessions/abc").second["condition"] == "trained");
    CHECK(c.call("GET", "/healthz").second["status"] == "ok");
    CHECK(c.call("GET", "/sessions/nope").first == 404);
    CHECK(c.call("GET", "/sessions/abc/bogus").first == 404);
    CHECK(c.call("GET", "/elsewhere").first == 404);
    CHECK(c.call("POST", "/sessions/abc/next").first == 405);
    CHECK(c.call("GET", "/sessions/abc/export", nullptr, {{"format", "xml"}}).first == 422);
    fs::remove_all(dir);
}

TEST_CASE("a full fixed-LoA block over the API")
{
    const fs::path dir = fresh_dir("block");
    SessionService svc(dir);
    Client c{svc};
    REQUIRE(c.call("POST", "/sessions", fixed_body("blk")).first == 201);

    CHECK(c.call("POST", "/sessions/blk/ratings", rating_for({{"p1", 0.5}, {"p2", 0.5}}, 0)).first == 409);
    auto [sp0, empty_front] = c.call("GET", "/sessions/blk/pareto");
    CHECK(sp0 == 200);
    CHECK(empty_front["points"].empty());
    CHECK(empty_front["reference_point"].is_null());

    std::vector<json> designs, sent;
    for (int k = 0; k < 13; ++k) {
        auto [st, nx] = c.call("GET", "/sessions/blk/next");
        REQUIRE(st == 200);
        CHECK(nx["iteration"] == k + 1);
        CHECK(nx["phase"] == (k < 7 ? "sampling" : "optimizing"));
        CHECK(nx["total_iterations"] == 13);
        CHECK(nx["design"]["p4"] == 0.75);
        CHECK(nx["presentation"]["loa_level"] == 3);
        CHECK(nx["script"] == level_prompt(3));
        CHECK(nx.contains("acquisition_value") == (k >= 7));

        // asking again while a design is pending is refused and echoes that design
        auto [st2, again] = c.call("GET", "/sessions/blk/next");
        CHECK(st2 == 409);
        CHECK(again["pending"]["design"] == nx["design"]);

        json bad = rating_for(nx["design"], k);
        bad["use2_raw"] = 9;
        auto [sb, eb] = c.call("POST", "/sessions/blk/ratings", bad);
        CHECK(sb == 422);
        CHECK(eb["field"] == "use_item2_raw");
        bad.erase("use2_raw");
        CHECK(c.call("POST", "/sessions/blk/ratings", bad).first == 422);
        bad["use2_raw"] = "three";
        CHECK(c.call("POST", "/sessions/blk/ratings", bad).first == 422);

        const json r = rating_for(nx["design"], k);
        auto [st3, ack] = c.call("POST", "/sessions/blk/ratings", r);
        REQUIRE(st3 == 200);
        CHECK(ack["remaining"] == 12 - k);
        CHECK(ack["observation"]["iteration"] == k + 1);
        designs.push_back(nx["design"]);
        sent.push_back(r);
    }
    CHECK(c.call("GET", "/sessions/blk/next").first == 410);
    CHECK(c.call("POST", "/sessions/blk/ratings", sent.back()).first == 410);

    auto [se, exported] = c.call("GET", "/sessions/blk/export", nullptr, {{"format", "jsonl"}});
    REQUIRE(se == 200);
    const auto recs = parse_jsonl(exported.get<std::string>());
    REQUIRE(recs.size() == 13);
    int sampling = 0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        sampling += recs[i].phase == Phase::Sampling;
        CHECK(recs[i].design.loa == 0.75);
        CHECK(to_json(recs[i].design) == designs[i]);
        CHECK(*recs[i].raw == to_response(sent[i]));
        CHECK(recs[i].timestamp == sent[i]["timestamp"]);
    }
    CHECK(sampling == 7);
    // the on-disk log is the same content
    CHECK(read_jsonl(dir / "blk.jsonl") == recs);

    auto [sc, csv] = c.call("GET", "/sessions/blk/export", nullptr, {{"format", "csv"}});
    CHECK(sc == 200);
    CHECK(ingest_csv(csv.get<std::string>(), ColumnMap::identity()).records == recs);

    // replaying the exported ratings reproduces every design
    std::vector<QuestionnaireResponse> ratings;
    for (const auto& r : recs) ratings.push_back(*r.raw);
    const Session again = replay("blk2", config_from_descriptor(c.call("GET", "/sessions/blk").second), ratings);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again.observations()[i].design == recs[i].design);

    auto [sp, front] = c.call("GET", "/sessions/blk/pareto");
    CHECK(sp == 200);
    CHECK(front["points"].size() >= 1);
    CHECK(front["reference_point"].size() == 3);
    const ParetoFront pf = session_pareto(again);
    CHECK(front["points"].size() == pf.observation_indices.size());
    fs::remove_all(dir);
}

TEST_CASE("restart rebuilds sessions from the data directory")
{
    const fs::path dir = fresh_dir("restart");
    std::vector<json> designs;
    {
        SessionService svc(dir);
        Client c{svc};
        json body = fixed_body("keep");
        body["condition"] = "trained";
        body.erase("disposition_score");
        REQUIRE(c.call("POST", "/sessions", body).first == 201);
        designs = run_block(c, "keep", 11).first;
        // leave a design pending across the restart
        designs.push_back(c.call("GET", "/sessions/keep/next").second["design"]);
    }
    SessionService svc(dir);
    Client c{svc};
    CHECK(svc.session_count() == 1);
    auto [st, desc] = c.call("GET", "/sessions/keep");
    CHECK(st == 200);
    CHECK(desc["observations"] == 11);
    auto [sn, nx] = c.call("GET", "/sessions/keep/next");
    REQUIRE(sn == 200);
    CHECK(nx["iteration"] == 12);
    CHECK(nx["design"] == designs.back());
    const auto recs = read_jsonl(dir / "keep.jsonl");
    REQUIRE(recs.size() == 11);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(to_json(recs[i].design) == designs[i]);

    // a tampered log is refused
    fs::path bad = fresh_dir("tampered");
    fs::create_directories(bad);
    fs::copy_file(dir / "keep.session.json", bad / "keep.session.json");
    auto tampered = recs;
    tampered[2].design.glow = 0.123;
    write_jsonl(bad / "keep.jsonl", tampered);
    CHECK_THROWS_AS(SessionService{bad}, Error);
    fs::remove_all(bad);
    fs::remove_all(dir);
}

TEST_CASE("sessions progress independently under concurrent clients")
{
    const fs::path dir = fresh_dir("concurrent");
    SessionService svc(dir);
    std::vector<std::thread> workers;
    std::vector<int> ok(4, 0);
    for (int w = 0; w < 4; ++w) {
        Client c{svc};
        REQUIRE(c.call("POST", "/sessions", fixed_body("w" + std::to_string(w))).first == 201);
    }
    for (int w = 0; w < 4; ++w)
        workers.emplace_back([&, w] {
            Client c{svc};
            const std::string id = "w" + std::to_string(w);
            for (int k = 0; k < 8; ++k) {
                const json d = c.call("GET", "/sessions/" + id + "/next").second["design"];
                ok[w] += c.call("POST", "/sessions/" + id + "/ratings", rating_for(d, k)).first == 200;
            }
        });
    for (auto& t : workers) t.join();
    for (int w = 0; w < 4; ++w) {
        CHECK(ok[w] == 8);
        CHECK(read_jsonl(dir / ("w" + std::to_string(w) + ".jsonl")).size() == 8);
    }
    fs::remove_all(dir);
}

TEST_CASE("the API over a real HTTP listener")
{
    const fs::path dir = fresh_dir("http");
    SessionService svc(dir);
    httplib::Server server;
    svc.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto h = cli.Get("/healthz");
    REQUIRE(h);
    CHECK(h->status == 200);
    CHECK(h->get_header_value("Access-Control-Allow-Origin") == "*");

    auto created = cli.Post("/sessions", fixed_body("net").dump(), "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    auto nx = cli.Get("/sessions/net/next");
    REQUIRE(nx);
    CHECK(nx->status == 200);
    const json d = json::parse(nx->body)["design"];
    auto rated = cli.Post("/sessions/net/ratings", rating_for(d, 1).dump(), "application/json");
    REQUIRE(rated);
    CHECK(rated->status == 200);
    auto csv = cli.Get("/sessions/net/export?format=csv");
    REQUIRE(csv);
    CHECK(csv->status == 200);
    CHECK(csv->get_header_value("Content-Type") == "text/csv");
    auto opt = cli.Options("/sessions");
    REQUIRE(opt);
    CHECK(opt->status == 204);

    server.stop();
    t.join();
    fs::remove_all(dir);
}
