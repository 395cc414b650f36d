#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ivca/errors.hpp"
#include "ivca/scenario.hpp"

using namespace ivca;

namespace {

std::string golden(const std::string& name)
{
    std::ifstream in(std::string(IVCA_TEST_DIR) + "/golden/" + name, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DesignPoint at_level(int level)
{
    return {0.5, 0.5, 0.5, loa_step_for_level(level)};
}

} // namespace

TEST_CASE("scripts are byte-identical to the golden files")
{
    for (int l = 0; l <= 4; ++l) CHECK(level_prompt(l) == golden("level_" + std::to_string(l) + "_prompt.txt"));
    for (int l : {1, 2}) {
        REQUIRE(level_followup(l) != nullptr);
        REQUIRE(level_user_command(l) != nullptr);
        CHECK(*level_followup(l) == golden("level_" + std::to_string(l) + "_followup.txt"));
        CHECK(*level_user_command(l) == golden("level_" + std::to_string(l) + "_user.txt"));
    }
    for (int l : {0, 3, 4}) {
        CHECK(level_followup(l) == nullptr);
        CHECK(level_user_command(l) == nullptr);
    }
    CHECK(level_prompt(4).rfind("Your destination has limited parking.", 0) == 0);
    CHECK(level_prompt(3).find("Please interrupt if you would like to change or cancel.") != std::string::npos);
    CHECK_THROWS_AS(level_prompt(5), ValidationError);
}

TEST_CASE("awaited action per level")
{
    CHECK(awaited_action(0) == AwaitedAction::None);
    CHECK(awaited_action(1) == AwaitedAction::SearchCommand);
    CHECK(awaited_action(2) == AwaitedAction::Approval);
    CHECK(awaited_action(3) == AwaitedAction::Veto);
    CHECK(awaited_action(4) == AwaitedAction::None);
}

TEST_CASE("outcome table: five levels by silent, awaited action on time, awaited action late")
{
    const UserAction awaited[5] = {UserAction::Search, UserAction::Search, UserAction::Approve, UserAction::Veto,
                                   UserAction::Veto};
    const Outcome expected[5][3] = {
        {Outcome::NoReroute, Outcome::NoReroute, Outcome::NoReroute},
        {Outcome::NoReroute, Outcome::Rerouted, Outcome::NoReroute},
        {Outcome::NoReroute, Outcome::Rerouted, Outcome::NoReroute},
        {Outcome::Rerouted, Outcome::Cancelled, Outcome::Rerouted},
        {Outcome::Rerouted, Outcome::Rerouted, Outcome::Rerouted},
    };
    const Route route = Route::default_route();
    for (int l = 0; l <= 4; ++l) {
        const UserActionPolicy policies[3] = {{UserAction::Silent, 0.0}, {awaited[l], 2.0}, {awaited[l], 15.0}};
        for (int c = 0; c < 3; ++c) {
            CAPTURE(l);
            CAPTURE(c);
            CHECK(resolve_outcome(l, policies[c], 10.0) == expected[l][c]);
            CHECK(run_scenario(route, at_level(l), policies[c]).event.outcome == expected[l][c]);
        }
    }
}

TEST_CASE("wrong actions never trigger the awaited effect")
{
    CHECK(resolve_outcome(1, {UserAction::Approve, 1.0}, 10) == Outcome::NoReroute);
    CHECK(resolve_outcome(2, {UserAction::Reject, 1.0}, 10) == Outcome::NoReroute);
    CHECK(resolve_outcome(2, {UserAction::Search, 1.0}, 10) == Outcome::NoReroute);
    CHECK(resolve_outcome(3, {UserAction::Reject, 1.0}, 10) == Outcome::Rerouted);
    CHECK(resolve_outcome(4, {UserAction::Veto, 0.5}, 10) == Outcome::Rerouted);
    // boundary: exactly at the grace period still counts
    CHECK(resolve_outcome(2, {UserAction::Approve, 10.0}, 10) == Outcome::Rerouted);
}

TEST_CASE("run_scenario fires once near the destination and logs the presentation")
{
    const Route route = Route::default_route();
    const DesignPoint d{0.2, 0.7, 0.3, 0.5};
    const ScenarioResult r = run_scenario(route, d, {UserAction::Approve, 2.0});
    int fired = 0;
    for (const auto& e : r.log) {
        fired += e.kind == "intervention";
        CHECK(e.glow == 0.2);
        CHECK(e.volume == 0.7);
        CHECK(e.transparency == 0.3);
        CHECK(e.level == 2);
    }
    CHECK(fired == 1);
    CHECK(r.remaining_at_trigger_m < 300.0);
    CHECK(r.remaining_at_trigger_m >= 300.0 - 13.4 * 0.1 - 1e-9);
    CHECK(r.event.level == 2);
    CHECK(r.event.awaited_user_action == AwaitedAction::Approval);
    REQUIRE(r.event.utterances.size() == 2);
    CHECK(r.event.utterances[0] == level_prompt(2));
    CHECK(r.event.utterances[1] == *level_followup(2));

    const ScenarioResult silent = run_scenario(route, d, {});
    CHECK(silent.event.utterances.size() == 1);
    CHECK(silent.event.outcome == Outcome::NoReroute);
}

TEST_CASE("scenario input validation")
{
    Route bad = Route::default_route();
    bad.waypoints.resize(1);
    CHECK_THROWS_AS(run_scenario(bad, at_level(1), {}), ValidationError);
    Route far = Route::default_route();
    far.original_destination = {5000, 5000};
    CHECK_THROWS_AS(run_scenario(far, at_level(1), {}), ValidationError);
    CHECK_THROWS_AS(run_scenario(Route::default_route(), {0.5, 0.5, 0.5, 0.3}, {}), ValidationError);
    CHECK_THROWS_AS(run_scenario(Route::default_route(), at_level(1), {UserAction::Search, -1.0}), ValidationError);
}

TEST_CASE("presentation descriptor")
{
    const PresentationDescriptor p = presentation_descriptor({0.4, 0.6, 0.3, 0.75});
    CHECK(p.symbol_opacity == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(p.loa_level == 3);
    CHECK(p.script == level_prompt(3));

    const PresentationDescriptor off = presentation_descriptor({0, 0, 0, 0});
    CHECK_FALSE(off.lighting_visible);
    CHECK_FALSE(off.audible);
    CHECK(off.symbol_visible);
    CHECK(off.script == level_prompt(0));

    const PresentationDescriptor on = presentation_descriptor({1, 1, 1, 1});
    CHECK(on.lighting_visible);
    CHECK(on.audible);
    CHECK_FALSE(on.symbol_visible);
    CHECK(on.symbol_opacity == 0.0);
    CHECK(on.loa_level == 4);
}

TEST_CASE("user action names")
{
    for (UserAction a : {UserAction::Silent, UserAction::Search, UserAction::Approve, UserAction::Reject,
                         UserAction::Veto})
        CHECK(parse_user_action(to_string(a)) == a);
    CHECK_THROWS_AS(parse_user_action("shout"), ValidationError);
}
