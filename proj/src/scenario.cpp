#include "ivca/scenario.hpp"

#include <array>
#include <cmath>

#include "ivca/errors.hpp"

namespace ivca {

namespace {

constexpr double kMetersPerMile = 1609.344;

const std::array<std::string, 5> kPrompts{
    "You are about to arrive at your destination. Your destination will be on the left.",
    "You are about to arrive at your destination, but there doesn't seem to be any parking. You may need to search "
    "for a nearby parking lot.",
    "You are about to arrive at your destination. There seems to be no on-street parking available. Should I already "
    "look for a parking spot nearby?",
    "You are about to arrive at your destination. There seems to be no on-street parking available. I will redirect "
    "your navigation to a parking lot 0.2 miles from the destination, with a price of £2 an hour. Please interrupt if "
    "you would like to change or cancel.",
    "Your destination has limited parking. I have already redirected your navigation to the closest parking lot 0.2 "
    "miles from the destination, with a price of £2 an hour.",
};

const std::string kFollowupL1 =
    "Okay, I've found a nearby parking lot 0.2 miles from the destination. I'm redirecting you there now.";
const std::string kFollowupL2 =
    "Okay, I've redirected your navigation to the closest parking lot, 0.2 miles away with a price of £2 an hour.";
const std::string kCommandL1 = "Search/find";
const std::string kCommandL2 = "Yes";

const std::array<std::string, 5> kLevelNames{
    "User performs task without system support",
    "User performs task with system support",
    "System performs task with user approval",
    "System performs task with pending user veto",
    "System performs task",
};

void check_level(int level)
{
    if (level < 0 || level > 4) throw ValidationError("level", "must lie in [0,4]");
}

double dist(const Position& a, const Position& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

} // namespace

const char* to_string(AwaitedAction a) noexcept
{
    switch (a) {
    case AwaitedAction::None: return "none";
    case AwaitedAction::SearchCommand: return "search_command";
    case AwaitedAction::Approval: return "approval";
    case AwaitedAction::Veto: return "veto";
    }
    return "unknown";
}

const char* to_string(Outcome o) noexcept
{
    switch (o) {
    case Outcome::NoReroute: return "no_reroute";
    case Outcome::Rerouted: return "rerouted";
    case Outcome::Cancelled: return "cancelled";
    }
    return "unknown";
}

const char* to_string(UserAction a) noexcept
{
    switch (a) {
    case UserAction::Silent: return "silent";
    case UserAction::Search: return "search";
    case UserAction::Approve: return "approve";
    case UserAction::Reject: return "reject";
    case UserAction::Veto: return "veto";
    }
    return "unknown";
}

UserAction parse_user_action(std::string_view s)
{
    for (auto a : {UserAction::Silent, UserAction::Search, UserAction::Approve, UserAction::Reject, UserAction::Veto})
        if (s == to_string(a)) return a;
    throw ValidationError("action", "unknown user action '" + std::string(s) + "'");
}

double Route::length() const
{
    double total = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) total += dist(waypoints[i - 1], waypoints[i]);
    return total + (waypoints.empty() ? 0.0 : dist(waypoints.back(), original_destination));
}

void Route::validate(double trigger_distance_m) const
{
    if (waypoints.size() < 2) throw ValidationError("route.waypoints", "need at least 2 waypoints");
    for (const auto& p : waypoints)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError("route.waypoints", "must be finite");
    if (original_destination == parking_destination)
        throw ValidationError("route.destinations", "original and parking destinations must differ");
    if (!(parking_offset_miles > 0.0)) throw ValidationError("route.parking_offset_miles", "must be positive");
    if (!(dist(waypoints.back(), original_destination) < trigger_distance_m))
        throw ValidationError("route.waypoints", "route never comes within the trigger distance of the destination");
}

Route Route::default_route()
{
    Route r;
    r.waypoints = {{0.0, 0.0}, {600.0, 0.0}, {600.0, 500.0}, {1000.0, 500.0}, {1000.0, 900.0}};
    r.original_destination = {1000.0, 900.0};
    r.parking_destination = {1000.0 + 0.2 * kMetersPerMile, 900.0};
    return r;
}

const std::string& level_prompt(int level)
{
    check_level(level);
    return kPrompts[static_cast<std::size_t>(level)];
}

const std::string* level_followup(int level)
{
    check_level(level);
    if (level == 1) return &kFollowupL1;
    if (level == 2) return &kFollowupL2;
    return nullptr;
}

const std::string* level_user_command(int level)
{
    check_level(level);
    if (level == 1) return &kCommandL1;
    if (level == 2) return &kCommandL2;
    return nullptr;
}

const std::string& level_name(int level)
{
    check_level(level);
    return kLevelNames[static_cast<std::size_t>(level)];
}

AwaitedAction awaited_action(int level)
{
    check_level(level);
    switch (level) {
    case 1: return AwaitedAction::SearchCommand;
    case 2: return AwaitedAction::Approval;
    case 3: return AwaitedAction::Veto;
    default: return AwaitedAction::None;
    }
}

Outcome resolve_outcome(int level, const UserActionPolicy& policy, double grace_period_s)
{
    check_level(level);
    const bool on_time = policy.action != UserAction::Silent && policy.response_delay_s >= 0.0 &&
                         policy.response_delay_s <= grace_period_s;
    switch (level) {
    case 1: return on_time && policy.action == UserAction::Search ? Outcome::Rerouted : Outcome::NoReroute;
    case 2: return on_time && policy.action == UserAction::Approve ? Outcome::Rerouted : Outcome::NoReroute;
    case 3: return on_time && policy.action == UserAction::Veto ? Outcome::Cancelled : Outcome::Rerouted;
    case 4: return Outcome::Rerouted;
    default: return Outcome::NoReroute;
    }
}

ScenarioResult run_scenario(const Route& route, const DesignPoint& design, const UserActionPolicy& policy,
                            const ScenarioConfig& config)
{
    validate(design);
    route.validate(config.trigger_distance_m);
    if (!(config.speed_mps > 0.0) || !(config.time_step_s > 0.0) || !(config.grace_period_s >= 0.0))
        throw ValidationError("scenario_config", "speed and time step must be positive, grace period non-negative");
    if (!(policy.response_delay_s >= 0.0)) throw ValidationError("policy.response_delay_s", "must be non-negative");

    const int level = loa_level(design.loa);
    ScenarioResult result;
    auto log = [&](double t, std::string kind, std::string detail) {
        result.log.push_back({t, std::move(kind), std::move(detail), level, design.glow, design.volume,
                              design.transparency});
    };

    const double total = route.length();
    log(0.0, "drive_start", "route length " + std::to_string(total) + " m");

    // constant-speed traversal; the trigger fires the first time remaining < threshold
    double t = 0.0;
    double remaining = total;
    while (!(remaining < config.trigger_distance_m)) {
        t += config.time_step_s;
        remaining = std::max(0.0, total - config.speed_mps * t);
    }
    result.trigger_time_s = t;
    result.remaining_at_trigger_m = remaining;

    InterventionEvent& ev = result.event;
    ev.level = level;
    ev.awaited_user_action = awaited_action(level);
    ev.grace_period_s = config.grace_period_s;
    ev.outcome = resolve_outcome(level, policy, config.grace_period_s);
    ev.utterances.push_back(level_prompt(level));

    log(t, "intervention", level_name(level));
    log(t, "utterance", ev.utterances.front());

    if (policy.action != UserAction::Silent) {
        const bool on_time = policy.response_delay_s <= config.grace_period_s;
        std::string detail = to_string(policy.action);
        if (const std::string* cmd = level_user_command(level);
            cmd && on_time && ev.outcome == Outcome::Rerouted)
            detail += " \"" + *cmd + "\"";
        if (!on_time) detail += " (after grace period, ignored)";
        log(t + policy.response_delay_s, "user_action", detail);
    }

    if (const std::string* follow = level_followup(level); follow && ev.outcome == Outcome::Rerouted) {
        ev.utterances.push_back(*follow);
        log(t + policy.response_delay_s, "utterance", *follow);
    }

    const double decided_at = t + (awaited_action(level) == AwaitedAction::None ? 0.0 : config.grace_period_s);
    log(decided_at, "outcome", to_string(ev.outcome));

    double arrive = total / config.speed_mps;
    std::string where = "original_destination";
    if (ev.outcome == Outcome::Rerouted) {
        arrive += route.parking_offset_miles * kMetersPerMile / config.speed_mps;
        where = "parking_destination";
    }
    log(std::max(arrive, decided_at), "arrive", where);
    return result;
}

PresentationDescriptor presentation_descriptor(const DesignPoint& design)
{
    validate(design);
    PresentationDescriptor d;
    d.glow_intensity = design.glow;
    d.alert_gain = design.volume;
    d.symbol_transparency = design.transparency;
    d.symbol_opacity = 1.0 - design.transparency;
    d.loa_level = loa_level(design.loa);
    d.level_name = level_name(d.loa_level);
    d.script = level_prompt(d.loa_level);
    d.lighting_visible = d.glow_intensity > 0.0;
    d.audible = d.alert_gain > 0.0;
    d.symbol_visible = d.symbol_opacity > 0.0;
    return d;
}

} // namespace ivca
