#ifndef IVCA_SCENARIO_HPP
#define IVCA_SCENARIO_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivca/design_space.hpp"

namespace ivca {

struct Position {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Position&) const = default;
};

/// Driven polyline (meters). The intervention concerns the original destination;
/// a parking lot 0.2 miles away is the reroute target.
struct Route {
    std::vector<Position> waypoints;
    Position original_destination;
    Position parking_destination;
    double parking_offset_miles = 0.2;

    /// Total remaining distance from the start of the route to the original destination.
    double length() const;
    void validate(double trigger_distance_m) const;

    /// 1.9 km urban approach with three turns, ending at the destination.
    static Route default_route();
};

enum class AwaitedAction { None, SearchCommand, Approval, Veto };
enum class Outcome { NoReroute, Rerouted, Cancelled };
enum class UserAction { Silent, Search, Approve, Reject, Veto };

const char* to_string(AwaitedAction a) noexcept;
const char* to_string(Outcome o) noexcept;
const char* to_string(UserAction a) noexcept;
UserAction parse_user_action(std::string_view s);

struct UserActionPolicy {
    UserAction action = UserAction::Silent;
    double response_delay_s = 0.0;
};

struct ScenarioConfig {
    double speed_mps = 13.4; // ~30 mph
    double trigger_distance_m = 300.0;
    double grace_period_s = 10.0;
    double time_step_s = 0.1;
};

struct InterventionEvent {
    int level = 0;
    std::vector<std::string> utterances;
    AwaitedAction awaited_user_action = AwaitedAction::None;
    double grace_period_s = 0.0;
    Outcome outcome = Outcome::NoReroute;
};

struct ScenarioLogEntry {
    double t_s = 0.0;
    std::string kind;
    std::string detail;
    int level = 0;
    double glow = 0.0;
    double volume = 0.0;
    double transparency = 0.0;
};

struct ScenarioResult {
    InterventionEvent event;
    std::vector<ScenarioLogEntry> log;
    double trigger_time_s = 0.0;
    double remaining_at_trigger_m = 0.0;
};

/// Opening assistant utterance for a level.
const std::string& level_prompt(int level);
/// Assistant confirmation after the user's accepted command (levels 1 and 2 only).
const std::string* level_followup(int level);
/// User phrase that triggers the follow-up (levels 1 and 2 only).
const std::string* level_user_command(int level);
const std::string& level_name(int level);
AwaitedAction awaited_action(int level);

/// Pure outcome rule for (level, user action, delay vs grace period).
Outcome resolve_outcome(int level, const UserActionPolicy& policy, double grace_period_s);

ScenarioResult run_scenario(const Route& route, const DesignPoint& design, const UserActionPolicy& policy,
                            const ScenarioConfig& config = {});

/// How a design variant is rendered. Transparency is stored as-is and shown as
/// symbol opacity = 1 - transparency.
struct PresentationDescriptor {
    std::string hue = "cyan";
    double glow_intensity = 0.0;
    double alert_gain = 0.0;
    double symbol_transparency = 0.0;
    double symbol_opacity = 1.0;
    int loa_level = 0;
    std::string level_name;
    std::string script;
    bool lighting_visible = false;
    bool audible = false;
    bool symbol_visible = true;
};

PresentationDescriptor presentation_descriptor(const DesignPoint& design);

} // namespace ivca

#endif // IVCA_SCENARIO_HPP
