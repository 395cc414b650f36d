#ifndef IVCA_SESSION_HPP
#define IVCA_SESSION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivca/acquisition.hpp"
#include "ivca/design_space.hpp"

namespace ivca {

enum class Condition { TrainedLoA, FixedLoA };
enum class Phase { Sampling, Optimizing, Complete };

const char* to_string(Condition c) noexcept;
const char* to_string(Phase p) noexcept;
Condition parse_condition(std::string_view s);
Phase parse_phase(std::string_view s);

/// Proactive-personality scale bounds (17 items, 7-point).
inline constexpr int kDispositionMin = 17;
inline constexpr int kDispositionMax = 119;

/// round(4 (score - 17) / 102)
int disposition_to_level(int score);
double disposition_to_loa(int score);

struct SessionConfig {
    Condition condition = Condition::TrainedLoA;
    std::uint64_t seed = 3;
    /// Defaults to 9 (trained) or 7 (fixed).
    std::optional<int> sampling_budget;
    int optimization_budget = 6;
    /// Required for the fixed condition.
    std::optional<int> disposition_score;
    AcquisitionConfig acquisition;
};

struct Observation {
    int iteration = 0; // 1-based
    Phase phase = Phase::Sampling;
    DesignPoint design;
    QuestionnaireResponse response;
    ObjectiveVector objectives;
    CanonicalObjectives canonical;
    std::string timestamp;
};

struct PendingDesign {
    int iteration = 0;
    Phase phase = Phase::Sampling;
    DesignPoint design;
};

struct ParetoFront {
    /// Index into the session's observation log for each front member.
    std::vector<std::size_t> observation_indices;
    ObjectiveMatrix points;
    Eigen::Vector3d reference_point = Eigen::Vector3d::Zero();
};

/// One participant block. Single writer: callers serialize access.
class Session {
public:
    Session(std::string id, SessionConfig config);

    const std::string& id() const noexcept { return id_; }
    const SessionConfig& config() const noexcept { return config_; }
    Condition condition() const noexcept { return config_.condition; }
    std::uint64_t seed() const noexcept { return config_.seed; }
    int sampling_budget() const noexcept { return sampling_budget_; }
    int optimization_budget() const noexcept { return config_.optimization_budget; }
    int total_budget() const noexcept { return sampling_budget_ + config_.optimization_budget; }
    std::optional<double> fixed_loa_step() const noexcept { return fixed_loa_; }
    std::optional<int> disposition_score() const noexcept { return config_.disposition_score; }
    Phase phase() const noexcept;
    const std::vector<Observation>& observations() const noexcept { return observations_; }
    const std::optional<PendingDesign>& pending() const noexcept { return pending_; }

    /// Design for the current iteration. Repeated calls before a rating return the same design.
    const PendingDesign& next_design();

    /// Record the rating for the pending design.
    const Observation& submit_rating(const QuestionnaireResponse& response, std::string timestamp = {});

    /// Proposal metadata of the latest optimization-phase design, if any.
    const std::optional<Proposal>& last_proposal() const noexcept { return last_proposal_; }

private:
    DesignPoint sampling_design(int iteration) const;

    std::string id_;
    SessionConfig config_;
    int sampling_budget_;
    std::optional<double> fixed_loa_;
    std::vector<Observation> observations_;
    std::optional<PendingDesign> pending_;
    std::optional<Proposal> last_proposal_;
};

/// Scramble seed of the sampling-phase Sobol stream for a session seed.
std::uint64_t sampling_scramble_seed(std::uint64_t session_seed);

ParetoFront session_pareto(const Session& session);

/// Fresh session fed the given rating sequence; returns the resulting session.
Session replay(std::string id, const SessionConfig& config, const std::vector<QuestionnaireResponse>& ratings);

std::string now_iso8601();

} // namespace ivca

#endif // IVCA_SESSION_HPP
