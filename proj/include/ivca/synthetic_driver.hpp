#ifndef IVCA_SYNTHETIC_DRIVER_HPP
#define IVCA_SYNTHETIC_DRIVER_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ivca/design_space.hpp"
#include "ivca/rng.hpp"
#include "ivca/scenario.hpp"
#include "ivca/session.hpp"

namespace ivca {

/// Simulated participant: rates designs by their distance to a latent ideal.
struct DriverProfile {
    std::string id = "driver";
    DesignPoint ideal;
    int disposition_score = 88;
    /// Per-objective sensitivity to mismatch (mental demand, predictability, usefulness).
    std::array<double, 3> weights{1.0, 1.0, 1.0};
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
    /// Voice behaviour during interventions; cooperative when unset.
    std::optional<UserActionPolicy> policy;

    void validate() const;
};

/// Shared mismatch in [0,1]: Euclidean distance to the ideal over the unit hypercube,
/// LoA difference doubled when the design's LoA differs from the disposition LoA,
/// normalised by the largest attainable distance (sqrt 7).
double mismatch(const DriverProfile& profile, const DesignPoint& design);

/// Questionnaire answers for one iteration. Draws five normals from rng in the order
/// md, pred1, pred2, use1, use2 regardless of noise_sd.
QuestionnaireResponse rate(const DriverProfile& profile, const DesignPoint& design, const InterventionEvent& event,
                           Rng& rng);

/// Noise-free canonical objectives of a design for this profile.
CanonicalObjectives latent_canonical(const DriverProfile& profile, const DesignPoint& design);

/// Performs the action each level waits for, 2 s after the prompt.
UserActionPolicy cooperative_policy(int level);

struct SyntheticRun {
    Session session;
    std::vector<ScenarioResult> scenarios; // one per iteration
};

/// Drive a full session with a simulated participant. Each design is shown in the
/// reroute scenario, the profile's voice policy (or the cooperative one) is applied,
/// and the resulting event is rated. Rating noise comes from (profile seed, session seed).
SyntheticRun run_synthetic_session(const DriverProfile& profile, const SessionConfig& config, std::string session_id,
                                   const std::string& timestamp_prefix = {});

std::vector<DriverProfile> load_profiles(const std::filesystem::path& path);
std::vector<DriverProfile> parse_profiles(const std::string& json_text);

} // namespace ivca

#endif // IVCA_SYNTHETIC_DRIVER_HPP
