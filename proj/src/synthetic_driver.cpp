#include "ivca/synthetic_driver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ivca/errors.hpp"
#include "ivca/session.hpp"

namespace ivca {

namespace {

int clamp_round(double v, int lo, int hi)
{
    return static_cast<int>(std::clamp<long>(std::lround(v), lo, hi));
}

QuestionnaireResponse respond(const DriverProfile& p, double m, const std::array<double, 5>& eps)
{
    const double m_md = std::clamp(p.weights[0] * m, 0.0, 1.0);
    const double m_pred = std::clamp(p.weights[1] * m, 0.0, 1.0);
    const double m_use = std::clamp(p.weights[2] * m, 0.0, 1.0);

    QuestionnaireResponse r;
    r.mental_demand_raw = clamp_round(20.0 * (0.2 + 0.8 * m_md) + eps[0], 0, 20);
    // agreement with "predictable", then flipped onto the negatively phrased items
    r.pred_item1_raw = 6 - clamp_round(5.0 - 4.0 * m_pred + eps[1], 1, 5);
    r.pred_item2_raw = 6 - clamp_round(5.0 - 4.0 * m_pred + eps[2], 1, 5);
    r.use_item1_raw = clamp_round(5.0 - 4.0 * m_use + eps[3], 1, 5);
    r.use_item2_raw = clamp_round(5.0 - 4.0 * m_use + eps[4], 1, 5);
    return r;
}

} // namespace

void DriverProfile::validate() const
{
    ivca::validate(ideal);
    disposition_to_level(disposition_score);
    for (double w : weights)
        if (!std::isfinite(w) || w < 0.0) throw ValidationError("weights", "must be finite and non-negative");
    if (!std::isfinite(noise_sd) || noise_sd < 0.0) throw ValidationError("noise_sd", "must be non-negative");
}

double mismatch(const DriverProfile& profile, const DesignPoint& design)
{
    const double preferred_loa = disposition_to_loa(profile.disposition_score);
    const double loa_factor = std::abs(design.loa - preferred_loa) > 1e-12 ? 2.0 : 1.0;
    const double d1 = design.glow - profile.ideal.glow;
    const double d2 = design.volume - profile.ideal.volume;
    const double d3 = design.transparency - profile.ideal.transparency;
    const double d4 = loa_factor * (design.loa - profile.ideal.loa);
    const double d = std::sqrt(d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4);
    return std::min(1.0, d / std::sqrt(7.0));
}

QuestionnaireResponse rate(const DriverProfile& profile, const DesignPoint& design, const InterventionEvent& event,
                           Rng& rng)
{
    validate(design);
    // the rater reacts to the autonomy level actually delivered
    DesignPoint experienced = design;
    experienced.loa = loa_step_for_level(event.level);

    std::normal_distribution<double> normal;
    std::array<double, 5> eps{};
    for (double& e : eps) e = profile.noise_sd * normal(rng);
    return respond(profile, mismatch(profile, experienced), eps);
}

CanonicalObjectives latent_canonical(const DriverProfile& profile, const DesignPoint& design)
{
    return to_canonical(score_questionnaire(respond(profile, mismatch(profile, design), {})));
}

UserActionPolicy cooperative_policy(int level)
{
    switch (awaited_action(level)) {
    case AwaitedAction::SearchCommand: return {UserAction::Search, 2.0};
    case AwaitedAction::Approval: return {UserAction::Approve, 2.0};
    default: return {UserAction::Silent, 0.0};
    }
}

SyntheticRun run_synthetic_session(const DriverProfile& profile, const SessionConfig& config, std::string session_id,
                                   const std::string& timestamp_prefix)
{
    profile.validate();
    SyntheticRun run{Session(std::move(session_id), config), {}};
    Rng rng = derive_rng(profile.seed, {config.seed});
    const Route route = Route::default_route();
    while (run.session.phase() != Phase::Complete) {
        const PendingDesign& p = run.session.next_design();
        const int level = loa_level(p.design.loa);
        const UserActionPolicy policy = profile.policy ? *profile.policy : cooperative_policy(level);
        ScenarioResult sr = run_scenario(route, p.design, policy);
        const QuestionnaireResponse q = rate(profile, p.design, sr.event, rng);
        std::string ts;
        if (!timestamp_prefix.empty()) ts = timestamp_prefix + std::to_string(p.iteration);
        run.session.submit_rating(q, ts);
        run.scenarios.push_back(std::move(sr));
    }
    return run;
}

std::vector<DriverProfile> parse_profiles(const std::string& json_text)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError("profiles", std::string("malformed JSON: ") + e.what());
    }
    const json& list = doc.is_object() && doc.contains("profiles") ? doc.at("profiles") : doc;
    if (!list.is_array()) throw ValidationError("profiles", "expected an array of profiles");

    std::vector<DriverProfile> out;
    try {
        for (std::size_t i = 0; i < list.size(); ++i) {
            const json& j = list[i];
            DriverProfile p;
            p.id = j.value("id", "p" + std::to_string(i + 1));
            const auto ideal = j.at("ideal").get<std::vector<double>>();
            if (ideal.size() != 4) throw ValidationError("ideal", "expected 4 values");
            p.ideal = {ideal[0], ideal[1], ideal[2], ideal[3]};
            p.disposition_score = j.value("disposition_score", 88);
            if (j.contains("weights")) {
                const auto w = j.at("weights").get<std::vector<double>>();
                if (w.size() != 3) throw ValidationError("weights", "expected 3 values");
                p.weights = {w[0], w[1], w[2]};
            }
            p.noise_sd = j.value("noise_sd", 0.0);
            p.seed = j.value("seed", std::uint64_t{i});
            if (j.contains("policy")) {
                const json& pol = j.at("policy");
                p.policy = UserActionPolicy{parse_user_action(pol.at("action").get<std::string>()),
                                            pol.value("delay_s", 0.0)};
            }
            p.validate();
            out.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw ValidationError("profiles", e.what());
    }
    return out;
}

std::vector<DriverProfile> load_profiles(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open profile file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_profiles(ss.str());
}

} // namespace ivca
