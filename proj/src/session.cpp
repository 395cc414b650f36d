#include "ivca/session.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "ivca/errors.hpp"
#include "ivca/pareto.hpp"
#include "ivca/sobol.hpp"

namespace ivca {

const char* to_string(Condition c) noexcept
{
    return c == Condition::TrainedLoA ? "trained" : "fixed";
}

const char* to_string(Phase p) noexcept
{
    switch (p) {
    case Phase::Sampling: return "sampling";
    case Phase::Optimizing: return "optimizing";
    case Phase::Complete: return "complete";
    }
    return "unknown";
}

Condition parse_condition(std::string_view s)
{
    if (s == "trained" || s == "TrainedLoA") return Condition::TrainedLoA;
    if (s == "fixed" || s == "FixedLoA") return Condition::FixedLoA;
    throw ValidationError("condition", "expected 'trained' or 'fixed', got '" + std::string(s) + "'");
}

Phase parse_phase(std::string_view s)
{
    if (s == "sampling" || s == "Sampling") return Phase::Sampling;
    if (s == "optimizing" || s == "Optimizing") return Phase::Optimizing;
    if (s == "complete" || s == "Complete") return Phase::Complete;
    throw ValidationError("phase", "unknown phase '" + std::string(s) + "'");
}

int disposition_to_level(int score)
{
    if (score < kDispositionMin || score > kDispositionMax)
        throw ValidationError("disposition_score", "must lie in [17,119], got " + std::to_string(score));
    const double normalised = double(score - kDispositionMin) / double(kDispositionMax - kDispositionMin);
    return static_cast<int>(std::lround(4.0 * normalised));
}

double disposition_to_loa(int score)
{
    return disposition_to_level(score) / 4.0;
}

std::uint64_t sampling_scramble_seed(std::uint64_t session_seed)
{
    Rng rng = derive_rng(session_seed, {kStreamSampling});
    return rng();
}

std::string now_iso8601()
{
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t t = system_clock::to_time_t(now);
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

Session::Session(std::string id, SessionConfig config) : id_(std::move(id)), config_(std::move(config))
{
    config_.acquisition.validate();
    sampling_budget_ = config_.sampling_budget.value_or(config_.condition == Condition::TrainedLoA ? 9 : 7);
    if (sampling_budget_ < 1) throw ValidationError("sampling_budget", "must be at least 1");
    if (config_.optimization_budget < 0) throw ValidationError("optimization_budget", "must be non-negative");
    if (config_.optimization_budget > 0 && sampling_budget_ < 2)
        throw ValidationError("sampling_budget", "must be at least 2 when an optimization phase follows");

    if (config_.disposition_score) disposition_to_level(*config_.disposition_score); // range check
    if (config_.condition == Condition::FixedLoA) {
        if (!config_.disposition_score)
            throw ValidationError("disposition_score", "required for the fixed-LoA condition");
        fixed_loa_ = disposition_to_loa(*config_.disposition_score);
    }
}

Phase Session::phase() const noexcept
{
    const auto n = static_cast<int>(observations_.size());
    if (n >= total_budget()) return Phase::Complete;
    return n < sampling_budget_ ? Phase::Sampling : Phase::Optimizing;
}

DesignPoint Session::sampling_design(int iteration) const
{
    SobolSequence sobol(4, sampling_scramble_seed(config_.seed));
    sobol.seek(static_cast<std::uint64_t>(iteration - 1));
    const Eigen::VectorXd x = sobol.next();
    DesignPoint d{x[0], x[1], x[2], fixed_loa_ ? *fixed_loa_ : snap_loa(x[3])};
    return d;
}

const PendingDesign& Session::next_design()
{
    if (pending_) return *pending_;
    const Phase ph = phase();
    if (ph == Phase::Complete) throw SessionCompleteError("session " + id_ + " is complete");

    const int iteration = static_cast<int>(observations_.size()) + 1;
    PendingDesign next;
    next.iteration = iteration;
    next.phase = ph;
    if (ph == Phase::Sampling) {
        next.design = sampling_design(iteration);
    } else {
        ProposalContext ctx;
        const auto n = static_cast<Eigen::Index>(observations_.size());
        ctx.observed_inputs.resize(n, 4);
        ctx.observed_canonical.resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            ctx.observed_inputs.row(i) = observations_[i].design.vector().transpose();
            ctx.observed_canonical.row(i) = observations_[i].canonical.array().transpose();
        }
        ctx.fixed_loa = fixed_loa_;
        ctx.seed = config_.seed;
        ctx.iteration = iteration;
        AcquisitionConfig acq = config_.acquisition;
        acq.seed = config_.seed;
        Proposal p = propose_next(ctx, acq);
        next.design = p.design;
        last_proposal_ = std::move(p);
    }
    pending_ = next;
    return *pending_;
}

const Observation& Session::submit_rating(const QuestionnaireResponse& response, std::string timestamp)
{
    if (!pending_) throw ProtocolError("no design is pending for session " + id_ + "; request the next design first");
    validate(response);

    Observation obs;
    obs.iteration = pending_->iteration;
    obs.phase = pending_->phase;
    obs.design = pending_->design;
    obs.response = response;
    obs.objectives = score_questionnaire(response);
    obs.canonical = to_canonical(obs.objectives);
    obs.timestamp = timestamp.empty() ? now_iso8601() : std::move(timestamp);
    observations_.push_back(std::move(obs));
    pending_.reset();
    return observations_.back();
}

ParetoFront session_pareto(const Session& session)
{
    const auto& obs = session.observations();
    if (obs.empty()) throw InsufficientDataError("session " + session.id() + " has no observations");
    ObjectiveMatrix all(static_cast<Eigen::Index>(obs.size()), 3);
    for (std::size_t i = 0; i < obs.size(); ++i)
        all.row(static_cast<Eigen::Index>(i)) = obs[i].canonical.array().transpose();

    ParetoFront front;
    for (Eigen::Index i : pareto_filter(all)) front.observation_indices.push_back(static_cast<std::size_t>(i));
    std::vector<Eigen::Index> rows(front.observation_indices.begin(), front.observation_indices.end());
    front.points = select_rows(all, rows);
    front.reference_point = reference_point(all);
    return front;
}

Session replay(std::string id, const SessionConfig& config, const std::vector<QuestionnaireResponse>& ratings)
{
    Session s(std::move(id), config);
    for (const auto& r : ratings) {
        s.next_design();
        s.submit_rating(r);
    }
    return s;
}

} // namespace ivca
