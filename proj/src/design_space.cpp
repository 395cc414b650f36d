#include "ivca/design_space.hpp"

#include <cmath>
#include <string>

#include "ivca/errors.hpp"

namespace ivca {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::Validation: return "validation_error";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::Conditioning: return "conditioning_error";
    case ErrorCode::Protocol: return "protocol_error";
    case ErrorCode::SessionComplete: return "session_complete";
    case ErrorCode::Contract: return "contract_violation";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::UndefinedCorrelation: return "undefined_correlation";
    }
    return "unknown";
}

namespace {

void require_unit(const char* field, double v)
{
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw ValidationError(field, "must lie in [0,1], got " + std::to_string(v));
}

void require_int_range(const char* field, int v, int lo, int hi)
{
    if (v < lo || v > hi)
        throw ValidationError(field, "must lie in [" + std::to_string(lo) + "," + std::to_string(hi) +
                                         "], got " + std::to_string(v));
}

void require_real_range(const char* field, double v, double lo, double hi)
{
    if (!std::isfinite(v) || v < lo || v > hi)
        throw ValidationError(field, "must lie in [" + std::to_string(lo) + "," + std::to_string(hi) +
                                         "], got " + std::to_string(v));
}

} // namespace

void validate(const DesignPoint& design)
{
    require_unit("glow", design.glow);
    require_unit("volume", design.volume);
    require_unit("transparency", design.transparency);
    require_unit("loa", design.loa);
    if (!is_loa_step(design.loa))
        throw ValidationError("loa", "must be one of 0, 0.25, 0.5, 0.75, 1");
}

void validate(const QuestionnaireResponse& r)
{
    require_int_range("mental_demand_raw", r.mental_demand_raw, 0, 20);
    require_int_range("pred_item1_raw", r.pred_item1_raw, 1, 5);
    require_int_range("pred_item2_raw", r.pred_item2_raw, 1, 5);
    require_int_range("use_item1_raw", r.use_item1_raw, 1, 5);
    require_int_range("use_item2_raw", r.use_item2_raw, 1, 5);
}

void validate(const ObjectiveVector& o)
{
    require_real_range("mental_demand", o.mental_demand, 0.0, 20.0);
    require_real_range("predictability", o.predictability, 1.0, 5.0);
    require_real_range("usefulness", o.usefulness, 1.0, 5.0);
}

ObjectiveVector score_questionnaire(const QuestionnaireResponse& r)
{
    validate(r);
    ObjectiveVector o;
    o.mental_demand = r.mental_demand_raw;
    // 5-point reverse coding: 6 - raw
    o.predictability = ((6 - r.pred_item1_raw) + (6 - r.pred_item2_raw)) / 2.0;
    o.usefulness = (r.use_item1_raw + r.use_item2_raw) / 2.0;
    return o;
}

CanonicalObjectives to_canonical(const ObjectiveVector& o)
{
    validate(o);
    return {1.0 - o.mental_demand / 20.0, (o.predictability - 1.0) / 4.0, (o.usefulness - 1.0) / 4.0};
}

ObjectiveVector from_canonical(const CanonicalObjectives& c)
{
    require_unit("y1", c.y1);
    require_unit("y2", c.y2);
    require_unit("y3", c.y3);
    return {20.0 * (1.0 - c.y1), 1.0 + 4.0 * c.y2, 1.0 + 4.0 * c.y3};
}

double snap_loa(double x)
{
    require_unit("loa", x);
    // floor(4x + 0.5) rounds exact midpoints toward the higher step
    return std::floor(4.0 * x + 0.5) / 4.0;
}

bool is_loa_step(double x) noexcept
{
    if (!std::isfinite(x)) return false;
    for (double s : kLoaSteps)
        if (std::abs(x - s) <= 1e-12) return true;
    return false;
}

int loa_level(double loa_step)
{
    if (!is_loa_step(loa_step)) throw ValidationError("loa", "not an LoA step: " + std::to_string(loa_step));
    return static_cast<int>(std::lround(loa_step * 4.0));
}

double loa_step_for_level(int level)
{
    require_int_range("level", level, 0, kNumLoaLevels - 1);
    return kLoaSteps[static_cast<std::size_t>(level)];
}

} // namespace ivca
