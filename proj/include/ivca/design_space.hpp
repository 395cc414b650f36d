#ifndef IVCA_DESIGN_SPACE_HPP
#define IVCA_DESIGN_SPACE_HPP

#include <array>

#include <Eigen/Core>

namespace ivca {

inline constexpr int kNumParams = 4;
inline constexpr int kNumObjectives = 3;
inline constexpr int kNumLoaLevels = 5;

using DesignVector = Eigen::Matrix<double, kNumParams, 1>;
using ObjectiveArray = Eigen::Matrix<double, kNumObjectives, 1>;

/// One configuration of the proactive assistant.
///
/// glow         interior dashboard lighting intensity (p1)
/// volume       auditory alert volume (p2)
/// transparency infotainment intervention symbol transparency (p3)
/// loa          level of autonomy (p4), one of {0, 0.25, 0.5, 0.75, 1}
struct DesignPoint {
    double glow = 0.0;
    double volume = 0.0;
    double transparency = 0.0;
    double loa = 0.0;

    DesignVector vector() const { return DesignVector(glow, volume, transparency, loa); }
    static DesignPoint from_vector(const DesignVector& v) { return {v[0], v[1], v[2], v[3]}; }

    bool operator==(const DesignPoint&) const = default;
};

/// Throws ValidationError unless every field is in [0,1] and loa sits on a step.
void validate(const DesignPoint& design);

/// Raw questionnaire answers. Predictability items are phrased negatively
/// ("The system reacts unpredictably."), so a higher raw value means less predictable.
struct QuestionnaireResponse {
    int mental_demand_raw = 0; // [0,20]
    int pred_item1_raw = 1;    // [1,5]
    int pred_item2_raw = 1;    // [1,5]
    int use_item1_raw = 1;     // [1,5]
    int use_item2_raw = 1;     // [1,5]

    bool operator==(const QuestionnaireResponse&) const = default;
};

void validate(const QuestionnaireResponse& response);

/// Scored objectives on their instrument scales.
struct ObjectiveVector {
    double mental_demand = 0.0;  // [0,20], minimize
    double predictability = 1.0; // [1,5], maximize
    double usefulness = 1.0;     // [1,5], maximize

    bool operator==(const ObjectiveVector&) const = default;
};

void validate(const ObjectiveVector& objectives);

/// All three objectives mapped to [0,1], larger is better.
struct CanonicalObjectives {
    double y1 = 0.0; // mental demand
    double y2 = 0.0; // predictability
    double y3 = 0.0; // usefulness

    ObjectiveArray array() const { return ObjectiveArray(y1, y2, y3); }
    bool operator==(const CanonicalObjectives&) const = default;
};

ObjectiveVector score_questionnaire(const QuestionnaireResponse& response);
CanonicalObjectives to_canonical(const ObjectiveVector& objectives);
ObjectiveVector from_canonical(const CanonicalObjectives& canonical);

inline constexpr std::array<double, kNumLoaLevels> kLoaSteps{0.0, 0.25, 0.5, 0.75, 1.0};

/// Nearest LoA step; exact midpoints round up.
double snap_loa(double x);
bool is_loa_step(double x) noexcept;
int loa_level(double loa_step);
double loa_step_for_level(int level);

} // namespace ivca

#endif // IVCA_DESIGN_SPACE_HPP
