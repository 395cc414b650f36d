#ifndef IVCA_ACQUISITION_HPP
#define IVCA_ACQUISITION_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ivca/design_space.hpp"
#include "ivca/gp.hpp"
#include "ivca/hypervolume.hpp"
#include "ivca/rng.hpp"

namespace ivca {

using ObjectiveMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct AcquisitionConfig {
    int n_mc_samples = 512;
    int n_candidates = 1024;
    int batch_size = 1;
    std::uint64_t seed = 3;

    void validate() const;
};

/// Standard-normal draws shared by every candidate in one iteration.
struct BaseSamples {
    /// observed[s] is (n_observed x 3)
    std::vector<ObjectiveMatrix> observed;
    /// candidate.row(s) drives the candidate's conditional draw
    ObjectiveMatrix candidate;

    int size() const noexcept { return static_cast<int>(observed.size()); }
};

BaseSamples draw_base_samples(Eigen::Index n_observed, int n_samples, Rng& rng);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo noisy expected hypervolume improvement for a single candidate.
///
/// Holds a Gaussian posterior over the observed points (independent per objective)
/// and, for every base sample s, the sampled front F_s. A candidate is described by
/// its marginal mean/variance and its covariance with the observed points; its value
/// in sample s is drawn conditionally on F_s, so all candidates share F_s.
///
/// Covariance roots come from a symmetric eigendecomposition with non-positive
/// eigenvalues dropped, which keeps degenerate (zero-variance) posteriors exact.
class NehviEstimator {
public:
    NehviEstimator(const ObjectiveMatrix& observed_means, const std::array<Eigen::MatrixXd, 3>& observed_cov,
                   const Eigen::Vector3d& ref, const BaseSamples& base);

    Estimate evaluate(const Eigen::Vector3d& cand_mean, const ObjectiveMatrix& cross_cov,
                      const Eigen::Vector3d& cand_var) const;

    const Eigen::Vector3d& reference_point() const noexcept { return ref_; }
    /// Non-dominated part of F_s (points above ref only).
    const std::vector<detail::Point3<double>>& sampled_front(int s) const { return fronts_[s]; }

private:
    Eigen::Vector3d ref_;
    std::array<Eigen::MatrixXd, 3> whiten_; // (n x rank_k): maps cross-covariances to loadings
    std::array<Eigen::MatrixXd, 3> z_;      // (n_samples x rank_k) eigen-coordinate normals
    ObjectiveMatrix z_cand_;
    std::vector<std::vector<detail::Point3<double>>> fronts_;
};

/// Reference point convention: ref_i = max(0, min_i - 0.1 (max_i - min_i)) over observed canonical values.
Eigen::Vector3d reference_point(const ObjectiveMatrix& observed_canonical);

/// qNEHVI (q = 1) of one candidate under the surrogates.
double qnehvi(std::span<const GP, 3> gps, const GP::Inputs& observed_inputs, const DesignPoint& candidate,
              const Eigen::Vector3d& ref, const BaseSamples& base);

/// qNEHVI of many candidates with shared base samples.
std::vector<double> qnehvi_batch(std::span<const GP, 3> gps, const GP::Inputs& observed_inputs,
                                 const GP::Inputs& candidates, const Eigen::Vector3d& ref, const BaseSamples& base);

/// What the optimizer needs to know about a session to propose its next design.
struct ProposalContext {
    GP::Inputs observed_inputs;
    ObjectiveMatrix observed_canonical;
    /// Set for the fixed-LoA condition; every candidate's loa is overwritten with it.
    std::optional<double> fixed_loa;
    std::uint64_t seed = 3;
    int iteration = 1;
};

struct Proposal {
    DesignPoint design;
    double acquisition_value = 0.0;
    int candidate_index = -1;
    Eigen::Vector3d reference_point = Eigen::Vector3d::Zero();
    std::array<GP::Hyper, 3> hyperparams;
};

/// Fit the three surrogates on the context's observations.
std::array<GP, 3> fit_surrogates(const GP::Inputs& inputs, const ObjectiveMatrix& canonical, std::uint64_t seed,
                                 int iteration);

/// Candidate sweep used by propose_next: scrambled Sobol points with LoA snapped
/// (or overwritten by fixed_loa).
GP::Inputs generate_candidates(int n, std::uint64_t seed, int iteration, std::optional<double> fixed_loa);

Proposal propose_next(const ProposalContext& ctx, const AcquisitionConfig& config = {});

} // namespace ivca

#endif // IVCA_ACQUISITION_HPP
