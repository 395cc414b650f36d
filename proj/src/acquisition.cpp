#include "ivca/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ivca/errors.hpp"
#include "ivca/pareto.hpp"
#include "ivca/sobol.hpp"

namespace ivca {

void AcquisitionConfig::validate() const
{
    if (n_mc_samples < 1) throw ValidationError("n_mc_samples", "must be at least 1");
    if (n_candidates < 1) throw ValidationError("n_candidates", "must be at least 1");
    if (batch_size != 1) throw ValidationError("batch_size", "only q = 1 is supported");
}

BaseSamples draw_base_samples(Eigen::Index n_observed, int n_samples, Rng& rng)
{
    std::normal_distribution<double> normal;
    BaseSamples base;
    base.observed.reserve(static_cast<std::size_t>(std::max(n_samples, 0)));
    base.candidate.resize(std::max(n_samples, 0), 3);
    for (int s = 0; s < n_samples; ++s) {
        ObjectiveMatrix z(n_observed, 3);
        for (Eigen::Index i = 0; i < n_observed; ++i)
            for (int k = 0; k < 3; ++k) z(i, k) = normal(rng);
        for (int k = 0; k < 3; ++k) base.candidate(s, k) = normal(rng);
        base.observed.push_back(std::move(z));
    }
    return base;
}

NehviEstimator::NehviEstimator(const ObjectiveMatrix& observed_means, const std::array<Eigen::MatrixXd, 3>& observed_cov,
                               const Eigen::Vector3d& ref, const BaseSamples& base)
    : ref_(ref)
{
    const Eigen::Index n = observed_means.rows();
    const int n_samples = base.size();
    if (n_samples < 1) throw ValidationError("base_samples", "need at least one sample");
    for (const auto& z : base.observed)
        if (z.rows() != n) throw ValidationError("base_samples", "observed block size mismatch");
    z_cand_ = base.candidate;

    std::array<Eigen::MatrixXd, 3> roots;
    for (int k = 0; k < 3; ++k) {
        const auto& cov = observed_cov[k];
        if (cov.rows() != n || cov.cols() != n) throw ValidationError("observed_cov", "shape mismatch");
        if (!cov.allFinite()) throw ConditioningError("posterior covariance is not finite");

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()));
        if (eig.info() != Eigen::Success) throw ConditioningError("posterior covariance eigendecomposition failed");
        const Eigen::VectorXd& lambda = eig.eigenvalues();
        const double lambda_max = n > 0 ? lambda.maxCoeff() : 0.0;
        const double tol = 1e-10 * lambda_max;

        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < n; ++j)
            if (lambda[j] > 0.0 && lambda[j] > tol) keep.push_back(j);

        const auto rank = static_cast<Eigen::Index>(keep.size());
        roots[k].resize(n, rank);
        whiten_[k].resize(n, rank);
        for (Eigen::Index r = 0; r < rank; ++r) {
            const double sq = std::sqrt(lambda[keep[r]]);
            roots[k].col(r) = eig.eigenvectors().col(keep[r]) * sq;
            whiten_[k].col(r) = eig.eigenvectors().col(keep[r]) / sq;
        }
        // Rotate the base normals into the eigen basis; an orthonormal rotation of
        // i.i.d. normals is still i.i.d. normal, and it keeps F_s a linear map of base.observed.
        z_[k].resize(n_samples, rank);
        for (int s = 0; s < n_samples; ++s) {
            const Eigen::VectorXd zs = base.observed[s].col(k);
            for (Eigen::Index r = 0; r < rank; ++r) z_[k](s, r) = eig.eigenvectors().col(keep[r]).dot(zs);
        }
    }

    fronts_.resize(static_cast<std::size_t>(n_samples));
    ObjectiveMatrix sample(n, 3);
    for (int s = 0; s < n_samples; ++s) {
        for (int k = 0; k < 3; ++k) {
            sample.col(k) = observed_means.col(k);
            if (roots[k].cols() > 0) sample.col(k) += roots[k] * z_[k].row(s).transpose();
        }
        std::vector<Eigen::Index> above;
        for (Eigen::Index i = 0; i < n; ++i)
            if (sample(i, 0) > ref[0] && sample(i, 1) > ref[1] && sample(i, 2) > ref[2]) above.push_back(i);
        const ObjectiveMatrix kept = select_rows(sample, above);
        auto& front = fronts_[static_cast<std::size_t>(s)];
        for (Eigen::Index i : pareto_filter(kept)) front.push_back({kept(i, 0), kept(i, 1), kept(i, 2)});
    }
}

Estimate NehviEstimator::evaluate(const Eigen::Vector3d& cand_mean, const ObjectiveMatrix& cross_cov,
                                  const Eigen::Vector3d& cand_var) const
{
    std::array<Eigen::VectorXd, 3> loading;
    Eigen::Vector3d cond_sd;
    for (int k = 0; k < 3; ++k) {
        loading[k] = whiten_[k].transpose() * cross_cov.col(k);
        cond_sd[k] = std::sqrt(std::max(0.0, cand_var[k] - loading[k].squaredNorm()));
    }

    const int n_samples = static_cast<int>(fronts_.size());
    std::vector<detail::Point3<double>> scratch;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        detail::Point3<double> c;
        for (int k = 0; k < 3; ++k) {
            double v = cand_mean[k] + cond_sd[k] * z_cand_(s, k);
            if (loading[k].size() > 0) v += z_[k].row(s).dot(loading[k]);
            c[k] = v;
        }
        const double gain = detail::exclusive_contribution(fronts_[static_cast<std::size_t>(s)],
                                                           {ref_[0], ref_[1], ref_[2]}, c, scratch);
        sum += gain;
        sum_sq += gain * gain;
    }
    Estimate e;
    e.value = sum / n_samples;
    if (n_samples > 1) {
        const double var = std::max(0.0, (sum_sq - n_samples * e.value * e.value) / (n_samples - 1));
        e.std_error = std::sqrt(var / n_samples);
    }
    return e;
}

Eigen::Vector3d reference_point(const ObjectiveMatrix& observed_canonical)
{
    if (observed_canonical.rows() < 1) throw InsufficientDataError("reference point needs at least one observation");
    Eigen::Vector3d ref;
    for (int k = 0; k < 3; ++k) {
        const double lo = observed_canonical.col(k).minCoeff();
        const double hi = observed_canonical.col(k).maxCoeff();
        ref[k] = std::max(0.0, lo - 0.1 * (hi - lo));
    }
    return ref;
}

namespace {

NehviEstimator make_estimator(std::span<const GP, 3> gps, const GP::Inputs& observed_inputs,
                              const Eigen::Vector3d& ref, const BaseSamples& base)
{
    ObjectiveMatrix means(observed_inputs.rows(), 3);
    std::array<Eigen::MatrixXd, 3> cov;
    for (int k = 0; k < 3; ++k) {
        auto post = gps[k].posterior(observed_inputs);
        means.col(k) = post.mean;
        cov[k] = post.covariance;
    }
    return NehviEstimator(means, cov, ref, base);
}

} // namespace

std::vector<double> qnehvi_batch(std::span<const GP, 3> gps, const GP::Inputs& observed_inputs,
                                 const GP::Inputs& candidates, const Eigen::Vector3d& ref, const BaseSamples& base)
{
    const NehviEstimator estimator = make_estimator(gps, observed_inputs, ref, base);
    std::array<GP::BlockPosterior, 3> blocks;
    for (int k = 0; k < 3; ++k) blocks[k] = gps[k].posterior_blocks(observed_inputs, candidates);

    std::vector<double> values(static_cast<std::size_t>(candidates.rows()));
    ObjectiveMatrix cross(observed_inputs.rows(), 3);
    for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
        Eigen::Vector3d mean, var;
        for (int k = 0; k < 3; ++k) {
            mean[k] = blocks[k].mean_b[j];
            var[k] = blocks[k].var_b[j];
            cross.col(k) = blocks[k].cov_ab.col(j);
        }
        values[static_cast<std::size_t>(j)] = estimator.evaluate(mean, cross, var).value;
    }
    return values;
}

double qnehvi(std::span<const GP, 3> gps, const GP::Inputs& observed_inputs, const DesignPoint& candidate,
              const Eigen::Vector3d& ref, const BaseSamples& base)
{
    GP::Inputs c(1, 4);
    c.row(0) = candidate.vector().transpose();
    return qnehvi_batch(gps, observed_inputs, c, ref, base).front();
}

std::array<GP, 3> fit_surrogates(const GP::Inputs& inputs, const ObjectiveMatrix& canonical, std::uint64_t seed,
                                 int iteration)
{
    Rng rng = derive_rng(seed, {kStreamHyper, static_cast<std::uint64_t>(iteration)});
    auto fit_one = [&](int k) {
        GP::FitOptions opt;
        opt.seed = rng();
        return GP::fit(inputs, canonical.col(k), opt);
    };
    GP g0 = fit_one(0);
    GP g1 = fit_one(1);
    GP g2 = fit_one(2);
    return {std::move(g0), std::move(g1), std::move(g2)};
}

GP::Inputs generate_candidates(int n, std::uint64_t seed, int iteration, std::optional<double> fixed_loa)
{
    Rng rng = derive_rng(seed, {kStreamCandidates, static_cast<std::uint64_t>(iteration)});
    SobolSequence sobol(4, rng());
    GP::Inputs cands = sobol.draw(n);
    for (Eigen::Index i = 0; i < cands.rows(); ++i)
        cands(i, 3) = fixed_loa ? *fixed_loa : snap_loa(cands(i, 3));
    return cands;
}

Proposal propose_next(const ProposalContext& ctx, const AcquisitionConfig& config)
{
    config.validate();
    const Eigen::Index n = ctx.observed_inputs.rows();
    if (n < 2 || ctx.observed_canonical.rows() != n)
        throw InsufficientDataError("optimization needs at least 2 rated observations; continue the sampling phase");
    if (ctx.fixed_loa && !is_loa_step(*ctx.fixed_loa)) throw ValidationError("fixed_loa", "not an LoA step");

    const std::array<GP, 3> gps = fit_surrogates(ctx.observed_inputs, ctx.observed_canonical, ctx.seed, ctx.iteration);
    const Eigen::Vector3d ref = reference_point(ctx.observed_canonical);

    Rng base_rng = derive_rng(ctx.seed, {kStreamBaseSamples, static_cast<std::uint64_t>(ctx.iteration)});
    const BaseSamples base = draw_base_samples(n, config.n_mc_samples, base_rng);
    const GP::Inputs candidates = generate_candidates(config.n_candidates, ctx.seed, ctx.iteration, ctx.fixed_loa);
    const std::vector<double> values = qnehvi_batch(gps, ctx.observed_inputs, candidates, ref, base);

    // first maximum wins ties
    const auto best = std::max_element(values.begin(), values.end());
    const auto idx = static_cast<Eigen::Index>(best - values.begin());

    Proposal p;
    p.design = DesignPoint::from_vector(candidates.row(idx).transpose());
    p.acquisition_value = *best;
    p.candidate_index = static_cast<int>(idx);
    p.reference_point = ref;
    for (int k = 0; k < 3; ++k) p.hyperparams[k] = gps[k].hyperparams();
    return p;
}

} // namespace ivca
