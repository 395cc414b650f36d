#ifndef IVCA_GP_HPP
#define IVCA_GP_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ivca/errors.hpp"
#include "ivca/kernel.hpp"

namespace ivca {

/// Jitter ladder tried when K + noise I fails to factorize.
inline constexpr std::array<double, 4> kJitterLadder{0.0, 1e-6, 1e-4, 1e-2};

/// Exact GP regression on a 4-dimensional input space with a Matern 5/2 ARD kernel
/// and Gaussian observation noise. Targets are standardized internally; every
/// prediction is reported on the original target scale.
///
/// Immutable once built; all query methods are const and thread-safe.
template <typename Scalar>
class GaussianProcess {
public:
    static constexpr int Dim = 4;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Inputs = Eigen::Matrix<Scalar, Eigen::Dynamic, Dim>;
    using Hyper = GPHyperparams<Scalar, Dim>;

    struct FitOptions {
        int n_starts = 8;
        std::uint64_t seed = 0;
        Scalar noise_floor = Scalar(Hyper::kDefaultNoiseFloor);
        /// Pin the (standardized) noise variance instead of searching it. May be below the floor.
        std::optional<Scalar> fixed_noise;
        int max_evals_per_start = 400;
        Scalar initial_step = Scalar(1);
        Scalar min_step = Scalar(1e-3);
    };

    struct StartRecord {
        Hyper initial;
        Hyper final;
        /// MLL after each accepted step, beginning with the start's initial value.
        std::vector<Scalar> accepted_mll;
    };

    struct FitReport {
        std::vector<StartRecord> starts;
        int best_start = -1;
        Scalar best_mll = -std::numeric_limits<Scalar>::infinity();
    };

    struct Posterior {
        Vector mean;
        Matrix covariance;
    };

    /// Posterior over two query sets where only the diagonal of the second block is needed.
    struct BlockPosterior {
        Vector mean_a;
        Matrix cov_aa;
        Vector mean_b;
        Matrix cov_ab;
        Vector var_b;
    };

    static GaussianProcess fit(const Inputs& x, const Vector& y, const FitOptions& options = {},
                               FitReport* report = nullptr);

    /// Condition on data with fixed hyperparameters (standardized scale).
    static GaussianProcess condition(const Inputs& x, const Vector& y, const Hyper& hp,
                                     Scalar noise_floor = Scalar(Hyper::kDefaultNoiseFloor));

    Posterior posterior(const Inputs& queries) const;
    BlockPosterior posterior_blocks(const Inputs& a, const Inputs& b) const;

    const Hyper& hyperparams() const noexcept { return hp_; }
    const Inputs& inputs() const noexcept { return x_; }
    const Vector& targets() const noexcept { return y_; }
    Scalar target_mean() const noexcept { return y_mean_; }
    Scalar target_scale() const noexcept { return y_scale_; }
    /// Prior variance of the latent function on the original target scale.
    Scalar prior_variance() const noexcept { return hp_.signal_variance * y_scale_ * y_scale_; }
    /// Log marginal likelihood of the standardized targets.
    Scalar log_marginal_likelihood() const noexcept { return mll_; }
    Scalar jitter() const noexcept { return jitter_; }

    static constexpr Scalar kTargetVarianceFloor = Scalar(1e-8);

    /// Standardized-target MLL for arbitrary hyperparameters; -inf if the kernel
    /// matrix cannot be factorized.
    static Scalar log_marginal_likelihood(const Inputs& x, const Vector& y_std, const Hyper& hp);

private:
    struct Factor {
        Eigen::LLT<Matrix> llt;
        Vector alpha;
        Scalar jitter = 0;
    };

    static std::optional<Factor> factorize(const Inputs& x, const Vector& y_std, const Hyper& hp);
    static Scalar mll_of(const Factor& f, const Vector& y_std);

    GaussianProcess() = default;

    Inputs x_;
    Vector y_;
    Vector y_std_;
    Scalar y_mean_ = 0;
    Scalar y_scale_ = 1;
    Hyper hp_;
    Factor factor_;
    Scalar mll_ = 0;
    Scalar jitter_ = 0;
};

// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar>
void standardize(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, Scalar& mean, Scalar& scale)
{
    const auto n = y.size();
    mean = y.mean();
    const Scalar var = (y.array() - mean).square().sum() / Scalar(n - 1);
    scale = std::sqrt(std::max(var, GaussianProcess<Scalar>::kTargetVarianceFloor));
}

template <typename Scalar>
void check_training_data(const typename GaussianProcess<Scalar>::Inputs& x,
                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y)
{
    if (x.rows() != y.size()) throw ValidationError("targets", "count must equal number of inputs");
    if (x.rows() < 2) throw InsufficientDataError("GP fit needs at least 2 observations");
    if (!x.allFinite() || !y.allFinite()) throw ValidationError("training data", "must be finite");
}

} // namespace detail

template <typename Scalar>
auto GaussianProcess<Scalar>::factorize(const Inputs& x, const Vector& y_std, const Hyper& hp)
    -> std::optional<Factor>
{
    Matrix k = kernel_matrix(x, x, hp);
    k.diagonal().array() += hp.noise_variance;
    for (double jitter : kJitterLadder) {
        Factor f;
        Matrix kj = k;
        kj.diagonal().array() += Scalar(jitter);
        f.llt.compute(kj);
        if (f.llt.info() != Eigen::Success) continue;
        if (!f.llt.matrixLLT().diagonal().allFinite()) continue;
        f.alpha = f.llt.solve(y_std);
        if (!f.alpha.allFinite()) continue;
        f.jitter = Scalar(jitter);
        return f;
    }
    return std::nullopt;
}

template <typename Scalar>
Scalar GaussianProcess<Scalar>::mll_of(const Factor& f, const Vector& y_std)
{
    const auto n = y_std.size();
    const Scalar log_det_half = f.llt.matrixLLT().diagonal().array().log().sum();
    return Scalar(-0.5) * y_std.dot(f.alpha) - log_det_half -
           Scalar(0.5) * Scalar(n) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
Scalar GaussianProcess<Scalar>::log_marginal_likelihood(const Inputs& x, const Vector& y_std, const Hyper& hp)
{
    auto f = factorize(x, y_std, hp);
    if (!f) return -std::numeric_limits<Scalar>::infinity();
    const Scalar v = mll_of(*f, y_std);
    return std::isfinite(v) ? v : -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
GaussianProcess<Scalar> GaussianProcess<Scalar>::condition(const Inputs& x, const Vector& y, const Hyper& hp,
                                                           Scalar noise_floor)
{
    detail::check_training_data<Scalar>(x, y);
    hp.validate(noise_floor);

    GaussianProcess gp;
    gp.x_ = x;
    gp.y_ = y;
    detail::standardize(y, gp.y_mean_, gp.y_scale_);
    gp.y_std_ = (y.array() - gp.y_mean_) / gp.y_scale_;
    gp.hp_ = hp;
    auto f = factorize(gp.x_, gp.y_std_, hp);
    if (!f) throw ConditioningError("kernel matrix not positive definite after jitter escalation to 1e-2");
    gp.factor_ = std::move(*f);
    gp.jitter_ = gp.factor_.jitter;
    gp.mll_ = mll_of(gp.factor_, gp.y_std_);
    return gp;
}

template <typename Scalar>
GaussianProcess<Scalar> GaussianProcess<Scalar>::fit(const Inputs& x, const Vector& y, const FitOptions& options,
                                                     FitReport* report)
{
    detail::check_training_data<Scalar>(x, y);
    if (options.n_starts < 1) throw ValidationError("n_starts", "must be at least 1");

    Scalar y_mean, y_scale;
    detail::standardize(y, y_mean, y_scale);
    const Vector y_std = (y.array() - y_mean) / y_scale;

    const bool search_noise = !options.fixed_noise.has_value();
    const int n_params = Dim + 1 + (search_noise ? 1 : 0);
    const Scalar noise_floor = search_noise ? options.noise_floor : std::min(options.noise_floor, *options.fixed_noise);

    // log-space box
    Vector lo(n_params), hi(n_params);
    lo.head(Dim).setConstant(std::log(Scalar(Hyper::kMinLengthscale)));
    hi.head(Dim).setConstant(std::log(Scalar(Hyper::kMaxLengthscale)));
    lo[Dim] = std::log(Scalar(1e-4));
    hi[Dim] = std::log(Scalar(1e4));
    if (search_noise) {
        lo[Dim + 1] = std::log(options.noise_floor);
        hi[Dim + 1] = std::log(Scalar(1e1));
    }

    auto to_hyper = [&](const Vector& theta) {
        Hyper hp;
        hp.lengthscales = theta.head(Dim).array().exp();
        hp.signal_variance = std::exp(theta[Dim]);
        hp.noise_variance = search_noise ? std::exp(theta[Dim + 1]) : *options.fixed_noise;
        return hp;
    };
    auto objective = [&](const Vector& theta) { return log_marginal_likelihood(x, y_std, to_hyper(theta)); };

    std::mt19937_64 rng(options.seed);
    auto log_uniform = [&](Scalar a, Scalar b) {
        std::uniform_real_distribution<double> u(std::log(double(a)), std::log(double(b)));
        return Scalar(u(rng));
    };

    FitReport local;
    Vector best_theta;
    for (int s = 0; s < options.n_starts; ++s) {
        Vector theta(n_params);
        if (s == 0) {
            theta.head(Dim).setConstant(std::log(Scalar(0.5)));
            theta[Dim] = Scalar(0);
            if (search_noise) theta[Dim + 1] = std::log(std::max(Scalar(1e-2), options.noise_floor));
        } else {
            for (int i = 0; i < Dim; ++i) theta[i] = log_uniform(Scalar(0.05), Scalar(5));
            theta[Dim] = log_uniform(Scalar(0.2), Scalar(5));
            if (search_noise)
                theta[Dim + 1] = log_uniform(std::max(Scalar(1e-4), options.noise_floor),
                                             std::max(Scalar(0.5), options.noise_floor));
        }

        StartRecord rec;
        rec.initial = to_hyper(theta);
        Scalar best = objective(theta);
        rec.accepted_mll.push_back(best);

        // Compass search: poll +/- step along each coordinate, take the first strict
        // improvement, halve the step when no poll improves.
        Scalar step = options.initial_step;
        int evals = 1;
        while (step >= options.min_step && evals < options.max_evals_per_start) {
            bool improved = false;
            for (int i = 0; i < n_params && !improved && evals < options.max_evals_per_start; ++i) {
                for (Scalar dir : {Scalar(1), Scalar(-1)}) {
                    Vector cand = theta;
                    cand[i] = std::clamp(cand[i] + dir * step, lo[i], hi[i]);
                    if (cand[i] == theta[i]) continue;
                    const Scalar v = objective(cand);
                    ++evals;
                    if (v > best) {
                        theta = cand;
                        best = v;
                        rec.accepted_mll.push_back(v);
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= Scalar(0.5);
        }
        rec.final = to_hyper(theta);
        if (local.best_start < 0 || best > local.best_mll) {
            local.best_mll = best;
            local.best_start = s;
            best_theta = theta;
        }
        local.starts.push_back(std::move(rec));
    }

    if (!std::isfinite(local.best_mll))
        throw ConditioningError("no hyperparameter start produced a factorizable kernel matrix");

    GaussianProcess gp = condition(x, y, to_hyper(best_theta), noise_floor);
    if (report) *report = std::move(local);
    return gp;
}

template <typename Scalar>
auto GaussianProcess<Scalar>::posterior(const Inputs& queries) const -> Posterior
{
    const Matrix k_xq = kernel_matrix(x_, queries, hp_);
    Posterior p;
    p.mean = k_xq.transpose() * factor_.alpha;
    const Matrix v = factor_.llt.matrixL().solve(k_xq);
    Matrix cov = kernel_matrix(queries, queries, hp_) - v.transpose() * v;
    cov = Scalar(0.5) * (cov + cov.transpose()).eval();
    p.mean = (p.mean.array() * y_scale_ + y_mean_).matrix();
    p.covariance = cov * (y_scale_ * y_scale_);
    return p;
}

template <typename Scalar>
auto GaussianProcess<Scalar>::posterior_blocks(const Inputs& a, const Inputs& b) const -> BlockPosterior
{
    const Scalar s2 = y_scale_ * y_scale_;
    const Matrix k_xa = kernel_matrix(x_, a, hp_);
    const Matrix k_xb = kernel_matrix(x_, b, hp_);
    const Matrix va = factor_.llt.matrixL().solve(k_xa);
    const Matrix vb = factor_.llt.matrixL().solve(k_xb);

    BlockPosterior out;
    out.mean_a = ((k_xa.transpose() * factor_.alpha).array() * y_scale_ + y_mean_).matrix();
    out.mean_b = ((k_xb.transpose() * factor_.alpha).array() * y_scale_ + y_mean_).matrix();
    Matrix caa = kernel_matrix(a, a, hp_) - va.transpose() * va;
    out.cov_aa = Scalar(0.5) * (caa + caa.transpose()) * s2;
    out.cov_ab = (kernel_matrix(a, b, hp_) - va.transpose() * vb) * s2;
    out.var_b.resize(b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        out.var_b[j] = (hp_.signal_variance - vb.col(j).squaredNorm()) * s2;
    return out;
}

/// Draw n_samples joint posterior samples at `points` from three independent GPs.
/// Result[s] is (points x 3). Objectives are sampled independently; points jointly.
template <typename Scalar, typename Generator>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 3>>
joint_sample(std::span<const GaussianProcess<Scalar>, 3> gps, const typename GaussianProcess<Scalar>::Inputs& points,
             int n_samples, Generator& rng)
{
    using Matrix = typename GaussianProcess<Scalar>::Matrix;
    for (std::size_t k = 1; k < gps.size(); ++k)
        if (gps[k].inputs().rows() != gps[0].inputs().rows() || gps[k].inputs() != gps[0].inputs())
            throw ValidationError("gps", "surrogates must share training inputs");

    std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 3>> out;
    if (n_samples <= 0) return out;
    const Eigen::Index m = points.rows();

    std::array<typename GaussianProcess<Scalar>::Vector, 3> means;
    std::array<Matrix, 3> roots;
    for (int k = 0; k < 3; ++k) {
        auto post = gps[k].posterior(points);
        means[k] = post.mean;
        const Scalar scale = gps[k].target_scale() * gps[k].target_scale();
        bool ok = false;
        for (double jitter : kJitterLadder) {
            Matrix c = post.covariance;
            c.diagonal().array() += Scalar(jitter) * scale;
            Eigen::LLT<Matrix> llt(c);
            if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) {
                roots[k] = llt.matrixL();
                ok = true;
                break;
            }
        }
        if (!ok) throw ConditioningError("posterior covariance not factorizable after jitter escalation");
    }

    std::normal_distribution<double> normal;
    out.reserve(static_cast<std::size_t>(n_samples));
    typename GaussianProcess<Scalar>::Vector z(m);
    for (int s = 0; s < n_samples; ++s) {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 3> sample(m, 3);
        for (int k = 0; k < 3; ++k) {
            for (Eigen::Index i = 0; i < m; ++i) z[i] = Scalar(normal(rng));
            sample.col(k) = means[k] + roots[k] * z;
        }
        out.push_back(std::move(sample));
    }
    return out;
}

extern template class GaussianProcess<double>;
using GP = GaussianProcess<double>;

} // namespace ivca

#endif // IVCA_GP_HPP
