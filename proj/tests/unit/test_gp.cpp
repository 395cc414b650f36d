#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "ivca/gp.hpp"

using namespace ivca;

namespace {

GP::Inputs random_inputs(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    GP::Inputs x(n, 4);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < 4; ++d) x(i, d) = u(rng);
    return x;
}

double smooth(const Eigen::RowVector4d& x)
{
    return std::sin(3 * x[0]) + 0.5 * std::cos(2 * x[1]) + x[2] * x[3];
}

// scalar Matern 5/2 written out longhand
double oracle_k(const Eigen::RowVector4d& a, const Eigen::RowVector4d& b, const GP::Hyper& hp)
{
    double r2 = 0;
    for (int d = 0; d < 4; ++d) {
        const double t = (a[d] - b[d]) / hp.lengthscales[d];
        r2 += t * t;
    }
    const double r = std::sqrt(r2);
    return hp.signal_variance * (1 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) * std::exp(-std::sqrt(5.0) * r);
}

GP::Hyper make_hp(double ls, double sf2, double noise)
{
    GP::Hyper hp;
    hp.lengthscales.setConstant(ls);
    hp.signal_variance = sf2;
    hp.noise_variance = noise;
    return hp;
}

} // namespace

TEST_CASE("kernel values")
{
    GP::Hyper hp = make_hp(1, 1, 1e-2);
    const Eigen::Vector4d a(0.1, 0.2, 0.3, 0.4);
    const Eigen::Vector4d b(1.1, 0.2, 0.3, 0.4);
    CHECK(kernel(a, b, hp) == doctest::Approx(0.52399).epsilon(1e-5));
    const double s5 = std::sqrt(5.0);
    CHECK(std::abs(kernel(a, b, hp) - (1 + s5 + 5.0 / 3.0) * std::exp(-s5)) < 1e-15);

    hp.signal_variance = 2;
    CHECK(kernel(a, a, hp) == 2.0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u;
    hp.lengthscales << 0.3, 0.7, 1.5, 0.05;
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector4d p(u(rng), u(rng), u(rng), u(rng)), q(u(rng), u(rng), u(rng), u(rng));
        CHECK(kernel(p, q, hp) == kernel(q, p, hp));
        CHECK(kernel(p, q, hp) <= hp.signal_variance);
    }
}

TEST_CASE("kernel rejects invalid hyperparameters")
{
    const Eigen::Vector4d a = Eigen::Vector4d::Zero();
    GP::Hyper hp = make_hp(1, 1, 1e-2);
    hp.signal_variance = 0;
    CHECK_THROWS_AS(kernel(a, a, hp), ValidationError);
    hp = make_hp(1, 1, 1e-2);
    hp.lengthscales[2] = -1;
    CHECK_THROWS_AS(kernel(a, a, hp), ValidationError);
    hp = make_hp(1, 1, 0);
    CHECK_THROWS_AS(kernel(a, a, hp), ValidationError);
}

TEST_CASE("posterior matches a dense closed-form oracle")
{
    GP::Inputs x(3, 4);
    x << 0.1, 0.2, 0.3, 0.25, 0.6, 0.1, 0.9, 0.5, 0.4, 0.8, 0.5, 1.0;
    GP::Vector y(3);
    y << 0.2, 0.9, 0.55;
    GP::Inputs q(2, 4);
    q << 0.3, 0.3, 0.3, 0.5, 0.9, 0.9, 0.1, 0.0;
    GP::Hyper hp;
    hp.lengthscales << 0.4, 0.6, 0.8, 1.2;
    hp.signal_variance = 1.3;
    hp.noise_variance = 0.05;

    const GP gp = GP::condition(x, y, hp);
    const auto post = gp.posterior(q);

    // standardize with sample variance
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / 2.0);
    const Eigen::VectorXd ys = (y.array() - mean) / sd;
    Eigen::MatrixXd K(3, 3), Ks(3, 2), Kss(2, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) K(i, j) = oracle_k(x.row(i), x.row(j), hp) + (i == j ? hp.noise_variance : 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) Ks(i, j) = oracle_k(x.row(i), q.row(j), hp);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) Kss(i, j) = oracle_k(q.row(i), q.row(j), hp);
    const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
    const Eigen::VectorXd mu = (Ks.transpose() * Kinv * ys).array() * sd + mean;
    const Eigen::MatrixXd cov = (Kss - Ks.transpose() * Kinv * Ks) * sd * sd;

    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(post.mean[i] - mu[i]) < 1e-8);
        for (int j = 0; j < 2; ++j) CHECK(std::abs(post.covariance(i, j) - cov(i, j)) < 1e-8);
    }

    // block form agrees with the full form
    const auto blocks = gp.posterior_blocks(q.topRows(1), q.bottomRows(1));
    CHECK(std::abs(blocks.mean_a[0] - mu[0]) < 1e-10);
    CHECK(std::abs(blocks.mean_b[0] - mu[1]) < 1e-10);
    CHECK(std::abs(blocks.cov_aa(0, 0) - cov(0, 0)) < 1e-10);
    CHECK(std::abs(blocks.cov_ab(0, 0) - cov(0, 1)) < 1e-10);
    CHECK(std::abs(blocks.var_b[0] - cov(1, 1)) < 1e-10);
}

TEST_CASE("fit with pinned small noise interpolates like a direct dense solve")
{
    const GP::Inputs x = random_inputs(10, 21);
    GP::Vector y(10);
    for (int i = 0; i < 10; ++i) y[i] = smooth(x.row(i));
    GP::FitOptions opt;
    opt.fixed_noise = 1e-6;
    opt.seed = 4;
    const GP gp = GP::fit(x, y, opt);
    const auto post = gp.posterior(x);

    const auto& hp = gp.hyperparams();
    Eigen::MatrixXd K(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) K(i, j) = oracle_k(x.row(i), x.row(j), hp) + (i == j ? hp.noise_variance : 0);
    const Eigen::VectorXd ys = (y.array() - gp.target_mean()) / gp.target_scale();
    const Eigen::VectorXd alpha = K.fullPivLu().solve(ys);
    for (int i = 0; i < 10; ++i) {
        const double direct = (K.row(i) - hp.noise_variance * Eigen::RowVectorXd::Unit(10, i)).dot(alpha) *
                                  gp.target_scale() +
                              gp.target_mean();
        CHECK(std::abs(post.mean[i] - y[i]) < 1e-3);
        CHECK(std::abs(post.mean[i] - direct) < 1e-6);
    }
}

TEST_CASE("near-interpolation and prior recovery with noise pinned at 1e-8")
{
    const GP::Inputs x = random_inputs(8, 5);
    GP::Vector y(8);
    for (int i = 0; i < 8; ++i) y[i] = smooth(x.row(i));
    GP::FitOptions opt;
    opt.fixed_noise = 1e-8;
    const GP gp = GP::fit(x, y, opt);
    const auto post = gp.posterior(x);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(post.mean[i] - y[i]) < 1e-4);
        CHECK(post.covariance(i, i) <= 1e-4);
    }

    const double far = 11.0 * gp.hyperparams().lengthscales.maxCoeff() + 2.0;
    GP::Inputs q(1, 4);
    q.setConstant(far);
    const auto fp = gp.posterior(q);
    CHECK(std::abs(fp.covariance(0, 0) - gp.prior_variance()) <= 0.01 * gp.prior_variance());
}

TEST_CASE("posterior covariance is symmetric positive semidefinite")
{
    const GP::Inputs x = random_inputs(12, 8);
    GP::Vector y(12);
    for (int i = 0; i < 12; ++i) y[i] = smooth(x.row(i));
    const GP gp = GP::fit(x, y);
    const auto post = gp.posterior(random_inputs(30, 9));
    CHECK((post.covariance - post.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(post.covariance);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("predictions do not depend on training order")
{
    const GP::Inputs x = random_inputs(9, 31);
    GP::Vector y(9);
    for (int i = 0; i < 9; ++i) y[i] = smooth(x.row(i));
    GP::Hyper hp;
    hp.lengthscales << 0.3, 0.5, 0.7, 0.9;
    hp.signal_variance = 1.7;
    hp.noise_variance = 1e-3;

    std::vector<int> perm{4, 2, 7, 0, 8, 1, 6, 3, 5};
    GP::Inputs xp(9, 4);
    GP::Vector yp(9);
    for (int i = 0; i < 9; ++i) {
        xp.row(i) = x.row(perm[i]);
        yp[i] = y[perm[i]];
    }
    const GP::Inputs q = random_inputs(20, 32);
    const auto a = GP::condition(x, y, hp).posterior(q);
    const auto b = GP::condition(xp, yp, hp).posterior(q);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hyperparameter search never loses likelihood")
{
    const GP::Inputs x = random_inputs(15, 77);
    GP::Vector y(15);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 0.05);
    for (int i = 0; i < 15; ++i) y[i] = smooth(x.row(i)) + n(rng);

    GP::FitReport report;
    const GP gp = GP::fit(x, y, {}, &report);
    REQUIRE(report.starts.size() == 8);
    const GP::Vector ys = (y.array() - gp.target_mean()) / gp.target_scale();
    for (const auto& s : report.starts) {
        for (std::size_t k = 1; k < s.accepted_mll.size(); ++k) CHECK(s.accepted_mll[k] > s.accepted_mll[k - 1]);
        const double initial = GP::log_marginal_likelihood(x, ys, s.initial);
        CHECK(gp.log_marginal_likelihood() >= initial);
        CHECK(gp.log_marginal_likelihood() >= GP::log_marginal_likelihood(x, ys, s.final) - 1e-9);
    }
    CHECK(gp.hyperparams().noise_variance >= GP::Hyper::kDefaultNoiseFloor);
    CHECK(gp.hyperparams().lengthscales.minCoeff() >= GP::Hyper::kMinLengthscale);
    CHECK(gp.hyperparams().lengthscales.maxCoeff() <= GP::Hyper::kMaxLengthscale);
}

TEST_CASE("duplicate inputs with disagreeing targets force noise above the floor")
{
    GP::Inputs x(4, 4);
    x << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.9, 0.2, 0.0, 0.8, 0.3, 0.6, 1.0;
    GP::Vector y(4);
    y << 0.2, 0.8, 0.4, 0.6;
    const GP gp = GP::fit(x, y);
    CHECK(gp.hyperparams().noise_variance > 1e-3);
}

TEST_CASE("constant targets give a constant posterior mean")
{
    const GP::Inputs x = random_inputs(6, 2);
    const GP::Vector y = GP::Vector::Constant(6, 0.5);
    const GP gp = GP::fit(x, y);
    const auto post = gp.posterior(random_inputs(25, 3));
    CHECK((post.mean.array() - 0.5).abs().maxCoeff() < 1e-6);
}

TEST_CASE("fit input errors")
{
    CHECK_THROWS_AS(GP::fit(random_inputs(1, 1), GP::Vector::Constant(1, 0.3)), InsufficientDataError);
    CHECK_THROWS_AS(GP::fit(random_inputs(3, 1), GP::Vector::Constant(2, 0.3)), ValidationError);
}

TEST_CASE("joint samples")
{
    const GP::Inputs x = random_inputs(6, 40);
    std::array<GP, 3> gps{GP::condition(x, x.col(0), make_hp(0.5, 1, 1e-2)),
                          GP::condition(x, x.col(1), make_hp(0.5, 1, 1e-2)),
                          GP::condition(x, x.col(2), make_hp(0.5, 1, 1e-2))};
    std::span<const GP, 3> view(gps);

    std::mt19937_64 r0(1);
    CHECK(joint_sample(view, x, 0, r0).empty());

    std::mt19937_64 r1(9), r2(9);
    const auto a = joint_sample(view, x, 5, r1);
    const auto b = joint_sample(view, x, 5, r2);
    for (int s = 0; s < 5; ++s) CHECK(a[s] == b[s]);

    GP::Inputs far(1, 4);
    far.setConstant(30.0);
    std::mt19937_64 r3(17);
    const int n = 20000;
    const auto samples = joint_sample(view, far, n, r3);
    for (int k = 0; k < 3; ++k) {
        const auto post = gps[k].posterior(far);
        double m = 0, v = 0;
        for (const auto& s : samples) m += s(0, k);
        m /= n;
        for (const auto& s : samples) v += (s(0, k) - m) * (s(0, k) - m);
        v /= n - 1;
        const double var = post.covariance(0, 0);
        CHECK(std::abs(m - post.mean[0]) < 3 * std::sqrt(var / n));
        CHECK(std::abs(v - var) < 3 * var * std::sqrt(2.0 / (n - 1)));
    }

    std::array<GP, 3> mixed{gps[0], gps[1], GP::condition(random_inputs(6, 41), x.col(2), make_hp(0.5, 1, 1e-2))};
    std::mt19937_64 r4(1);
    CHECK_THROWS_AS(joint_sample(std::span<const GP, 3>(mixed), x, 2, r4), ValidationError);
}
