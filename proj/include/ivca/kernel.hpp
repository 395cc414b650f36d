#ifndef IVCA_KERNEL_HPP
#define IVCA_KERNEL_HPP

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "ivca/errors.hpp"

namespace ivca {

template <typename Scalar, int Dim = 4>
struct GPHyperparams {
    using Vector = Eigen::Matrix<Scalar, Dim, 1>;

    Vector lengthscales = Vector::Constant(Scalar(0.5));
    Scalar signal_variance = Scalar(1);
    Scalar noise_variance = Scalar(1e-2);

    static constexpr double kMinLengthscale = 1e-3;
    static constexpr double kMaxLengthscale = 1e3;
    static constexpr double kDefaultNoiseFloor = 1e-6;

    /// Throws unless every entry is positive and finite, lengthscales within their box,
    /// and noise above the given floor.
    void validate(Scalar noise_floor = Scalar(kDefaultNoiseFloor)) const
    {
        for (int i = 0; i < lengthscales.size(); ++i) {
            const Scalar l = lengthscales[i];
            if (!(std::isfinite(l) && l >= Scalar(kMinLengthscale) && l <= Scalar(kMaxLengthscale)))
                throw ValidationError("lengthscales[" + std::to_string(i) + "]", "must lie in [1e-3, 1e3]");
        }
        if (!(std::isfinite(signal_variance) && signal_variance > Scalar(0)))
            throw ValidationError("signal_variance", "must be positive");
        if (!(std::isfinite(noise_variance) && noise_variance > Scalar(0) && noise_variance >= noise_floor))
            throw ValidationError("noise_variance", "must be positive and at least the noise floor");
    }
};

/// Matern 5/2 ARD kernel:
///   k(a,b) = s2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r),  r^2 = sum ((a_i - b_i) / l_i)^2
template <typename Scalar, typename DerivedA, typename DerivedB, int Dim>
Scalar matern52(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                const GPHyperparams<Scalar, Dim>& hp)
{
    const Scalar r2 = ((a - b).array() / hp.lengthscales.array()).square().sum();
    const Scalar r = std::sqrt(r2);
    const Scalar s5r = std::sqrt(Scalar(5)) * r;
    return hp.signal_variance * (Scalar(1) + s5r + Scalar(5) * r2 / Scalar(3)) * std::exp(-s5r);
}

/// Checked entry point; throws on invalid hyperparameters.
template <typename Scalar, typename DerivedA, typename DerivedB, int Dim>
Scalar kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
              const GPHyperparams<Scalar, Dim>& hp)
{
    hp.validate(Scalar(0));
    return matern52(a, b, hp);
}

/// Gram matrix between the rows of x1 and the rows of x2.
template <typename Scalar, int Dim, typename Derived1, typename Derived2>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> kernel_matrix(const Eigen::MatrixBase<Derived1>& x1,
                                                                     const Eigen::MatrixBase<Derived2>& x2,
                                                                     const GPHyperparams<Scalar, Dim>& hp)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> k(x1.rows(), x2.rows());
    for (Eigen::Index i = 0; i < x1.rows(); ++i)
        for (Eigen::Index j = 0; j < x2.rows(); ++j)
            k(i, j) = matern52(x1.row(i).transpose(), x2.row(j).transpose(), hp);
    return k;
}

} // namespace ivca

#endif // IVCA_KERNEL_HPP
