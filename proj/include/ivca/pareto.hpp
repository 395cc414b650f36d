#ifndef IVCA_PARETO_HPP
#define IVCA_PARETO_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace ivca {

/// a dominates b (maximization): a >= b everywhere and a > b somewhere.
template <typename DerivedA, typename DerivedB>
bool dominates(const Eigen::DenseBase<DerivedA>& a, const Eigen::DenseBase<DerivedB>& b)
{
    bool strictly = false;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a(k) < b(k)) return false;
        if (a(k) > b(k)) strictly = true;
    }
    return strictly;
}

/// Indices (ascending) of the rows of `points` not dominated by any other row.
/// Identical rows never dominate each other, so duplicates of a front member are all kept.
///
/// Rows are visited in descending lexicographic order; a dominator always sorts
/// strictly ahead of what it dominates, so each row is only checked against
/// the front built so far.
template <typename Derived>
std::vector<Eigen::Index> pareto_filter(const Eigen::MatrixBase<Derived>& points)
{
    const Eigen::Index n = points.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index k = 0; k < points.cols(); ++k) {
            if (points(a, k) != points(b, k)) return points(a, k) > points(b, k);
        }
        return a < b;
    });

    std::vector<Eigen::Index> front;
    for (Eigen::Index i : order) {
        const bool dominated = std::any_of(front.begin(), front.end(), [&](Eigen::Index j) {
            return dominates(points.row(j), points.row(i));
        });
        if (!dominated) front.push_back(i);
    }
    std::sort(front.begin(), front.end());
    return front;
}

/// Copy of the selected rows.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime>
select_rows(const Eigen::MatrixBase<Derived>& points, const std::vector<Eigen::Index>& rows)
{
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> out(
        static_cast<Eigen::Index>(rows.size()), points.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = points.row(rows[i]);
    return out;
}

} // namespace ivca

#endif // IVCA_PARETO_HPP
