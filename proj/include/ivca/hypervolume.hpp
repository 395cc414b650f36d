#ifndef IVCA_HYPERVOLUME_HPP
#define IVCA_HYPERVOLUME_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ivca/errors.hpp"

namespace ivca {

namespace detail {

template <typename Scalar>
using Point2 = std::array<Scalar, 2>;
template <typename Scalar>
using Point3 = std::array<Scalar, 3>;

/// Area dominated by points already sorted by x descending, relative to (rx, ry).
/// Dominated points are tolerated: they add nothing.
template <typename Scalar>
Scalar staircase_area(const std::vector<Point2<Scalar>>& sorted, Scalar rx, Scalar ry)
{
    Scalar area = 0;
    Scalar y_max = ry;
    for (const auto& p : sorted) {
        if (p[1] > y_max) {
            area += (p[0] - rx) * (p[1] - y_max);
            y_max = p[1];
        }
    }
    return area;
}

/// Dimension sweep: slabs between successive z levels, each slab a 2-D staircase.
/// All points must weakly dominate ref. `pts` is reordered.
template <typename Scalar>
Scalar sweep_volume(std::vector<Point3<Scalar>>& pts, const Point3<Scalar>& ref)
{
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[2] > b[2]; });
    std::vector<Point2<Scalar>> slice;
    slice.reserve(pts.size());
    Scalar volume = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point2<Scalar> p{pts[i][0], pts[i][1]};
        auto pos = std::upper_bound(slice.begin(), slice.end(), p,
                                    [](const auto& a, const auto& b) { return a[0] > b[0]; });
        slice.insert(pos, p);
        const Scalar next_z = i + 1 < pts.size() ? pts[i + 1][2] : ref[2];
        const Scalar height = pts[i][2] - next_z;
        if (height > 0) volume += staircase_area(slice, ref[0], ref[1]) * height;
    }
    return volume;
}

/// HV(front + c) - HV(front) in 3-D, computed as the volume of [ref, c] minus the
/// hypervolume of the front clipped to c. Front points must weakly dominate ref.
template <typename Scalar>
Scalar exclusive_contribution(const std::vector<Point3<Scalar>>& front, const Point3<Scalar>& ref,
                              const Point3<Scalar>& c, std::vector<Point3<Scalar>>& scratch)
{
    if (!(c[0] > ref[0] && c[1] > ref[1] && c[2] > ref[2])) return 0;
    scratch.clear();
    for (const auto& p : front) {
        if (p[0] >= c[0] && p[1] >= c[1] && p[2] >= c[2]) return 0;
        scratch.push_back({std::min(p[0], c[0]), std::min(p[1], c[1]), std::min(p[2], c[2])});
    }
    const Scalar box = (c[0] - ref[0]) * (c[1] - ref[1]) * (c[2] - ref[2]);
    const Scalar covered = scratch.empty() ? Scalar(0) : sweep_volume(scratch, ref);
    return std::max(Scalar(0), box - covered);
}

template <typename Derived, typename DerivedRef>
void check_front(const Eigen::MatrixBase<Derived>& front, const Eigen::MatrixBase<DerivedRef>& ref)
{
    if (ref.size() < 1 || ref.size() > 3)
        throw ContractError("hypervolume supports 1 to 3 objectives, got " + std::to_string(ref.size()));
    if (front.rows() > 0 && front.cols() != ref.size())
        throw ContractError("front and reference point dimensions differ");
    if (!ref.allFinite()) throw ContractError("reference point must be finite");
    for (Eigen::Index i = 0; i < front.rows(); ++i) {
        for (Eigen::Index k = 0; k < front.cols(); ++k) {
            if (!std::isfinite(front(i, k)) || front(i, k) < ref(k))
                throw ContractError("front point " + std::to_string(i) + " does not dominate the reference point");
        }
    }
}

} // namespace detail

/// Exact hypervolume (maximization) of the union of boxes [ref, p] over the rows of `front`.
/// Every row must weakly dominate ref; dominated rows are allowed and add nothing.
template <typename Derived, typename DerivedRef>
typename Derived::Scalar hypervolume(const Eigen::MatrixBase<Derived>& front, const Eigen::MatrixBase<DerivedRef>& ref)
{
    using Scalar = typename Derived::Scalar;
    detail::check_front(front, ref);
    const Eigen::Index n = front.rows();
    if (n == 0) return Scalar(0);

    switch (ref.size()) {
    case 1:
        return front.col(0).maxCoeff() - ref(0);
    case 2: {
        std::vector<detail::Point2<Scalar>> pts;
        pts.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) pts.push_back({front(i, 0), front(i, 1)});
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[0] > b[0]; });
        return detail::staircase_area(pts, Scalar(ref(0)), Scalar(ref(1)));
    }
    default: {
        std::vector<detail::Point3<Scalar>> pts;
        pts.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) pts.push_back({front(i, 0), front(i, 1), front(i, 2)});
        return detail::sweep_volume(pts, {Scalar(ref(0)), Scalar(ref(1)), Scalar(ref(2))});
    }
    }
}

/// HV(front + candidate) - HV(front). Zero when the candidate does not strictly
/// dominate ref or is weakly dominated by a front member.
template <typename Derived, typename DerivedRef, typename DerivedC>
typename Derived::Scalar hv_contribution(const Eigen::MatrixBase<Derived>& front,
                                         const Eigen::MatrixBase<DerivedRef>& ref,
                                         const Eigen::MatrixBase<DerivedC>& candidate)
{
    using Scalar = typename Derived::Scalar;
    detail::check_front(front, ref);
    if (candidate.size() != ref.size()) throw ContractError("candidate and reference point dimensions differ");
    for (Eigen::Index k = 0; k < ref.size(); ++k)
        if (!(candidate(k) > ref(k))) return Scalar(0);

    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> clipped(front.rows(), front.cols());
    for (Eigen::Index i = 0; i < front.rows(); ++i) {
        bool covers = true;
        for (Eigen::Index k = 0; k < front.cols(); ++k) {
            covers = covers && front(i, k) >= candidate(k);
            clipped(i, k) = std::min<Scalar>(front(i, k), candidate(k));
        }
        if (covers) return Scalar(0);
    }
    Scalar box = 1;
    for (Eigen::Index k = 0; k < ref.size(); ++k) box *= candidate(k) - ref(k);
    return std::max(Scalar(0), box - hypervolume(clipped, ref));
}

} // namespace ivca

#endif // IVCA_HYPERVOLUME_HPP
