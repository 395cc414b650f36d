#ifndef IVCA_SOBOL_HPP
#define IVCA_SOBOL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace ivca {

/// Sobol low-discrepancy sequence (Joe-Kuo direction numbers, Gray-code order),
/// optionally scrambled by a random linear matrix scramble plus digital shift.
///
/// Points are produced in order; point(0) of the unscrambled sequence is the origin.
class SobolSequence {
public:
    static constexpr int kBits = 32;
    static constexpr int kMaxDims = 8;

    explicit SobolSequence(int dims, std::optional<std::uint64_t> scramble_seed = std::nullopt);

    int dims() const noexcept { return dims_; }
    std::uint64_t index() const noexcept { return index_; }

    /// Next point in [0,1)^dims.
    Eigen::VectorXd next();

    /// n points as rows.
    Eigen::MatrixXd draw(Eigen::Index n);

    /// Skip ahead to a given index.
    void seek(std::uint64_t index);

    /// Row j of the scramble matrix for one dimension, as a mask over input digits
    /// (digit i lives at bit 31 - i). Identity when unscrambled.
    const std::array<std::uint32_t, kBits>& scramble_matrix(int dim) const { return matrices_[dim]; }
    std::uint32_t digital_shift(int dim) const { return shifts_[dim]; }

private:
    int dims_;
    std::uint64_t index_ = 0;
    std::vector<std::array<std::uint32_t, kBits>> directions_; // already scrambled
    std::vector<std::array<std::uint32_t, kBits>> matrices_;
    std::vector<std::uint32_t> shifts_;
    std::vector<std::uint32_t> state_;
};

} // namespace ivca

#endif // IVCA_SOBOL_HPP
