#include "ivca/sobol.hpp"

#include <bit>
#include <random>
#include <stdexcept>

#include "ivca/errors.hpp"

namespace ivca {

namespace {

struct DirectionSpec {
    int degree;
    unsigned poly;
    std::array<std::uint32_t, 8> m;
};

// new-joe-kuo-6.21201, dimensions 2..8; dimension 1 is van der Corput.
constexpr std::array<DirectionSpec, SobolSequence::kMaxDims - 1> kSpecs{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
}};

constexpr int kBits = SobolSequence::kBits;

std::array<std::uint32_t, kBits> direction_numbers(int dim)
{
    std::array<std::uint32_t, kBits> v{};
    if (dim == 0) {
        for (int k = 0; k < kBits; ++k) v[k] = 1u << (kBits - 1 - k);
        return v;
    }
    const auto& spec = kSpecs[dim - 1];
    const int s = spec.degree;
    std::array<std::uint32_t, kBits> m{};
    for (int k = 0; k < s; ++k) m[k] = spec.m[k];
    for (int k = s; k < kBits; ++k) {
        std::uint32_t mk = m[k - s] ^ (m[k - s] << s);
        for (int j = 1; j < s; ++j) {
            if ((spec.poly >> (s - 1 - j)) & 1u) mk ^= m[k - j] << j;
        }
        m[k] = mk;
    }
    for (int k = 0; k < kBits; ++k) v[k] = m[k] << (kBits - 1 - k);
    return v;
}

std::uint32_t apply_matrix(const std::array<std::uint32_t, kBits>& rows, std::uint32_t x)
{
    std::uint32_t y = 0;
    for (int j = 0; j < kBits; ++j) {
        if (std::popcount(rows[j] & x) & 1) y |= 1u << (kBits - 1 - j);
    }
    return y;
}

} // namespace

SobolSequence::SobolSequence(int dims, std::optional<std::uint64_t> scramble_seed) : dims_(dims)
{
    if (dims < 1 || dims > kMaxDims)
        throw ValidationError("dims", "Sobol dimension must be in [1," + std::to_string(kMaxDims) + "]");

    directions_.resize(dims);
    matrices_.resize(dims);
    shifts_.assign(dims, 0u);

    std::mt19937_64 rng(scramble_seed.value_or(0));
    std::uniform_int_distribution<std::uint32_t> word;
    for (int d = 0; d < dims; ++d) {
        auto& rows = matrices_[d];
        for (int j = 0; j < kBits; ++j) {
            const std::uint32_t diag = 1u << (kBits - 1 - j);
            if (scramble_seed) {
                // lower triangular: digit j depends on digits 0..j
                const std::uint32_t below = j == 0 ? 0u : ~((1u << (kBits - j)) - 1u);
                rows[j] = (word(rng) & below) | diag;
            } else {
                rows[j] = diag;
            }
        }
        if (scramble_seed) shifts_[d] = word(rng);

        const auto raw = direction_numbers(d);
        for (int k = 0; k < kBits; ++k) directions_[d][k] = apply_matrix(rows, raw[k]);
    }
    seek(0);
}

void SobolSequence::seek(std::uint64_t index)
{
    index_ = index;
    state_ = shifts_;
    const std::uint64_t gray = index ^ (index >> 1);
    for (int k = 0; k < kBits; ++k) {
        if ((gray >> k) & 1u)
            for (int d = 0; d < dims_; ++d) state_[d] ^= directions_[d][k];
    }
}

Eigen::VectorXd SobolSequence::next()
{
    constexpr double kScale = 1.0 / 4294967296.0;
    Eigen::VectorXd out(dims_);
    for (int d = 0; d < dims_; ++d) out[d] = state_[d] * kScale;

    const int bit = std::countr_zero(index_ + 1);
    if (bit >= kBits) throw std::out_of_range("Sobol sequence exhausted");
    for (int d = 0; d < dims_; ++d) state_[d] ^= directions_[d][bit];
    ++index_;
    return out;
}

Eigen::MatrixXd SobolSequence::draw(Eigen::Index n)
{
    Eigen::MatrixXd pts(n, dims_);
    for (Eigen::Index i = 0; i < n; ++i) pts.row(i) = next().transpose();
    return pts;
}

} // namespace ivca
