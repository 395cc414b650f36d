#ifndef IVCA_RNG_HPP
#define IVCA_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ivca {

using Rng = std::mt19937_64;

/// Independent stream keyed by (seed, tags...). Used so that e.g. the proposal at
/// iteration k of a session is a pure function of (session seed, k).
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
{
    std::vector<std::uint32_t> words;
    words.reserve(2 * (tags.size() + 1));
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto t : tags) push(t);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// Stream tags.
inline constexpr std::uint64_t kStreamSampling = 0x5350;    // sampling-phase Sobol scramble
inline constexpr std::uint64_t kStreamCandidates = 0x4341;  // acquisition candidate sweep
inline constexpr std::uint64_t kStreamBaseSamples = 0x4253; // MC base samples
inline constexpr std::uint64_t kStreamHyper = 0x4850;       // GP hyperparameter restarts

} // namespace ivca

#endif // IVCA_RNG_HPP
