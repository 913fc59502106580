#pragma once

#include <cmath>
#include <cstdint>

#include "ppdesign/errors.hpp"

namespace ppdesign {

/// Deterministic random source. All randomness in a run flows from one base
/// seed; independent consumers derive substreams so draw order in one
/// consumer never perturbs another.
///
/// Substream derivation (documented so runs are reproducible across tools):
///   state = mix(mix(base ^ mix(tag)) ^ index)
/// where mix is the splitmix64 finalizer. The generator itself is splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_(seed), state_(mix(seed)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Index drawn from a categorical distribution given by `probs[0..k)`.
    /// Assumes the entries are nonnegative and sum to ~1.
    int categorical(const double* probs, int k) {
        if (k <= 0) throw ContractError("categorical: empty distribution");
        double r = uniform();
        double cum = 0.0;
        for (int i = 0; i < k; ++i) {
            cum += probs[i];
            if (r < cum) return i;
        }
        return k - 1;  // numerical slack in the final bucket
    }

    /// Derived independent stream; deterministic in (base seed, tag, index).
    Rng substream(std::uint64_t tag, std::uint64_t index = 0) const {
        return Rng(mix(mix(base_ ^ mix(tag)) ^ index));
    }

    std::uint64_t base_seed() const { return base_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t base_;
    std::uint64_t state_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

/// Fixed substream tags, one per purpose.
namespace rng_tag {
inline constexpr std::uint64_t kToyDataset = 1;
inline constexpr std::uint64_t kTrainShuffle = 2;
inline constexpr std::uint64_t kTrainStep = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kSampleCandidate = 5;
inline constexpr std::uint64_t kClusterSplit = 6;
inline constexpr std::uint64_t kSelfCheck = 7;
}  // namespace rng_tag

}  // namespace ppdesign
