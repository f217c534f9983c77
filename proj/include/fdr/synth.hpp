#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fdr/trace.hpp"

namespace fdr {

/// Two-state hidden Markov channel (good/bad) with state-dependent
/// success probability.
struct GilbertElliottParams {
    double p_good_to_bad = 0.0;   // per-step transition probability
    double p_bad_to_good = 0.0;
    double success_prob_good = 1.0;
    double success_prob_bad = 0.0;
    std::uint64_t seed = 0;

    void validate() const;

    // Long-run success probability of the chain, from its stationary
    // distribution. Defined when at least one transition probability is > 0.
    double stationary_success_prob() const;
};

/// Piecewise-constant FDR profile: within each segment outcomes are
/// i.i.d. Bernoulli(fdr). Boundaries are hard steps.
struct FdrProfile {
    struct Segment {
        std::size_t length = 0;
        double fdr = 0.0;
    };
    std::vector<Segment> segments;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t total_length() const;
};

// Both generators are deterministic for a fixed seed. The RNG is
// std::mt19937_64 with Bernoulli draws taken as 53-bit uniforms, so
// generated traces are stable across platforms and versions.
OutcomeTrace gen_gilbert_elliott(const GilbertElliottParams& params, std::size_t n,
                                 std::uint32_t sample_period_us);
OutcomeTrace gen_from_profile(const FdrProfile& profile,
                              std::uint32_t sample_period_us);

// Profile file: one "length fdr" pair per line, '#' comments allowed.
FdrProfile load_profile(const std::filesystem::path& path, std::uint64_t seed);

}  // namespace fdr
