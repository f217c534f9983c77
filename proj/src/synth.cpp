#include "fdr/synth.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace fdr {

namespace {

// 53-bit uniform in [0,1); keeps the draw independent of the standard
// library's distribution implementations.
inline bool bernoulli(std::mt19937_64& rng, double p) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
}

void check_prob(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ParseError(std::string(name) + " must be in [0,1]");
}

}  // namespace

void GilbertElliottParams::validate() const {
    check_prob(p_good_to_bad, "p_good_to_bad");
    check_prob(p_bad_to_good, "p_bad_to_good");
    check_prob(success_prob_good, "success_prob_good");
    check_prob(success_prob_bad, "success_prob_bad");
    if (success_prob_good < success_prob_bad)
        throw ParseError("success_prob_good must be >= success_prob_bad");
}

double GilbertElliottParams::stationary_success_prob() const {
    const double denom = p_good_to_bad + p_bad_to_good;
    if (denom == 0.0) return success_prob_good;  // chain never leaves 'good'
    const double pi_good = p_bad_to_good / denom;
    return pi_good * success_prob_good + (1.0 - pi_good) * success_prob_bad;
}

void FdrProfile::validate() const {
    if (segments.empty()) throw ParseError("profile must contain at least one segment");
    for (const auto& seg : segments) {
        if (seg.length == 0) throw ParseError("profile segment length must be >= 1");
        check_prob(seg.fdr, "segment fdr");
    }
}

std::size_t FdrProfile::total_length() const {
    std::size_t n = 0;
    for (const auto& seg : segments) n += seg.length;
    return n;
}

OutcomeTrace gen_gilbert_elliott(const GilbertElliottParams& params, std::size_t n,
                                 std::uint32_t sample_period_us) {
    params.validate();
    if (n == 0) throw ParseError("trace length must be >= 1");

    std::mt19937_64 rng(params.seed);
    OutcomeTrace trace;
    trace.outcomes.resize(n);
    trace.sample_period_us = sample_period_us;
    trace.origin = TraceOrigin::synthetic;
    trace.seed = params.seed;

    bool good = true;  // chain starts in the good state
    for (std::size_t i = 0; i < n; ++i) {
        const double ps = good ? params.success_prob_good : params.success_prob_bad;
        trace.outcomes[i] = bernoulli(rng, ps) ? 1 : 0;
        const double pt = good ? params.p_good_to_bad : params.p_bad_to_good;
        if (bernoulli(rng, pt)) good = !good;
    }
    return trace;
}

OutcomeTrace gen_from_profile(const FdrProfile& profile,
                              std::uint32_t sample_period_us) {
    profile.validate();

    std::mt19937_64 rng(profile.seed);
    OutcomeTrace trace;
    trace.outcomes.reserve(profile.total_length());
    trace.sample_period_us = sample_period_us;
    trace.origin = TraceOrigin::synthetic;
    trace.seed = profile.seed;

    for (const auto& seg : profile.segments)
        for (std::size_t i = 0; i < seg.length; ++i)
            trace.outcomes.push_back(bernoulli(rng, seg.fdr) ? 1 : 0);
    return trace;
}

FdrProfile load_profile(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    FdrProfile profile;
    profile.seed = seed;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        long long length = 0;
        double fdr = 0.0;
        if (!(ss >> length >> fdr) || length < 1)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected \"length fdr\", got \"" + line + "\"");
        profile.segments.push_back({static_cast<std::size_t>(length), fdr});
    }
    profile.validate();
    return profile;
}

}  // namespace fdr
