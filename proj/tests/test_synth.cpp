#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fdr/synth.hpp"

using namespace fdr;

namespace {

double mean(const std::vector<std::uint8_t>& xs, std::size_t begin, std::size_t end) {
    double sum = 0;
    for (std::size_t i = begin; i < end; ++i) sum += xs[i];
    return sum / static_cast<double>(end - begin);
}

}  // namespace

TEST_CASE("degenerate channels") {
    GilbertElliottParams all_ones{0.5, 0.5, 1.0, 1.0, 3};
    auto t1 = gen_gilbert_elliott(all_ones, 1000, 500000);
    CHECK(std::accumulate(t1.outcomes.begin(), t1.outcomes.end(), 0) == 1000);

    GilbertElliottParams all_zeros{0.5, 0.5, 0.0, 0.0, 3};
    auto t0 = gen_gilbert_elliott(all_zeros, 1000, 500000);
    CHECK(std::accumulate(t0.outcomes.begin(), t0.outcomes.end(), 0) == 0);
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(
        gen_gilbert_elliott({1.5, 0.1, 0.9, 0.5, 1}, 10, 500000), ParseError);
    CHECK_THROWS_AS(  // good < bad
        gen_gilbert_elliott({0.1, 0.1, 0.3, 0.5, 1}, 10, 500000), ParseError);
    CHECK_THROWS_AS(gen_gilbert_elliott({0.1, 0.1, 0.9, 0.5, 1}, 0, 500000),
                    ParseError);
}

TEST_CASE("empirical mean matches the stationary distribution, 3 sigma") {
    // Closed-form oracle: pi_good = p_bg / (p_gb + p_bg).
    GilbertElliottParams params{0.001, 0.001, 0.95, 0.40, 99};
    const std::size_t n = 1000000;
    const double expected = params.stationary_success_prob();
    CHECK(expected == doctest::Approx(0.675).epsilon(1e-12));

    auto trace = gen_gilbert_elliott(params, n, 500000);
    const double m = mean(trace.outcomes, 0, n);
    // Outcomes are correlated through the hidden state; the state flips on
    // a ~1000-sample scale, so the effective sample count is ~n/1000.
    const double sigma = std::sqrt(0.25 / (static_cast<double>(n) / 1000.0));
    CHECK(std::abs(m - expected) < 3.0 * sigma);
}

TEST_CASE("profile generator: trivial and per-segment means") {
    auto ones = gen_from_profile({{{1000, 1.0}}, 5}, 500000);
    CHECK(std::accumulate(ones.outcomes.begin(), ones.outcomes.end(), 0) == 1000);

    FdrProfile profile{{{500000, 0.9}, {500000, 0.6}}, 17};
    auto trace = gen_from_profile(profile, 500000);
    REQUIRE(trace.size() == 1000000);
    const double sigma1 = std::sqrt(0.9 * 0.1 / 500000.0);
    const double sigma2 = std::sqrt(0.6 * 0.4 / 500000.0);
    CHECK(std::abs(mean(trace.outcomes, 0, 500000) - 0.9) < 3 * sigma1);
    CHECK(std::abs(mean(trace.outcomes, 500000, 1000000) - 0.6) < 3 * sigma2);
}

TEST_CASE("fdr=0.5 segment mean lands in the 3 sigma binomial bound") {
    auto trace = gen_from_profile({{{1000000, 0.5}}, 23}, 500000);
    const double m = mean(trace.outcomes, 0, trace.size());
    CHECK(m >= 0.4985);
    CHECK(m <= 0.5015);
}

TEST_CASE("same seed is bit-identical, pinned") {
    GilbertElliottParams params{0.01, 0.02, 0.9, 0.3, 12345};
    auto a = gen_gilbert_elliott(params, 5000, 500000);
    auto b = gen_gilbert_elliott(params, 5000, 500000);
    CHECK(a.outcomes == b.outcomes);
    CHECK(a.origin == TraceOrigin::synthetic);
    CHECK(a.seed == 12345);

    // Regression pin of the generator stream (mt19937_64, 53-bit draws).
    std::vector<std::uint8_t> head(a.outcomes.begin(), a.outcomes.begin() + 16);
    CHECK(head == std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1, 1, 1,
                                            1, 1, 1, 1, 1, 1, 0, 0});
}

TEST_CASE("different seeds differ") {
    GilbertElliottParams a{0.01, 0.02, 0.9, 0.3, 1};
    GilbertElliottParams b = a;
    b.seed = 2;
    CHECK(gen_gilbert_elliott(a, 1000, 500000).outcomes !=
          gen_gilbert_elliott(b, 1000, 500000).outcomes);

    CHECK(gen_from_profile({{{1000, 0.5}}, 1}, 500000).outcomes !=
          gen_from_profile({{{1000, 0.5}}, 2}, 500000).outcomes);
}

TEST_CASE("empty profile is rejected") {
    FdrProfile empty;
    CHECK_THROWS_AS(gen_from_profile(empty, 500000), ParseError);
}
