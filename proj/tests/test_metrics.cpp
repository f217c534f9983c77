#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fdr/metrics.hpp"
#include "fdr/synth.hpp"

using namespace fdr;

namespace {

// Naive O(N * N_f) windowed-mean oracle.
std::vector<double> naive_targets(const OutcomeTrace& trace, std::size_t n_future) {
    std::vector<double> out;
    for (std::size_t i = 0; i + n_future < trace.size(); ++i) {
        double sum = 0;
        for (std::size_t j = i + 1; j <= i + n_future; ++j) sum += trace.outcomes[j];
        out.push_back(sum / static_cast<double>(n_future));
    }
    return out;
}

// Brute-force sort-based statistics oracle.
StatBlock brute_stats(std::vector<double> xs) {
    StatBlock s;
    const auto n = static_cast<double>(xs.size());
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / n;
    double var = 0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / n);
    std::sort(xs.begin(), xs.end());
    s.min = xs.front();
    s.max = xs.back();
    auto pct = [&](double p) {
        auto rank = static_cast<std::size_t>(std::ceil(p * n));
        return xs[std::max<std::size_t>(rank, 1) - 1];
    };
    s.p5 = pct(0.05);
    s.p90 = pct(0.90);
    s.p95 = pct(0.95);
    s.p99 = pct(0.99);
    return s;
}

}  // namespace

TEST_CASE("targets on trivial traces") {
    OutcomeTrace ones;
    ones.outcomes.assign(10, 1);
    auto t = compute_targets(ones, 4);
    REQUIRE(t.size() == 6);
    for (double v : t.values) CHECK(v == 1.0);

    OutcomeTrace alt;
    for (int i = 0; i < 10; ++i) alt.outcomes.push_back(i % 2 == 0 ? 1 : 0);
    t = compute_targets(alt, 2);
    for (double v : t.values) CHECK(v == 0.5);
}

TEST_CASE("targets equal the naive windowed mean on random traces") {
    auto trace = gen_from_profile({{{100000, 0.7}}, 31}, 500000);
    for (std::size_t nf : {1u, 10u, 360u}) {
        auto fast = compute_targets(trace, nf);
        auto naive = naive_targets(trace, nf);
        REQUIRE(fast.size() == naive.size());
        for (std::size_t i = 0; i < naive.size(); ++i)
            CHECK(std::abs(fast.values[i] - naive[i]) <= 1e-12);
    }
}

TEST_CASE("targets preconditions") {
    OutcomeTrace t;
    t.outcomes = {1, 0, 1};
    CHECK_THROWS_AS(compute_targets(t, 3), ParseError);
    CHECK_THROWS_AS(compute_targets(t, 0), ParseError);
    CHECK(compute_targets(t, 2).size() == 1);
}

TEST_CASE("error series basics") {
    TargetSeries targets;
    targets.values = {0.8, 0.5, 0.2};
    targets.n_future = 1;
    std::vector<double> preds = {0.6, 0.5, 0.4};

    auto series = error_series(preds, targets, 0);
    CHECK(series.e[0] == doctest::Approx(0.2));
    CHECK(series.abs_e[0] == doctest::Approx(0.2));
    CHECK(series.sq_e[0] == doctest::Approx(0.04));
    CHECK(series.e[2] == doctest::Approx(-0.2));

    auto identical = error_series(targets.values, targets, 0);
    for (double v : identical.e) CHECK(v == 0.0);
    for (double v : identical.sq_e) CHECK(v == 0.0);

    CHECK(error_series(preds, targets, 2).e.size() == 1);
    CHECK_THROWS_AS(error_series(preds, targets, 3), ParseError);
    CHECK_THROWS_AS(error_series(std::vector<double>{0.1}, targets, 0), ParseError);
}

TEST_CASE("summarize on constants and tiny series") {
    ErrorSeries series;
    series.e.assign(10, 0.1);
    series.abs_e.assign(10, 0.1);
    series.sq_e.assign(10, 0.01);
    auto report = summarize(series);
    CHECK(report.e.mean == doctest::Approx(0.1));
    CHECK(report.e.stddev == doctest::Approx(0.0));
    CHECK(report.e.p5 == doctest::Approx(0.1));
    CHECK(report.e.p99 == doctest::Approx(0.1));
    CHECK(report.evaluation_count == 10);

    ErrorSeries three;
    three.e = {-0.2, 0.0, 0.2};
    for (double v : three.e) {
        three.abs_e.push_back(std::abs(v));
        three.sq_e.push_back(v * v);
    }
    report = summarize(three);
    CHECK(report.e.mean == doctest::Approx(0.0));
    CHECK(report.abs_e.mean == doctest::Approx(0.4 / 3.0));
    CHECK(report.e.min == doctest::Approx(-0.2));
    CHECK(report.e.max == doctest::Approx(0.2));

    CHECK_THROWS_AS(summarize(ErrorSeries{}), ParseError);
}

TEST_CASE("summarize matches the brute-force oracle on 1e4 random values") {
    std::mt19937_64 rng(77);
    ErrorSeries series;
    for (int i = 0; i < 10000; ++i) {
        const double e = (static_cast<double>(rng() % 20001) - 10000.0) / 10000.0;
        series.e.push_back(e);
        series.abs_e.push_back(std::abs(e));
        series.sq_e.push_back(e * e);
    }
    auto report = summarize(series);
    for (auto [got, want] : {std::pair{report.e, brute_stats(series.e)},
                             std::pair{report.abs_e, brute_stats(series.abs_e)},
                             std::pair{report.sq_e, brute_stats(series.sq_e)}}) {
        CHECK(std::abs(got.mean - want.mean) <= 1e-12);
        CHECK(std::abs(got.stddev - want.stddev) <= 1e-12);
        CHECK(got.min == want.min);   // percentiles are exact sample values
        CHECK(got.p5 == want.p5);
        CHECK(got.p90 == want.p90);
        CHECK(got.p95 == want.p95);
        CHECK(got.p99 == want.p99);
        CHECK(got.max == want.max);
    }

    // ordering chain and the |e| variance identity (e2 = |e|^2)
    for (const auto& s : {report.e, report.abs_e, report.sq_e}) {
        CHECK(s.min <= s.p5);
        CHECK(s.p5 <= s.p90);
        CHECK(s.p90 <= s.p95);
        CHECK(s.p95 <= s.p99);
        CHECK(s.p99 <= s.max);
    }
    CHECK(std::abs(report.abs_e.stddev * report.abs_e.stddev -
                   (report.sq_e.mean - report.abs_e.mean * report.abs_e.mean)) <=
          1e-12);
}

TEST_CASE("mse agrees with summarize mu_e2") {
    auto trace = gen_from_profile({{{5000, 0.6}}, 41}, 500000);
    auto targets = compute_targets(trace, 100);
    std::vector<double> preds(targets.size(), 0.55);

    const double m = mse(preds, targets, 7);
    auto report = summarize(error_series(preds, targets, 7));
    CHECK(std::abs(m - report.sq_e.mean) <= 1e-15);
    CHECK(report.evaluation_count == targets.size() - 7);

    std::vector<double> exact = targets.values;
    CHECK(mse(exact, targets, 0) == 0.0);

    TargetSeries one;
    one.values = {1.0};
    CHECK(mse(std::vector{0.5}, one, 0) == doctest::Approx(0.25));
}

TEST_CASE("report JSON carries the Table-style keys") {
    ErrorSeries series;
    series.e = {0.1, -0.1};
    series.abs_e = {0.1, 0.1};
    series.sq_e = {0.01, 0.01};
    auto report = summarize(series);
    report.n_skip = 5;
    report.n_future = 10;
    auto doc = report.to_json();
    for (const char* key :
         {"mu_e2", "e2_p95", "e2_max", "mu_abs_e", "sigma_abs_e", "abs_e_p90",
          "abs_e_p95", "abs_e_p99", "abs_e_max", "e_min", "e_p5", "e_p95",
          "e_max", "evaluation_count", "n_skip", "n_future"})
        CHECK(doc.contains(key));
    CHECK(doc["n_skip"] == 5);

    auto row = report.csv_row("EMA", "alpha=0.1");
    CHECK(row.substr(0, 4) == "EMA,");
    CHECK(std::count(row.begin(), row.end(), ',') == 14);
}
