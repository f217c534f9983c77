#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdr/trace.hpp"

namespace fdr {

/// Future-window FDR targets: t_i is the mean of the n_future outcomes
/// following index i. One value per trace index i in [0, N - n_future).
struct TargetSeries {
    std::vector<double> values;
    std::size_t n_future = 0;
    std::uint32_t sample_period_us = 0;

    std::size_t size() const { return values.size(); }
};

TargetSeries compute_targets(const OutcomeTrace& trace, std::size_t n_future);

struct ErrorSeries {
    std::vector<double> e;      // t_i - y_i
    std::vector<double> abs_e;
    std::vector<double> sq_e;
};

// Pairs prediction y_i with target t_i and drops the first n_skip indices.
// Resulting length is |trace| - n_skip - n_future.
ErrorSeries error_series(std::span<const double> predictions,
                         const TargetSeries& targets, std::size_t n_skip);

/// Summary statistics for one error kind. Percentiles are nearest-rank on
/// the sorted sample; stddev uses the population convention (divide by n).
struct StatBlock {
    double mean = 0, stddev = 0, min = 0, max = 0;
    double p5 = 0, p90 = 0, p95 = 0, p99 = 0;
};

struct ErrorReport {
    StatBlock e, abs_e, sq_e;
    std::size_t evaluation_count = 0;
    std::size_t n_skip = 0;    // config echo
    std::size_t n_future = 0;

    nlohmann::ordered_json to_json() const;
    // One-row CSV for table assembly; column order follows the comparison
    // table (model, params, then e2 / |e| / e statistics).
    static std::string csv_header();
    std::string csv_row(const std::string& model, const std::string& params) const;
};

ErrorReport summarize(const ErrorSeries& series);

double mse(std::span<const double> predictions, const TargetSeries& targets,
           std::size_t n_skip);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace fdr
