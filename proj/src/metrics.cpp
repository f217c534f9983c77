#include "fdr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace fdr {

TargetSeries compute_targets(const OutcomeTrace& trace, std::size_t n_future) {
    if (n_future == 0) throw ParseError("n_future must be >= 1");
    const std::size_t n = trace.size();
    if (n <= n_future)
        throw ParseError("trace too short: need more than " +
                         std::to_string(n_future) + " outcomes, have " +
                         std::to_string(n));

    // Exact integer prefix sums; one division per target.
    std::vector<std::uint64_t> prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        prefix[i + 1] = prefix[i] + trace.outcomes[i];

    TargetSeries targets;
    targets.n_future = n_future;
    targets.sample_period_us = trace.sample_period_us;
    targets.values.resize(n - n_future);
    const double inv = 1.0 / static_cast<double>(n_future);
    for (std::size_t i = 0; i < n - n_future; ++i)
        targets.values[i] =
            static_cast<double>(prefix[i + 1 + n_future] - prefix[i + 1]) * inv;
    return targets;
}

ErrorSeries error_series(std::span<const double> predictions,
                         const TargetSeries& targets, std::size_t n_skip) {
    if (predictions.size() < targets.size())
        throw ParseError("prediction series shorter than target series");
    if (n_skip >= targets.size())
        throw ParseError("n_skip = " + std::to_string(n_skip) +
                         " leaves no evaluation window (targets: " +
                         std::to_string(targets.size()) + ")");

    const std::size_t count = targets.size() - n_skip;
    ErrorSeries series;
    series.e.resize(count);
    series.abs_e.resize(count);
    series.sq_e.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double err = targets.values[n_skip + k] - predictions[n_skip + k];
        series.e[k] = err;
        series.abs_e[k] = std::abs(err);
        series.sq_e[k] = err * err;
    }
    return series;
}

namespace {

StatBlock stat_block(const std::vector<double>& values) {
    const std::size_t n = values.size();
    double sum = 0.0, sum_sq = 0.0;
    for (double v : values) {
        sum += v;
        sum_sq += v * v;
    }
    StatBlock s;
    s.mean = sum / static_cast<double>(n);
    const double var = sum_sq / static_cast<double>(n) - s.mean * s.mean;
    s.stddev = var > 0.0 ? std::sqrt(var) : 0.0;

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    auto nearest_rank = [&](double p) {
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(p * static_cast<double>(n)));
        if (rank == 0) rank = 1;
        return sorted[rank - 1];
    };
    s.p5 = nearest_rank(0.05);
    s.p90 = nearest_rank(0.90);
    s.p95 = nearest_rank(0.95);
    s.p99 = nearest_rank(0.99);
    return s;
}

void emit_block(nlohmann::ordered_json& doc, const std::string& prefix,
                const std::string& mu_name, const StatBlock& s) {
    doc["mu_" + mu_name] = s.mean;
    doc["sigma_" + mu_name] = s.stddev;
    doc[prefix + "_min"] = s.min;
    doc[prefix + "_p5"] = s.p5;
    doc[prefix + "_p90"] = s.p90;
    doc[prefix + "_p95"] = s.p95;
    doc[prefix + "_p99"] = s.p99;
    doc[prefix + "_max"] = s.max;
}

}  // namespace

ErrorReport summarize(const ErrorSeries& series) {
    if (series.e.empty()) throw ParseError("cannot summarize an empty error series");
    if (series.e.size() != series.abs_e.size() ||
        series.e.size() != series.sq_e.size())
        throw ParseError("error series length mismatch");
    ErrorReport report;
    report.e = stat_block(series.e);
    report.abs_e = stat_block(series.abs_e);
    report.sq_e = stat_block(series.sq_e);
    report.evaluation_count = series.e.size();
    return report;
}

double mse(std::span<const double> predictions, const TargetSeries& targets,
           std::size_t n_skip) {
    if (predictions.size() < targets.size())
        throw ParseError("prediction series shorter than target series");
    if (n_skip >= targets.size())
        throw ParseError("n_skip leaves no evaluation window");
    double acc = 0.0;
    for (std::size_t k = n_skip; k < targets.size(); ++k) {
        const double err = targets.values[k] - predictions[k];
        acc += err * err;
    }
    return acc / static_cast<double>(targets.size() - n_skip);
}

nlohmann::ordered_json ErrorReport::to_json() const {
    nlohmann::ordered_json doc;
    emit_block(doc, "e2", "e2", sq_e);
    emit_block(doc, "abs_e", "abs_e", abs_e);
    emit_block(doc, "e", "e", e);
    doc["evaluation_count"] = evaluation_count;
    doc["n_skip"] = n_skip;
    doc["n_future"] = n_future;
    return doc;
}

std::string ErrorReport::csv_header() {
    return "model,params,mu_e2,e2_p95,e2_max,mu_abs_e,sigma_abs_e,abs_e_p90,"
           "abs_e_p95,abs_e_p99,abs_e_max,e_min,e_p5,e_p95,e_max";
}

std::string ErrorReport::csv_row(const std::string& model,
                                 const std::string& params) const {
    std::ostringstream row;
    row << model << ',' << params;
    for (double v : {sq_e.mean, sq_e.p95, sq_e.max, abs_e.mean, abs_e.stddev,
                     abs_e.p90, abs_e.p95, abs_e.p99, abs_e.max, e.min, e.p5,
                     e.p95, e.max})
        row << ',' << format_double(v);
    return row.str();
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace fdr
