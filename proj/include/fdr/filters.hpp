#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdr/trace.hpp"

namespace fdr {

constexpr double kDefaultY0 = 0.5;

/// One EMA filter: y' = alpha*x + (1-alpha)*y.
struct EmaState {
    double alpha;
    double y;

    EmaState(double alpha_, double y0 = kDefaultY0);
};

inline EmaState ema_step(EmaState state, double x) {
    state.y = state.alpha * x + (1.0 - state.alpha) * state.y;
    return state;
}

// Prediction series y_1..y_N; y_i is the filter output after consuming x_i.
std::vector<double> ema_run(double alpha, double y0, const OutcomeTrace& trace);

/// Row-major [filter][sample] prediction matrix from a bank of EMA filters.
struct PredictionMatrix {
    std::size_t n_filters = 0;
    std::size_t n_samples = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t j) const {
        return {data.data() + j * n_samples, n_samples};
    }
    double at(std::size_t j, std::size_t i) const { return data[j * n_samples + i]; }
};

PredictionMatrix bank_run(std::span<const double> alphas, double y0,
                          const OutcomeTrace& trace);

// Convex combination of per-filter predictions at one index.
double combine(std::span<const double> bank_outputs, std::span<const double> lambdas);

/// The trained predictor: final alpha weights, their combination
/// coefficients, and the initial prediction.
struct ElcModel {
    std::vector<double> alphas;
    std::vector<double> lambdas;
    double y0 = kDefaultY0;
    nlohmann::ordered_json provenance;  // config, training-set identity, MSEs

    void validate() const;
};

std::vector<double> predict_series(const ElcModel& model, const OutcomeTrace& trace);

// JSON persistence; decimal round-trip safe (shortest round-trip doubles).
void save_model(const ElcModel& model, const std::filesystem::path& path);
ElcModel load_model(const std::filesystem::path& path);

}  // namespace fdr
