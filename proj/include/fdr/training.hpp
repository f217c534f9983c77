#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fdr/filters.hpp"
#include "fdr/metrics.hpp"
#include "fdr/trace.hpp"

namespace fdr {

struct AlphaSearchConfig {
    int grid_points_per_decade = 20;
    double alpha_min = 1e-6;
    double alpha_max = 1.0;
    double refine_tolerance = 1e-3;  // relative width of the final bracket
};

struct QpConfig {
    double objective_tolerance = 1e-12;
    int max_iterations = 200000;
};

struct TrainConfig {
    int n_lower = 17;          // N_l
    int n_upper = 17;          // N_u
    double ratio = 1.5;        // r
    double lambda_max = 0.75;
    std::size_t n_future = 3600;  // N_f
    std::size_t n_skip = 3600;    // N_s
    double y0 = kDefaultY0;
    AlphaSearchConfig alpha_search;
    QpConfig qp;

    void validate() const;
    nlohmann::ordered_json snapshot() const;

    // Flat key=value file; '#' comments allowed. Unknown keys are errors.
    static TrainConfig from_file(const std::filesystem::path& path);
    void apply_key_value(const std::string& key, const std::string& value);
};

// Minimum trace length for training/evaluation under this config.
inline std::size_t min_trace_length(const TrainConfig& c) {
    return c.n_skip + c.n_future + 1;
}

// MSE-minimizing EMA weight, found by a log-spaced grid scan followed by
// golden-section refinement around the grid minimum.
double fit_alpha_star(const OutcomeTrace& trace, const TrainConfig& config);

// Geometric progression alpha* * r^n for n in [-N_l, N_u], ascending;
// entries exceeding 1 are dropped.
std::vector<double> build_starting_sequence(double alpha_star,
                                            const TrainConfig& config);

/// Quadratic reformulation of the combination MSE over the evaluation
/// window: MSE(lambda) = l'*G*l - 2*b'*l + c, with time-averaged products.
struct GramSystem {
    Eigen::MatrixXd gram;      // G, symmetric PSD
    Eigen::VectorXd cross;     // b
    double target_energy = 0;  // c
    std::size_t count = 0;     // evaluation window size

    double objective(const Eigen::VectorXd& lambda) const;
};

GramSystem build_gram(const PredictionMatrix& bank, const TargetSeries& targets,
                      std::size_t n_skip);

struct LambdaSolution {
    std::vector<double> lambdas;  // simplex-feasible
    double achieved_mse = 0;
    int iterations = 0;
    bool converged = true;
};

// Convex QP over the probability simplex: projected gradient (accelerated,
// with monotone restarts) from the uniform point, plus an exact KKT polish
// on the identified support.
LambdaSolution minimize_lambda(const GramSystem& system, const QpConfig& qp = {});

// Euclidean projection onto {l >= 0, sum l = 1}.
Eigen::VectorXd project_simplex(Eigen::VectorXd v);

struct FinalSelection {
    std::vector<double> alphas;        // sorted by descending lambda
    std::vector<std::size_t> indices;  // positions in the starting sequence
};

// Smallest prefix of the lambda-descending order whose mass reaches
// lambda_max; ties broken by ascending starting-sequence position.
FinalSelection select_final(const std::vector<double>& alphas,
                            const LambdaSolution& solution, double lambda_max);

ElcModel fit_elc(const OutcomeTrace& train_trace, const TrainConfig& config);

// Refit training MSE for each lambda_max threshold, from a single run of
// the alpha search / bank / first minimization.
std::vector<double> sweep_lambda_max(const OutcomeTrace& train_trace,
                                     const TrainConfig& config,
                                     std::span<const double> thresholds);

ErrorReport evaluate(const ElcModel& model, const OutcomeTrace& test_trace,
                     const TrainConfig& config);
ErrorReport evaluate_ema(double alpha, const OutcomeTrace& test_trace,
                         const TrainConfig& config);

}  // namespace fdr
