#include "fdr/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace fdr {

void TrainConfig::validate() const {
    if (n_lower < 0 || n_upper < 0) throw ParseError("n_lower/n_upper must be >= 0");
    if (!(ratio > 1.0)) throw ParseError("ratio must be > 1");
    if (!(lambda_max > 0.0 && lambda_max <= 1.0))
        throw ParseError("lambda_max must be in (0,1]");
    if (n_future == 0) throw ParseError("n_future must be >= 1");
    if (!(y0 >= 0.0 && y0 <= 1.0)) throw ParseError("y0 must be in [0,1]");
    if (alpha_search.grid_points_per_decade < 1)
        throw ParseError("grid_points_per_decade must be >= 1");
    if (!(alpha_search.alpha_min > 0.0 && alpha_search.alpha_max <= 1.0 &&
          alpha_search.alpha_min <= alpha_search.alpha_max))
        throw ParseError("alpha search range must satisfy 0 < alpha_min <= alpha_max <= 1");
    if (!(alpha_search.refine_tolerance > 0.0))
        throw ParseError("refine_tolerance must be > 0");
    if (!(qp.objective_tolerance > 0.0)) throw ParseError("qp objective_tolerance must be > 0");
    if (qp.max_iterations < 1) throw ParseError("qp max_iterations must be >= 1");
}

nlohmann::ordered_json TrainConfig::snapshot() const {
    nlohmann::ordered_json doc;
    doc["n_lower"] = n_lower;
    doc["n_upper"] = n_upper;
    doc["ratio"] = ratio;
    doc["lambda_max"] = lambda_max;
    doc["n_future"] = n_future;
    doc["n_skip"] = n_skip;
    doc["y0"] = y0;
    doc["alpha_grid_points_per_decade"] = alpha_search.grid_points_per_decade;
    doc["alpha_min"] = alpha_search.alpha_min;
    doc["alpha_max"] = alpha_search.alpha_max;
    doc["alpha_refine_tolerance"] = alpha_search.refine_tolerance;
    doc["qp_objective_tolerance"] = qp.objective_tolerance;
    doc["qp_max_iterations"] = qp.max_iterations;
    return doc;
}

void TrainConfig::apply_key_value(const std::string& key, const std::string& value) {
    auto as_double = [&] {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw ParseError("bad numeric value for " + key);
        return v;
    };
    auto as_count = [&] {
        double v = as_double();
        if (v < 0 || v != std::floor(v)) throw ParseError(key + " must be a non-negative integer");
        return static_cast<std::size_t>(v);
    };
    try {
        if (key == "n_lower") n_lower = static_cast<int>(as_count());
        else if (key == "n_upper") n_upper = static_cast<int>(as_count());
        else if (key == "ratio") ratio = as_double();
        else if (key == "lambda_max") lambda_max = as_double();
        else if (key == "n_future") n_future = as_count();
        else if (key == "n_skip") n_skip = as_count();
        else if (key == "y0") y0 = as_double();
        else if (key == "alpha_grid_points_per_decade")
            alpha_search.grid_points_per_decade = static_cast<int>(as_count());
        else if (key == "alpha_min") alpha_search.alpha_min = as_double();
        else if (key == "alpha_max") alpha_search.alpha_max = as_double();
        else if (key == "alpha_refine_tolerance") alpha_search.refine_tolerance = as_double();
        else if (key == "qp_objective_tolerance") qp.objective_tolerance = as_double();
        else if (key == "qp_max_iterations") qp.max_iterations = static_cast<int>(as_count());
        else throw ParseError("unknown config key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
        throw ParseError("bad numeric value for " + key);
    } catch (const std::out_of_range&) {
        throw ParseError("value out of range for " + key);
    }
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    TrainConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected key=value");
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        config.apply_key_value(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    config.validate();
    return config;
}

namespace {

// Training MSE of a single EMA filter, streamed without materializing the
// prediction series.
double ema_training_mse(double alpha, double y0, const OutcomeTrace& trace,
                        const TargetSeries& targets, std::size_t n_skip) {
    const double a = alpha;
    const double b = 1.0 - alpha;
    double y = y0;
    double acc = 0.0;
    const std::size_t n_targets = targets.size();
    for (std::size_t i = 0; i < n_targets; ++i) {
        y = a * static_cast<double>(trace.outcomes[i]) + b * y;
        if (i >= n_skip) {
            const double err = targets.values[i] - y;
            acc += err * err;
        }
    }
    return acc / static_cast<double>(n_targets - n_skip);
}

}  // namespace

double fit_alpha_star(const OutcomeTrace& trace, const TrainConfig& config) {
    config.validate();
    if (trace.size() < min_trace_length(config))
        throw ParseError("trace too short for training: need at least " +
                         std::to_string(min_trace_length(config)) +
                         " outcomes, have " + std::to_string(trace.size()));

    const TargetSeries targets = compute_targets(trace, config.n_future);
    auto objective = [&](double alpha) {
        return ema_training_mse(alpha, config.y0, trace, targets, config.n_skip);
    };

    const auto& s = config.alpha_search;
    std::vector<double> grid;
    const double step = std::pow(10.0, 1.0 / s.grid_points_per_decade);
    for (double a = s.alpha_min; a < s.alpha_max; a *= step) grid.push_back(a);
    grid.push_back(s.alpha_max);

    std::size_t best_idx = 0;
    double best_alpha = grid[0];
    double best_f = objective(grid[0]);
    double worst_f = best_f;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double f = objective(grid[i]);
        worst_f = std::max(worst_f, f);
        if (f < best_f) {
            best_f = f;
            best_idx = i;
            best_alpha = grid[i];
        }
    }
    // Flat objective: nothing to refine, return the grid minimum.
    if (worst_f - best_f < 1e-15 || grid.size() == 1) return best_alpha;

    // Golden-section refinement in log(alpha) over the bracketing neighbors.
    double lo = std::log(grid[best_idx == 0 ? 0 : best_idx - 1]);
    double hi = std::log(grid[std::min(best_idx + 1, grid.size() - 1)]);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto probe = [&](double log_a) {
        const double a = std::exp(log_a);
        const double f = objective(a);
        if (f < best_f) {
            best_f = f;
            best_alpha = a;
        }
        return f;
    };
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = probe(c);
    double fd = probe(d);
    const double width_limit = std::log1p(s.refine_tolerance);
    while (hi - lo > width_limit) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = probe(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = probe(d);
        }
    }
    return best_alpha;
}

std::vector<double> build_starting_sequence(double alpha_star,
                                            const TrainConfig& config) {
    if (!(alpha_star > 0.0 && alpha_star <= 1.0))
        throw ParseError("alpha_star must be in (0,1]");
    std::vector<double> alphas;
    alphas.reserve(static_cast<std::size_t>(config.n_lower + 1 + config.n_upper));
    for (int n = -config.n_lower; n <= config.n_upper; ++n) {
        const double a = alpha_star * std::pow(config.ratio, n);
        if (a > 1.0) continue;  // clamped out of the valid weight range
        alphas.push_back(a);
    }
    return alphas;
}

double GramSystem::objective(const Eigen::VectorXd& lambda) const {
    return lambda.dot(gram * lambda) - 2.0 * cross.dot(lambda) + target_energy;
}

GramSystem build_gram(const PredictionMatrix& bank, const TargetSeries& targets,
                      std::size_t n_skip) {
    if (bank.n_samples < targets.size())
        throw ParseError("bank has fewer samples than targets");
    if (n_skip >= targets.size())
        throw ParseError("n_skip leaves no evaluation window");

    const std::size_t window = targets.size() - n_skip;
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> full(bank.data.data(),
                                    static_cast<Eigen::Index>(bank.n_filters),
                                    static_cast<Eigen::Index>(bank.n_samples));
    auto block = full.middleCols(static_cast<Eigen::Index>(n_skip),
                                 static_cast<Eigen::Index>(window));
    Eigen::Map<const Eigen::VectorXd> t(targets.values.data() + n_skip,
                                        static_cast<Eigen::Index>(window));

    GramSystem system;
    const double inv = 1.0 / static_cast<double>(window);
    system.gram = (block * block.transpose()) * inv;
    system.gram = ((system.gram + system.gram.transpose()) * 0.5).eval();
    system.cross = (block * t) * inv;
    system.target_energy = t.squaredNorm() * inv;
    system.count = window;

    // PSD within the eigenvalue floor.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system.gram,
                                                       Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, system.gram.diagonal().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale)
        throw ParseError("gram matrix is not positive semidefinite");
    return system;
}

Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    // rho = largest k with u_k > (sum_{j<=k} u_j - 1)/(k+1)
    double cumsum = 0.0;
    double rho_sum = 0.0;
    Eigen::Index rho = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumsum += u[static_cast<std::size_t>(k)];
        if (u[static_cast<std::size_t>(k)] >
            (cumsum - 1.0) / static_cast<double>(k + 1)) {
            rho = k;
            rho_sum = cumsum;
        }
    }
    const double theta = (rho_sum - 1.0) / static_cast<double>(rho + 1);
    return v.unaryExpr([theta](double x) { return std::max(x - theta, 0.0); });
}

namespace {

// Equality-constrained solve on a fixed support; returns the full-length
// lambda or an empty vector when the reduced KKT system is unusable.
Eigen::VectorXd solve_on_support(const GramSystem& system,
                                 const std::vector<Eigen::Index>& support) {
    const auto m = static_cast<Eigen::Index>(support.size());
    const Eigen::Index n = system.gram.rows();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j)
            kkt(i, j) = 2.0 * system.gram(support[static_cast<std::size_t>(i)],
                                          support[static_cast<std::size_t>(j)]);
        kkt(i, m) = 1.0;
        kkt(m, i) = 1.0;
        rhs(i) = 2.0 * system.cross(support[static_cast<std::size_t>(i)]);
    }
    rhs(m) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    Eigen::VectorXd sol = lu.solve(rhs);
    if ((kkt * sol - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm()))
        return {};  // inconsistent (numerically singular in a bad way)

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i)
        lambda(support[static_cast<std::size_t>(i)]) = sol(i);
    return lambda;
}

}  // namespace

LambdaSolution minimize_lambda(const GramSystem& system, const QpConfig& qp) {
    const Eigen::Index n = system.gram.rows();
    if (n < 1 || system.cross.size() != n)
        throw ParseError("gram system dimension mismatch");

    LambdaSolution result;
    if (n == 1) {
        result.lambdas = {1.0};
        result.achieved_mse = system.gram(0, 0) - 2.0 * system.cross(0) +
                              system.target_energy;
        return result;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system.gram,
                                                       Eigen::EigenvaluesOnly);
    const double lipschitz = std::max(2.0 * eig.eigenvalues().maxCoeff(), 1e-12);

    // FISTA with function-value restarts, started from the uniform point.
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd v = x;
    double t = 1.0;
    double f_x = system.objective(x);
    Eigen::VectorXd x_best = x;
    double f_best = f_x;
    double f_checkpoint = f_x;
    int iter = 0;
    bool converged = false;
    for (; iter < qp.max_iterations; ++iter) {
        Eigen::VectorXd grad = 2.0 * (system.gram * v - system.cross);
        Eigen::VectorXd x_new = project_simplex(v - grad / lipschitz);
        double f_new = system.objective(x_new);
        if (f_new > f_x) {
            // momentum overshoot: restart from the current iterate
            v = x;
            t = 1.0;
            grad = 2.0 * (system.gram * v - system.cross);
            x_new = project_simplex(v - grad / lipschitz);
            f_new = system.objective(x_new);
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        v = x_new + ((t - 1.0) / t_new) * (x_new - x);
        x = x_new;
        f_x = f_new;
        t = t_new;
        if (f_x < f_best) {
            f_best = f_x;
            x_best = x;
        }
        if ((iter + 1) % 100 == 0) {
            if (f_checkpoint - f_best < qp.objective_tolerance) {
                converged = true;
                break;
            }
            f_checkpoint = f_best;
        }
    }

    // Polish: exact KKT solve on the identified support, shrinking the
    // support while the solve steps outside the nonnegative orthant.
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < n; ++j)
        if (x_best(j) > 1e-10) support.push_back(j);
    while (!support.empty()) {
        Eigen::VectorXd cand = solve_on_support(system, support);
        if (cand.size() == 0) break;
        Eigen::Index worst = -1;
        double worst_val = -1e-10;
        for (Eigen::Index j : support)
            if (cand(j) < worst_val) {
                worst_val = cand(j);
                worst = j;
            }
        if (worst < 0) {
            for (Eigen::Index j = 0; j < n; ++j) cand(j) = std::max(cand(j), 0.0);
            cand /= cand.sum();
            if (system.objective(cand) <= f_best) {
                f_best = system.objective(cand);
                x_best = cand;
            }
            break;
        }
        support.erase(std::find(support.begin(), support.end(), worst));
    }

    // Final clean-up keeps the iterate exactly on the simplex.
    for (Eigen::Index j = 0; j < n; ++j)
        x_best(j) = std::clamp(x_best(j), 0.0, 1.0);
    x_best /= x_best.sum();

    result.lambdas.assign(x_best.data(), x_best.data() + n);
    result.achieved_mse = system.objective(x_best);
    result.iterations = iter;
    result.converged = converged;
    return result;
}

FinalSelection select_final(const std::vector<double>& alphas,
                            const LambdaSolution& solution, double lambda_max) {
    if (alphas.size() != solution.lambdas.size())
        throw ParseError("alphas and lambdas must align");
    if (!(lambda_max > 0.0 && lambda_max <= 1.0))
        throw ParseError("lambda_max must be in (0,1]");

    std::vector<std::size_t> order(alphas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return solution.lambdas[a] > solution.lambdas[b];
    });

    FinalSelection selection;
    double mass = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        selection.indices.push_back(order[k]);
        selection.alphas.push_back(alphas[order[k]]);
        mass += solution.lambdas[order[k]];
        if (mass >= lambda_max - 1e-12) break;
    }
    return selection;
}

namespace {

struct PreparedTraining {
    double alpha_star = 0;
    std::vector<double> starting;
    GramSystem gram;
    LambdaSolution first;
};

PreparedTraining prepare_training(const OutcomeTrace& train_trace,
                                  const TrainConfig& config) {
    config.validate();
    if (train_trace.size() < min_trace_length(config))
        throw ParseError("training trace too short: need at least " +
                         std::to_string(min_trace_length(config)) +
                         " outcomes, have " + std::to_string(train_trace.size()));
    PreparedTraining prep;
    prep.alpha_star = fit_alpha_star(train_trace, config);
    prep.starting = build_starting_sequence(prep.alpha_star, config);
    const TargetSeries targets = compute_targets(train_trace, config.n_future);
    const PredictionMatrix bank = bank_run(prep.starting, config.y0, train_trace);
    prep.gram = build_gram(bank, targets, config.n_skip);
    prep.first = minimize_lambda(prep.gram, config.qp);
    return prep;
}

GramSystem restrict_gram(const GramSystem& gram,
                         const std::vector<std::size_t>& indices) {
    const auto m = static_cast<Eigen::Index>(indices.size());
    GramSystem sub;
    sub.gram.resize(m, m);
    sub.cross.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto gi = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(i)]);
        sub.cross(i) = gram.cross(gi);
        for (Eigen::Index j = 0; j < m; ++j)
            sub.gram(i, j) = gram.gram(
                gi, static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]));
    }
    sub.target_energy = gram.target_energy;
    sub.count = gram.count;
    return sub;
}

}  // namespace

ElcModel fit_elc(const OutcomeTrace& train_trace, const TrainConfig& config) {
    const PreparedTraining prep = prepare_training(train_trace, config);
    const double alpha_star = prep.alpha_star;
    const std::vector<double>& starting = prep.starting;
    const LambdaSolution& first = prep.first;

    ElcModel model;
    model.y0 = config.y0;
    double final_mse = first.achieved_mse;
    if (config.lambda_max >= 1.0) {
        // lambda_max = 1 keeps the full sequence; the second minimization
        // is skipped and lambdaF = lambdaS.
        model.alphas = starting;
        model.lambdas = first.lambdas;
    } else {
        const FinalSelection selection = select_final(starting, first, config.lambda_max);
        const LambdaSolution refit =
            minimize_lambda(restrict_gram(prep.gram, selection.indices), config.qp);
        model.alphas = selection.alphas;
        model.lambdas = refit.lambdas;
        final_mse = refit.achieved_mse;
    }

    nlohmann::ordered_json prov;
    prov["alpha_star"] = alpha_star;
    prov["starting_alphas"] = starting;
    prov["starting_lambdas"] = first.lambdas;
    prov["first_minimization_mse"] = first.achieved_mse;
    prov["final_mse"] = final_mse;
    prov["n_alpha"] = model.alphas.size();
    prov["config"] = config.snapshot();
    nlohmann::ordered_json tr;
    tr["channel_label"] = train_trace.channel_label;
    tr["length"] = train_trace.size();
    tr["sample_period_us"] = train_trace.sample_period_us;
    tr["origin"] = train_trace.origin == TraceOrigin::synthetic ? "synthetic" : "measured";
    if (train_trace.origin == TraceOrigin::synthetic) tr["seed"] = train_trace.seed;
    prov["training_trace"] = tr;
    model.provenance = prov;

    model.validate();
    return model;
}

std::vector<double> sweep_lambda_max(const OutcomeTrace& train_trace,
                                     const TrainConfig& config,
                                     std::span<const double> thresholds) {
    const PreparedTraining prep = prepare_training(train_trace, config);
    std::vector<double> mses;
    mses.reserve(thresholds.size());
    for (double threshold : thresholds) {
        if (threshold >= 1.0) {
            mses.push_back(prep.first.achieved_mse);
            continue;
        }
        const FinalSelection selection =
            select_final(prep.starting, prep.first, threshold);
        const LambdaSolution refit =
            minimize_lambda(restrict_gram(prep.gram, selection.indices), config.qp);
        mses.push_back(refit.achieved_mse);
    }
    return mses;
}

ErrorReport evaluate(const ElcModel& model, const OutcomeTrace& test_trace,
                     const TrainConfig& config) {
    config.validate();
    if (test_trace.size() < min_trace_length(config))
        throw ParseError("test trace too short: need at least " +
                         std::to_string(min_trace_length(config)) + " outcomes");
    const std::vector<double> predictions = predict_series(model, test_trace);
    const TargetSeries targets = compute_targets(test_trace, config.n_future);
    ErrorReport report = summarize(error_series(predictions, targets, config.n_skip));
    report.n_skip = config.n_skip;
    report.n_future = config.n_future;
    return report;
}

ErrorReport evaluate_ema(double alpha, const OutcomeTrace& test_trace,
                         const TrainConfig& config) {
    ElcModel model;
    model.alphas = {alpha};
    model.lambdas = {1.0};
    model.y0 = config.y0;
    return evaluate(model, test_trace, config);
}

}  // namespace fdr
