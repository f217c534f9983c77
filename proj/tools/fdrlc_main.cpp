// fdrlc: frame delivery ratio prediction from binary probe traces.
// Subcommands: gen, fit, eval, compare.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdr/filters.hpp"
#include "fdr/metrics.hpp"
#include "fdr/synth.hpp"
#include "fdr/trace.hpp"
#include "fdr/training.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

fdr::TraceFormat resolve_format(const std::string& flag,
                                const std::filesystem::path& path) {
    if (flag == "csv") return fdr::TraceFormat::csv;
    if (flag == "packed") return fdr::TraceFormat::packed;
    return fdr::format_from_extension(path);
}

void write_manifest(const std::filesystem::path& primary_output,
                    nlohmann::ordered_json manifest, Clock::time_point started) {
    manifest["tool_version"] = kToolVersion;
    manifest["duration_s"] =
        std::chrono::duration<double>(Clock::now() - started).count();
    std::filesystem::path path = primary_output;
    path += ".manifest.json";
    std::ofstream out(path);
    if (!out) throw fdr::IoError("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
    std::ofstream out(path);
    if (!out) throw fdr::IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw fdr::IoError("write failure on " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw fdr::IoError("cannot write " + path.string());
    out << text;
    if (!out) throw fdr::IoError("write failure on " + path.string());
}

// Shared train-config options; config file first, flag overrides second.
struct ConfigOptions {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;

    void attach(CLI::App* cmd, bool full_pipeline) {
        cmd->add_option("--config", config_file,
                        "flat key=value config file (defaults match the tool docs)");
        auto track = [this](const std::string& key) {
            return [this, key](const std::string& value) {
                overrides.emplace_back(key, value);
            };
        };
        cmd->add_option_function<std::string>("--n-future", track("n_future"),
                                              "target window N_f (samples)");
        cmd->add_option_function<std::string>("--n-skip", track("n_skip"),
                                              "warm-up samples N_s to discard");
        cmd->add_option_function<std::string>("--y0", track("y0"),
                                              "initial prediction");
        if (full_pipeline) {
            cmd->add_option_function<std::string>("--n-lower", track("n_lower"),
                                                  "N_l, steps below alpha*");
            cmd->add_option_function<std::string>("--n-upper", track("n_upper"),
                                                  "N_u, steps above alpha*");
            cmd->add_option_function<std::string>("--ratio", track("ratio"),
                                                  "geometric ratio r");
            cmd->add_option_function<std::string>("--lambda-max", track("lambda_max"),
                                                  "cumulative-lambda pruning threshold");
            cmd->add_option_function<std::string>(
                "--grid-points-per-decade", track("alpha_grid_points_per_decade"),
                "alpha grid density");
            cmd->add_option_function<std::string>("--alpha-min", track("alpha_min"),
                                                  "alpha search lower bound");
            cmd->add_option_function<std::string>("--alpha-max", track("alpha_max"),
                                                  "alpha search upper bound");
            cmd->add_option_function<std::string>(
                "--refine-tol", track("alpha_refine_tolerance"),
                "relative tolerance of the golden-section refinement");
            cmd->add_option_function<std::string>("--qp-tol", track("qp_objective_tolerance"),
                                                  "solver objective tolerance");
            cmd->add_option_function<std::string>("--qp-max-iter", track("qp_max_iterations"),
                                                  "solver iteration cap");
        }
    }

    fdr::TrainConfig build() const {
        fdr::TrainConfig config;
        if (!config_file.empty()) config = fdr::TrainConfig::from_file(config_file);
        for (const auto& [key, value] : overrides) config.apply_key_value(key, value);
        config.validate();
        return config;
    }
};

nlohmann::ordered_json report_with_meta(const fdr::ErrorReport& report) {
    return report.to_json();
}

std::string series_csv(const std::vector<double>& predictions,
                       const fdr::TargetSeries& targets) {
    std::ostringstream out;
    out << "i,t_i,y_i\n";
    for (std::size_t k = 0; k < targets.size(); ++k)
        out << (k + 1) << ',' << fdr::format_double(targets.values[k]) << ','
            << fdr::format_double(predictions[k]) << '\n';
    return out.str();
}

// ---------------------------------------------------------------- gen ----

struct GenArgs {
    std::string out;
    std::string profile;
    std::string ge;  // "p_gb,p_bg,ps_good,ps_bad"
    std::optional<std::uint64_t> seed;
    std::size_t n = 0;
    std::uint32_t period_us = 500000;
    std::string label;
    std::string format = "auto";
};

int run_gen(const GenArgs& args) {
    const auto started = Clock::now();
    if (!args.seed)
        throw fdr::ParseError("--seed is required (all generation is seeded)");
    if (args.profile.empty() == args.ge.empty())
        throw fdr::ParseError("exactly one of --profile or --ge must be given");

    fdr::OutcomeTrace trace;
    nlohmann::ordered_json generator;
    if (!args.profile.empty()) {
        const fdr::FdrProfile profile = fdr::load_profile(args.profile, *args.seed);
        trace = fdr::gen_from_profile(profile, args.period_us);
        generator["kind"] = "profile";
        generator["profile_file"] = args.profile;
    } else {
        std::istringstream ss(args.ge);
        fdr::GilbertElliottParams params;
        char c1, c2, c3;
        if (!(ss >> params.p_good_to_bad >> c1 >> params.p_bad_to_good >> c2 >>
              params.success_prob_good >> c3 >> params.success_prob_bad) ||
            c1 != ',' || c2 != ',' || c3 != ',' || !ss.eof())
            throw fdr::ParseError("--ge expects p_gb,p_bg,ps_good,ps_bad");
        if (args.n == 0) throw fdr::ParseError("--n is required with --ge");
        params.seed = *args.seed;
        trace = fdr::gen_gilbert_elliott(params, args.n, args.period_us);
        generator["kind"] = "gilbert_elliott";
        generator["p_good_to_bad"] = params.p_good_to_bad;
        generator["p_bad_to_good"] = params.p_bad_to_good;
        generator["success_prob_good"] = params.success_prob_good;
        generator["success_prob_bad"] = params.success_prob_bad;
    }
    generator["seed"] = *args.seed;
    generator["sample_period_us"] = args.period_us;
    trace.channel_label = args.label;

    fdr::save_trace(trace, args.out, resolve_format(args.format, args.out));

    nlohmann::ordered_json manifest;
    manifest["command"] = "gen";
    manifest["generator"] = generator;
    manifest["outputs"] = {{"trace", args.out}};
    manifest["n_outcomes"] = trace.size();
    write_manifest(args.out, manifest, started);
    std::cout << "wrote " << args.out << " (" << trace.size() << " outcomes)\n";
    return 0;
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
    std::string train;
    std::string out;
    std::string report;
    std::string train_format = "auto";
    bool sweep = false;
    ConfigOptions config;
};

int run_fit(const FitArgs& args) {
    const auto started = Clock::now();
    const fdr::TrainConfig config = args.config.build();
    const fdr::OutcomeTrace trace =
        fdr::load_trace(args.train, resolve_format(args.train_format, args.train));

    const fdr::ElcModel model = fdr::fit_elc(trace, config);
    fdr::save_model(model, args.out);

    nlohmann::ordered_json report;
    report["alpha_star"] = model.provenance["alpha_star"];
    report["starting_alphas"] = model.provenance["starting_alphas"];
    report["starting_lambdas"] = model.provenance["starting_lambdas"];
    report["final_alphas"] = model.alphas;
    report["final_lambdas"] = model.lambdas;
    report["n_alpha"] = model.alphas.size();
    report["first_minimization_mse"] = model.provenance["first_minimization_mse"];
    report["final_mse"] = model.provenance["final_mse"];
    const std::string report_path =
        args.report.empty() ? args.out + ".report.json" : args.report;
    write_json(report_path, report);

    nlohmann::ordered_json manifest;
    manifest["command"] = "fit";
    manifest["config"] = config.snapshot();
    manifest["inputs"] = {{"train", args.train}};
    manifest["outputs"] = {{"model", args.out}, {"report", report_path}};

    if (args.sweep) {
        std::vector<double> thresholds;
        for (int i = 1; i <= 20; ++i) thresholds.push_back(0.05 * i);
        const std::vector<double> mses = fdr::sweep_lambda_max(trace, config, thresholds);
        std::ostringstream csv;
        csv << "lambda_max,training_mse\n";
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            csv << fdr::format_double(thresholds[i]) << ','
                << fdr::format_double(mses[i]) << '\n';
        const std::string sweep_path = args.out + ".lambda_sweep.csv";
        write_text(sweep_path, csv.str());
        manifest["outputs"]["lambda_sweep"] = sweep_path;
    }
    write_manifest(args.out, manifest, started);
    std::cout << "alpha* = " << model.provenance["alpha_star"].get<double>()
              << ", N_alpha = " << model.alphas.size() << ", training MSE "
              << model.provenance["first_minimization_mse"].get<double>() << " -> "
              << model.provenance["final_mse"].get<double>() << '\n';
    return 0;
}

// --------------------------------------------------------------- eval ----

struct EvalArgs {
    std::string model;
    double ema_alpha = 0.0;
    std::string test;
    std::string out;
    std::string csv;
    std::string emit_series;
    std::string test_format = "auto";
    ConfigOptions config;
};

int run_eval(const EvalArgs& args) {
    const auto started = Clock::now();
    const fdr::TrainConfig config = args.config.build();
    if (args.model.empty() == (args.ema_alpha == 0.0))
        throw fdr::ParseError("exactly one of --model or --ema-alpha must be given");

    const fdr::OutcomeTrace trace =
        fdr::load_trace(args.test, resolve_format(args.test_format, args.test));

    fdr::ElcModel model;
    std::string model_name, params;
    if (!args.model.empty()) {
        model = fdr::load_model(args.model);
        model_name = "ELC";
        params = "N_alpha=" + std::to_string(model.alphas.size());
    } else {
        model.alphas = {args.ema_alpha};
        model.lambdas = {1.0};
        model.y0 = config.y0;
        model_name = "EMA";
        params = "alpha=" + fdr::format_double(args.ema_alpha);
    }

    const fdr::ErrorReport report = fdr::evaluate(model, trace, config);
    write_json(args.out, report_with_meta(report));
    const std::string csv_path = args.csv.empty() ? args.out + ".csv" : args.csv;
    write_text(csv_path, fdr::ErrorReport::csv_header() + "\n" +
                             report.csv_row(model_name, params) + "\n");

    nlohmann::ordered_json manifest;
    manifest["command"] = "eval";
    manifest["config"] = config.snapshot();
    manifest["inputs"] = {{"test", args.test}};
    if (!args.model.empty()) manifest["inputs"]["model"] = args.model;
    else manifest["inputs"]["ema_alpha"] = args.ema_alpha;
    manifest["outputs"] = {{"report", args.out}, {"csv", csv_path}};

    if (!args.emit_series.empty()) {
        const std::vector<double> predictions = fdr::predict_series(model, trace);
        const fdr::TargetSeries targets = fdr::compute_targets(trace, config.n_future);
        write_text(args.emit_series, series_csv(predictions, targets));
        manifest["outputs"]["series"] = args.emit_series;
    }
    write_manifest(args.out, manifest, started);
    std::cout << model_name << " mu_e2 = " << report.sq_e.mean << " over "
              << report.evaluation_count << " predictions\n";
    return 0;
}

// ------------------------------------------------------------ compare ----

struct CompareArgs {
    std::string train;
    std::string test;
    std::string out;  // output path prefix
    std::string train_format = "auto";
    std::string test_format = "auto";
    ConfigOptions config;
};

int run_compare(const CompareArgs& args) {
    const auto started = Clock::now();
    const fdr::TrainConfig config = args.config.build();
    const fdr::OutcomeTrace train =
        fdr::load_trace(args.train, resolve_format(args.train_format, args.train));
    const fdr::OutcomeTrace test =
        fdr::load_trace(args.test, resolve_format(args.test_format, args.test));

    const double alpha_star = fdr::fit_alpha_star(train, config);
    const fdr::ElcModel elc = fdr::fit_elc(train, config);
    const fdr::ErrorReport ema_report = fdr::evaluate_ema(alpha_star, test, config);
    const fdr::ErrorReport elc_report = fdr::evaluate(elc, test, config);

    const std::string ema_params = "alpha*=" + fdr::format_double(alpha_star);
    const std::string elc_params = "N_alpha=" + std::to_string(elc.alphas.size());
    const std::string table = fdr::ErrorReport::csv_header() + "\n" +
                              ema_report.csv_row("EMA", ema_params) + "\n" +
                              elc_report.csv_row("ELC", elc_params) + "\n";
    const double reduction =
        (1.0 - elc_report.sq_e.mean / ema_report.sq_e.mean) * 100.0;

    write_text(args.out + ".table.csv", table);
    write_json(args.out + ".ema.json", report_with_meta(ema_report));
    write_json(args.out + ".elc.json", report_with_meta(elc_report));
    nlohmann::ordered_json summary;
    summary["alpha_star"] = alpha_star;
    summary["n_alpha"] = elc.alphas.size();
    summary["ema_mu_e2"] = ema_report.sq_e.mean;
    summary["elc_mu_e2"] = elc_report.sq_e.mean;
    summary["mse_reduction_percent"] = reduction;
    write_json(args.out + ".summary.json", summary);
    fdr::save_model(elc, args.out + ".model.json");

    nlohmann::ordered_json manifest;
    manifest["command"] = "compare";
    manifest["config"] = config.snapshot();
    manifest["inputs"] = {{"train", args.train}, {"test", args.test}};
    manifest["outputs"] = {{"table", args.out + ".table.csv"},
                           {"ema_report", args.out + ".ema.json"},
                           {"elc_report", args.out + ".elc.json"},
                           {"summary", args.out + ".summary.json"},
                           {"model", args.out + ".model.json"}};
    write_manifest(args.out + ".table.csv", manifest, started);

    std::cout << table << "mse_reduction_percent = " << reduction << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FDR prediction: EMA baseline and ELC pipeline"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "generate a synthetic outcome trace");
    gen->add_option("--out", gen_args.out, "output trace file")->required();
    gen->add_option("--seed", gen_args.seed, "generator seed (required)");
    gen->add_option("--profile", gen_args.profile, "FDR profile file: 'length fdr' per line");
    gen->add_option("--ge", gen_args.ge, "Gilbert-Elliott params p_gb,p_bg,ps_good,ps_bad");
    gen->add_option("--n", gen_args.n, "number of outcomes (with --ge)");
    gen->add_option("--period-us", gen_args.period_us, "sample period in microseconds");
    gen->add_option("--label", gen_args.label, "channel label");
    gen->add_option("--format", gen_args.format, "csv|packed (default: by extension)");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "train an ELC model");
    fit->add_option("--train", fit_args.train, "training trace")->required();
    fit->add_option("--out", fit_args.out, "output model JSON")->required();
    fit->add_option("--report", fit_args.report, "fit report path");
    fit->add_option("--train-format", fit_args.train_format, "csv|packed");
    fit->add_flag("--sweep-lambda-max", fit_args.sweep,
                  "also write training MSE vs lambda_max CSV");
    fit_args.config.attach(fit, true);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "evaluate a model on a test trace");
    eval->add_option("--model", eval_args.model, "ELC model JSON");
    eval->add_option("--ema-alpha", eval_args.ema_alpha, "plain EMA baseline weight");
    eval->add_option("--test", eval_args.test, "test trace")->required();
    eval->add_option("--out", eval_args.out, "output report JSON")->required();
    eval->add_option("--csv", eval_args.csv, "one-row CSV path");
    eval->add_option("--emit-series", eval_args.emit_series,
                     "write (i, t_i, y_i) CSV for plotting");
    eval->add_option("--test-format", eval_args.test_format, "csv|packed");
    eval_args.config.attach(eval, false);

    CompareArgs cmp_args;
    auto* cmp = app.add_subcommand("compare", "fit and evaluate EMA vs ELC");
    cmp->add_option("--train", cmp_args.train, "training trace")->required();
    cmp->add_option("--test", cmp_args.test, "test trace")->required();
    cmp->add_option("--out", cmp_args.out, "output path prefix")->required();
    cmp->add_option("--train-format", cmp_args.train_format, "csv|packed");
    cmp->add_option("--test-format", cmp_args.test_format, "csv|packed");
    cmp_args.config.attach(cmp, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return run_gen(gen_args);
        if (fit->parsed()) return run_fit(fit_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (cmp->parsed()) return run_compare(cmp_args);
    } catch (const fdr::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
