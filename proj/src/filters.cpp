#include "fdr/filters.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace fdr {

EmaState::EmaState(double alpha_, double y0) : alpha(alpha_), y(y0) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ParseError("alpha must be in (0,1], got " + std::to_string(alpha));
    if (!(y >= 0.0 && y <= 1.0))
        throw ParseError("y0 must be in [0,1], got " + std::to_string(y));
}

std::vector<double> ema_run(double alpha, double y0, const OutcomeTrace& trace) {
    EmaState state(alpha, y0);
    std::vector<double> out(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        state = ema_step(state, static_cast<double>(trace.outcomes[i]));
        out[i] = state.y;
    }
    return out;
}

PredictionMatrix bank_run(std::span<const double> alphas, double y0,
                          const OutcomeTrace& trace) {
    if (alphas.empty()) throw ParseError("filter bank must contain at least one alpha");
    PredictionMatrix m;
    m.n_filters = alphas.size();
    m.n_samples = trace.size();
    m.data.resize(m.n_filters * m.n_samples);
    for (std::size_t j = 0; j < m.n_filters; ++j) {
        EmaState state(alphas[j], y0);
        double* row = m.data.data() + j * m.n_samples;
        const double a = state.alpha;
        const double b = 1.0 - a;
        double y = state.y;
        for (std::size_t i = 0; i < m.n_samples; ++i) {
            y = a * static_cast<double>(trace.outcomes[i]) + b * y;
            row[i] = y;
        }
    }
    return m;
}

double combine(std::span<const double> bank_outputs, std::span<const double> lambdas) {
    if (bank_outputs.size() != lambdas.size())
        throw ParseError("combine: length mismatch (" +
                         std::to_string(bank_outputs.size()) + " outputs vs " +
                         std::to_string(lambdas.size()) + " lambdas)");
    double acc = 0.0;
    for (std::size_t j = 0; j < lambdas.size(); ++j)
        acc += lambdas[j] * bank_outputs[j];
    return acc;
}

void ElcModel::validate() const {
    if (alphas.empty() || alphas.size() != lambdas.size())
        throw ParseError("model must have equal, non-zero numbers of alphas and lambdas");
    std::set<double> seen;
    for (double a : alphas) {
        if (!(a > 0.0 && a <= 1.0))
            throw ParseError("model alpha out of (0,1]: " + std::to_string(a));
        if (!seen.insert(a).second)
            throw ParseError("duplicate alpha in model: " + std::to_string(a));
    }
    double sum = 0.0;
    for (double l : lambdas) {
        if (!(l >= 0.0 && l <= 1.0))
            throw ParseError("model lambda out of [0,1]: " + std::to_string(l));
        sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ParseError("model lambdas must sum to 1 (got " + std::to_string(sum) + ")");
    if (!(y0 >= 0.0 && y0 <= 1.0))
        throw ParseError("model y0 out of [0,1]");
}

std::vector<double> predict_series(const ElcModel& model, const OutcomeTrace& trace) {
    model.validate();
    // Single streaming pass over all filters, O(|alphas|) state.
    const std::size_t k = model.alphas.size();
    std::vector<double> y(k, model.y0);
    std::vector<double> out(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double x = static_cast<double>(trace.outcomes[i]);
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            y[j] = model.alphas[j] * x + (1.0 - model.alphas[j]) * y[j];
            acc += model.lambdas[j] * y[j];
        }
        out[i] = acc;
    }
    return out;
}

void save_model(const ElcModel& model, const std::filesystem::path& path) {
    model.validate();
    nlohmann::ordered_json doc;
    doc["format"] = "elc-model";
    doc["version"] = 1;
    doc["alphas"] = model.alphas;
    doc["lambdas"] = model.lambdas;
    doc["y0"] = model.y0;
    doc["provenance"] = model.provenance;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

ElcModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
    ElcModel model;
    try {
        if (doc.value("format", "") != "elc-model")
            throw ParseError(path.string() + ": field \"format\" is not \"elc-model\"");
        if (doc.value("version", 0) != 1)
            throw ParseError(path.string() + ": unsupported \"version\"");
        model.alphas = doc.at("alphas").get<std::vector<double>>();
        model.lambdas = doc.at("lambdas").get<std::vector<double>>();
        model.y0 = doc.at("y0").get<double>();
        if (doc.contains("provenance")) model.provenance = doc["provenance"];
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad model field: " + e.what());
    }
    model.validate();
    return model;
}

}  // namespace fdr
