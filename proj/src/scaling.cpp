#include "patwa/scaling.hpp"

#include "patwa/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace patwa {

namespace {

using ordered_json = nlohmann::ordered_json;

void validate_points(std::span<const ObservationPoint> points) {
    if (points.size() < 3) {
        throw NumericError("insufficient observations: need at least 3 points, got " +
                           std::to_string(points.size()));
    }
    for (const ObservationPoint& p : points) {
        if (!(p.model_params > 0.0) || !(p.data_hours > 0.0) || !(p.wer > 0.0)) {
            throw NumericError("observation '" + p.label +
                               "' is not log-transformable (model_params, data_hours and wer must be positive)");
        }
    }
}

// Least squares for an n x 3 design via Householder QR. Throws on rank
// deficiency. Returns the coefficient vector b with X b ~= y.
std::array<double, 3> qr_solve_3(std::vector<std::array<double, 3>> x, std::vector<double> y) {
    const std::size_t n = x.size();
    const std::size_t cols = 3;
    double col_scale = 0.0;
    for (const auto& row : x)
        for (double v : row) col_scale = std::max(col_scale, std::abs(v));

    for (std::size_t k = 0; k < cols; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) norm += x[i][k] * x[i][k];
        norm = std::sqrt(norm);
        if (norm <= 1e-12 * std::max(1.0, col_scale)) {
            throw NumericError("rank-deficient design: log model size and log data hours do not vary independently");
        }
        double alpha = x[k][k] > 0 ? -norm : norm;
        // Householder vector v = x_k - alpha * e_k, applied as I - 2 v v^T / (v^T v).
        std::vector<double> v(n - k, 0.0);
        v[0] = x[k][k] - alpha;
        for (std::size_t i = k + 1; i < n; ++i) v[i - k] = x[i][k];
        double vtv = 0.0;
        for (double t : v) vtv += t * t;
        if (vtv <= 0.0) continue;
        for (std::size_t j = k; j < cols; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i - k] * x[i][j];
            double f = 2.0 * dot / vtv;
            for (std::size_t i = k; i < n; ++i) x[i][j] -= f * v[i - k];
        }
        double dot = 0.0;
        for (std::size_t i = k; i < n; ++i) dot += v[i - k] * y[i];
        double f = 2.0 * dot / vtv;
        for (std::size_t i = k; i < n; ++i) y[i] -= f * v[i - k];
    }

    std::array<double, 3> b{};
    for (std::size_t kk = cols; kk-- > 0;) {
        double s = y[kk];
        for (std::size_t j = kk + 1; j < cols; ++j) s -= x[kk][j] * b[j];
        double diag = x[kk][kk];
        if (std::abs(diag) <= 1e-12 * std::max(1.0, col_scale)) {
            throw NumericError("rank-deficient design: log model size and log data hours do not vary independently");
        }
        b[kk] = s / diag;
    }
    return b;
}

std::string json_error(const std::string& path, const std::exception& e) {
    return "failed to parse JSON file '" + path + "': " + e.what();
}

} // namespace

ScalingFit fit_power_law(std::span<const ObservationPoint> points) {
    validate_points(points);

    const std::size_t n = points.size();
    std::vector<std::array<double, 3>> design(n);
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        design[i] = {1.0, std::log(points[i].model_params), std::log(points[i].data_hours)};
        target[i] = std::log(points[i].wer);
    }

    std::array<double, 3> b = qr_solve_3(design, target);

    ScalingFit fit;
    fit.log_a = b[0];
    fit.alpha = -b[1];
    fit.beta = -b[2];
    fit.n_obs = n;
    fit.residuals.resize(n);

    double mean_y = 0.0;
    for (double v : target) mean_y += v;
    mean_y /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double predicted_log = fit.log_a - fit.alpha * design[i][1] - fit.beta * design[i][2];
        fit.residuals[i] = target[i] - predicted_log;
        ss_res += fit.residuals[i] * fit.residuals[i];
        ss_tot += (target[i] - mean_y) * (target[i] - mean_y);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.r2 = std::clamp(fit.r2, 0.0, 1.0);
    return fit;
}

double predict_wer(const ScalingFit& fit, double model_params, double data_hours) {
    if (!(model_params > 0.0) || !(data_hours > 0.0)) {
        throw NumericError("model_params and data_hours must be positive");
    }
    return std::exp(fit.log_a - fit.alpha * std::log(model_params) - fit.beta * std::log(data_hours));
}

double required_hours(const ScalingFit& fit, double model_params, double target_wer) {
    if (!(target_wer > 0.0)) throw UsageError("target must be positive");
    if (!(model_params > 0.0)) throw NumericError("model_params must be positive");
    if (!(fit.beta > 0.0)) {
        throw NumericError("law is not invertible in data hours: beta must be positive");
    }
    return std::exp((fit.log_a - fit.alpha * std::log(model_params) - std::log(target_wer)) / fit.beta);
}

double required_params(const ScalingFit& fit, double data_hours, double target_wer) {
    if (!(target_wer > 0.0)) throw UsageError("target must be positive");
    if (!(data_hours > 0.0)) throw NumericError("data_hours must be positive");
    if (!(fit.alpha > 0.0)) {
        throw NumericError("law is not invertible in model size: alpha must be positive");
    }
    return std::exp((fit.log_a - fit.beta * std::log(data_hours) - std::log(target_wer)) / fit.alpha);
}

GoodnessReport goodness(const ScalingFit& fit, std::span<const ObservationPoint> points) {
    GoodnessReport report;
    report.r2 = fit.r2;
    double abs_sum = 0.0;
    for (const ObservationPoint& p : points) {
        GoodnessRow row;
        row.label = p.label;
        row.model_params = p.model_params;
        row.data_hours = p.data_hours;
        row.observed = p.wer;
        row.predicted = predict_wer(fit, p.model_params, p.data_hours);
        row.abs_error = std::abs(row.predicted - row.observed);
        row.log_residual = std::log(p.wer) - std::log(row.predicted);
        report.max_abs_error = std::max(report.max_abs_error, row.abs_error);
        abs_sum += row.abs_error;
        report.rows.push_back(std::move(row));
    }
    if (!report.rows.empty()) {
        report.mean_abs_error = abs_sum / static_cast<double>(report.rows.size());
    }
    return report;
}

ModelCatalog::ModelCatalog(std::vector<std::pair<std::string, double>> entries)
    : entries_(std::move(entries)) {
    for (const auto& [name, params] : entries_) {
        if (!(params > 0.0)) throw DataError("catalog entry '" + name + "' must have positive parameter count");
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (entries_[i].first == entries_[i - 1].first) {
            throw DataError("duplicate catalog entry '" + entries_[i].first + "'");
        }
    }
}

ModelCatalog ModelCatalog::defaults() {
    return ModelCatalog({{"tiny", 39e6},
                         {"base", 74e6},
                         {"small", 244e6},
                         {"medium", 769e6},
                         {"large", 1550e6}});
}

ModelCatalog ModelCatalog::load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open catalog file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError(json_error(path.string(), e));
    }
    std::vector<std::pair<std::string, double>> entries;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_number()) {
            throw DataError("catalog entry '" + it.key() + "' must be a number");
        }
        entries.emplace_back(it.key(), it.value().get<double>());
    }
    return ModelCatalog(std::move(entries));
}

void ModelCatalog::add(const std::string& name, double params) {
    if (!(params > 0.0)) throw DataError("catalog entry '" + name + "' must have positive parameter count");
    for (auto& [n, p] : entries_) {
        if (n == name) {
            p = params;
            std::sort(entries_.begin(), entries_.end(),
                      [](const auto& a, const auto& b) { return a.second < b.second; });
            return;
        }
    }
    entries_.emplace_back(name, params);
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
}

std::optional<double> ModelCatalog::params_for(const std::string& name) const {
    for (const auto& [n, p] : entries_)
        if (n == name) return p;
    return std::nullopt;
}

std::optional<std::string> ModelCatalog::name_for(double params) const {
    for (const auto& [n, p] : entries_)
        if (p == params) return n;
    return std::nullopt;
}

double ModelCatalog::min_params() const {
    if (entries_.empty()) throw DataError("empty model catalog");
    return entries_.front().second;
}

double ModelCatalog::max_params() const {
    if (entries_.empty()) throw DataError("empty model catalog");
    return entries_.back().second;
}

std::vector<ObservationPoint> read_observations_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open observations file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty observations file '" + path.string() + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "label,model_params,data_hours,wer") {
        throw DataError("observations file '" + path.string() +
                        "' must start with header 'label,model_params,data_hours,wer'");
    }

    std::vector<ObservationPoint> points;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string label, m, d, w;
        if (!std::getline(ss, label, ',') || !std::getline(ss, m, ',') ||
            !std::getline(ss, d, ',') || !std::getline(ss, w, ',')) {
            throw DataError("observations row " + std::to_string(row) + ": expected 4 comma-separated fields");
        }
        ObservationPoint p;
        p.label = label;
        try {
            p.model_params = std::stod(m);
            p.data_hours = std::stod(d);
            p.wer = std::stod(w);
        } catch (const std::exception&) {
            throw DataError("observations row " + std::to_string(row) + ": non-numeric field");
        }
        if (!(p.model_params > 0.0) || !(p.wer > 0.0) || p.data_hours < 0.0) {
            throw DataError("observations row " + std::to_string(row) +
                            ": model_params and wer must be positive, data_hours non-negative");
        }
        points.push_back(std::move(p));
    }
    if (points.empty()) throw DataError("observations file '" + path.string() + "' has no data rows");
    return points;
}

void write_observations_csv(std::span<const ObservationPoint> points, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write observations file '" + path.string() + "'");
    out << "label,model_params,data_hours,wer\n";
    for (const ObservationPoint& p : points) {
        ordered_json m = p.model_params, d = p.data_hours, w = p.wer;
        out << p.label << ',' << m.dump() << ',' << d.dump() << ',' << w.dump() << '\n';
    }
}

std::string fit_document_json(const FitDocument& doc) {
    ordered_json j;
    j["log_a"] = doc.fit.log_a;
    j["alpha"] = doc.fit.alpha;
    j["beta"] = doc.fit.beta;
    j["a"] = std::exp(doc.fit.log_a);
    j["r2"] = doc.fit.r2;
    j["n_obs"] = doc.fit.n_obs;
    j["residuals"] = doc.fit.residuals;
    j["included_labels"] = doc.included_labels;
    j["benchmark_labels"] = doc.benchmark_labels;
    j["observations_digest"] = doc.observations_digest;
    return j.dump(2) + "\n";
}

void write_fit_json(const FitDocument& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write fit file '" + path.string() + "'");
    out << fit_document_json(doc);
}

FitDocument read_fit_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fit file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError(json_error(path.string(), e));
    }
    FitDocument doc;
    try {
        doc.fit.log_a = j.at("log_a").get<double>();
        doc.fit.alpha = j.at("alpha").get<double>();
        doc.fit.beta = j.at("beta").get<double>();
        doc.fit.r2 = j.value("r2", 0.0);
        doc.fit.n_obs = j.value("n_obs", std::size_t{0});
        doc.fit.residuals = j.value("residuals", std::vector<double>{});
        doc.included_labels = j.value("included_labels", std::vector<std::string>{});
        doc.benchmark_labels = j.value("benchmark_labels", std::vector<std::string>{});
        doc.observations_digest = j.value("observations_digest", std::string{});
    } catch (const std::exception& e) {
        throw DataError("fit file '" + path.string() + "' is missing required fields: " + e.what());
    }
    return doc;
}

} // namespace patwa
