#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace patwa {

// One (model size, data hours, WER) measurement. data_hours == 0 marks a
// zero-shot benchmark row: it is carried through reports but can never enter
// a fit (the law is defined on log D).
struct ObservationPoint {
    double model_params = 0.0;
    double data_hours = 0.0;
    double wer = 0.0;
    std::string label;
};

inline bool is_benchmark(const ObservationPoint& p) { return p.data_hours <= 0.0; }

// Fitted power law WER = exp(log_a) * M^-alpha * D^-beta with log-space
// residuals per observation, in input order.
struct ScalingFit {
    double log_a = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double r2 = 0.0;
    std::vector<double> residuals;
    std::size_t n_obs = 0;
};

// Ordinary least squares on log WER ~ [1, log M, log D], solved by
// Householder QR. Requires >= 3 points and a full-rank design.
ScalingFit fit_power_law(std::span<const ObservationPoint> points);

double predict_wer(const ScalingFit& fit, double model_params, double data_hours);

// Inverts the law for the training hours that reach target_wer at fixed M.
double required_hours(const ScalingFit& fit, double model_params, double target_wer);

// Inverts the law for the parameter count that reaches target_wer at fixed D.
double required_params(const ScalingFit& fit, double data_hours, double target_wer);

struct GoodnessRow {
    std::string label;
    double model_params = 0.0;
    double data_hours = 0.0;
    double observed = 0.0;
    double predicted = 0.0;
    double abs_error = 0.0;
    double log_residual = 0.0;
};

struct GoodnessReport {
    std::vector<GoodnessRow> rows;
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;
    double r2 = 0.0;
};

GoodnessReport goodness(const ScalingFit& fit, std::span<const ObservationPoint> points);

// Model name -> parameter count, in size order. Defaults to the published
// Whisper family sizes; replaceable from a JSON file.
class ModelCatalog {
public:
    ModelCatalog() = default;
    explicit ModelCatalog(std::vector<std::pair<std::string, double>> entries);

    static ModelCatalog defaults();
    static ModelCatalog load_json(const std::filesystem::path& path);

    void add(const std::string& name, double params);
    std::optional<double> params_for(const std::string& name) const;
    std::optional<std::string> name_for(double params) const;

    const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
    double min_params() const;
    double max_params() const;

private:
    std::vector<std::pair<std::string, double>> entries_; // sorted by params
};

// Observations CSV: header `label,model_params,data_hours,wer`.
std::vector<ObservationPoint> read_observations_csv(const std::filesystem::path& path);
void write_observations_csv(std::span<const ObservationPoint> points, const std::filesystem::path& path);

// Fit JSON round-trip. The file records the coefficients, diagnostics, the
// labels that entered the fit, the benchmark labels that were excluded, and a
// digest of the observations file for provenance.
struct FitDocument {
    ScalingFit fit;
    std::vector<std::string> included_labels;
    std::vector<std::string> benchmark_labels;
    std::string observations_digest; // "sha256:<hex>", empty when unknown
};

std::string fit_document_json(const FitDocument& doc);
void write_fit_json(const FitDocument& doc, const std::filesystem::path& path);
FitDocument read_fit_json(const std::filesystem::path& path);

} // namespace patwa
