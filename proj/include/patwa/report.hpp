#pragma once

#include "patwa/scaling.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace patwa {

// Number of log-spaced model sizes per sweep series.
struct SweepSpec {
    double min_params = 0.0; // 0 = derive from catalog
    double max_params = 0.0;
    int points = 50;
    std::vector<double> hours; // empty = distinct observed hours
};

struct GridCell {
    std::string model;
    double model_params = 0.0;
    double hours = 0.0;
    std::optional<double> observed;
    double predicted = 0.0;
    bool extrapolation = false; // no observation backs this cell
};

struct BenchmarkRow {
    std::string label;
    double model_params = 0.0;
    double wer = 0.0;
};

struct SweepPoint {
    double hours = 0.0;
    double model_params = 0.0;
    double predicted = 0.0;
};

// Everything a report run produces: the observed/predicted grid, zero-shot
// benchmark rows (never fitted), and the model-size sweep series. Every
// number is attributable to its source.
struct ReportBundle {
    std::vector<GridCell> grid;
    std::vector<BenchmarkRow> benchmarks;
    std::vector<SweepPoint> sweep;
    FitDocument fit_doc;
};

ReportBundle build_report(std::span<const ObservationPoint> observations, const FitDocument& fit_doc,
                          const ModelCatalog& catalog, const SweepSpec& sweep);

// Writes grid.csv (wide, hours x models, observed|predicted side by side),
// cells.csv (long form with provenance), sweep.csv, report.json and
// sweep.svg into out_dir. Outputs are byte-deterministic.
void write_report(const ReportBundle& bundle, const std::filesystem::path& out_dir);

// Self-contained SVG of predicted WER vs model size (log x), one line per
// hours value, observed points and benchmarks overlaid.
std::string render_sweep_svg(const ReportBundle& bundle);

} // namespace patwa
