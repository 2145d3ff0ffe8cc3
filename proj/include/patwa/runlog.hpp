#pragma once

#include "patwa/scaling.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace patwa {

// One evaluated checkpoint of a fine-tuning run.
struct RunSample {
    std::int64_t step = 0;
    std::optional<double> loss;
    double wer = 0.0;
};

// Per-step WER/loss curve for one run, with the (model size, data hours)
// context needed to turn its best checkpoint into a scaling observation.
struct TrainingRun {
    std::string model_label;
    double model_params = 0.0;
    double data_hours = 0.0;
    std::vector<RunSample> samples;
};

// Run log format: `# key=value` metadata lines (model_label, model_params,
// data_hours), a `step,loss,wer` header, then one CSV row per evaluated
// checkpoint. Steps must be strictly increasing; loss may be empty.
TrainingRun parse_runlog(const std::filesystem::path& path);
TrainingRun parse_runlog(std::istream& in, const std::string& name);
void serialize_runlog(const TrainingRun& run, std::ostream& out);
void write_runlog(const TrainingRun& run, const std::filesystem::path& path);

// Minimum WER over all evaluated checkpoints, as an observation point.
ObservationPoint best_wer(const TrainingRun& run);

struct CurveRow {
    std::string model_label;
    std::int64_t step = 0;
    double wer = 0.0;
};

// Long-format (label, step, wer) table ordered by (label, step).
std::vector<CurveRow> curve_export(std::span<const TrainingRun> runs);
void write_curves_csv(std::span<const CurveRow> rows, const std::filesystem::path& path);

} // namespace patwa
