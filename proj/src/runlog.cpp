#include "patwa/runlog.hpp"

#include "patwa/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace patwa {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double_field(const std::string& value, std::size_t row, const std::string& what,
                          const std::string& name) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError(name + " row " + std::to_string(row) + ": malformed " + what + " '" + value + "'");
    }
}

} // namespace

TrainingRun parse_runlog(std::istream& in, const std::string& name) {
    TrainingRun run;
    bool saw_header = false;
    bool saw_label = false, saw_params = false, saw_hours = false;
    std::string line;
    std::size_t row = 0;

    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string meta = trim(line.substr(1));
            std::size_t eq = meta.find('=');
            if (eq == std::string::npos) {
                throw DataError(name + " row " + std::to_string(row) + ": metadata line without '='");
            }
            std::string key = trim(meta.substr(0, eq));
            std::string value = trim(meta.substr(eq + 1));
            if (key == "model_label") {
                run.model_label = value;
                saw_label = true;
            } else if (key == "model_params") {
                run.model_params = parse_double_field(value, row, "model_params", name);
                saw_params = true;
            } else if (key == "data_hours") {
                run.data_hours = parse_double_field(value, row, "data_hours", name);
                saw_hours = true;
            }
            // Unknown metadata keys are preserved-by-ignoring; converters may add their own.
            continue;
        }
        if (!saw_header) {
            if (line != "step,loss,wer") {
                throw DataError(name + " row " + std::to_string(row) +
                                ": expected column header 'step,loss,wer', got '" + line + "'");
            }
            saw_header = true;
            continue;
        }

        std::stringstream ss(line);
        std::string step_s, loss_s, wer_s;
        if (!std::getline(ss, step_s, ',') || !std::getline(ss, loss_s, ',') || !std::getline(ss, wer_s)) {
            throw DataError(name + " row " + std::to_string(row) + ": expected 'step,loss,wer' fields");
        }
        RunSample sample;
        double step_v = parse_double_field(trim(step_s), row, "step", name);
        sample.step = static_cast<std::int64_t>(step_v);
        if (static_cast<double>(sample.step) != step_v || sample.step < 0) {
            throw DataError(name + " row " + std::to_string(row) + ": step must be a non-negative integer");
        }
        std::string loss_t = trim(loss_s);
        if (!loss_t.empty()) {
            sample.loss = parse_double_field(loss_t, row, "loss", name);
        }
        sample.wer = parse_double_field(trim(wer_s), row, "wer", name);
        if (!(sample.wer > 0.0)) {
            throw DataError(name + " row " + std::to_string(row) + ": wer must be positive");
        }
        if (!run.samples.empty() && sample.step <= run.samples.back().step) {
            throw DataError(name + " row " + std::to_string(row) + ": non-monotone steps (" +
                            std::to_string(run.samples.back().step) + " then " +
                            std::to_string(sample.step) + ")");
        }
        run.samples.push_back(sample);
    }

    if (!saw_header) {
        throw DataError(name + ": missing 'step,loss,wer' column header");
    }
    if (!saw_label || !saw_params || !saw_hours) {
        throw DataError(name + ": missing metadata header (# model_label=, # model_params=, # data_hours=)");
    }
    if (run.samples.empty()) {
        throw DataError(name + ": empty run log body");
    }
    return run;
}

TrainingRun parse_runlog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run log '" + path.string() + "'");
    return parse_runlog(in, path.string());
}

void serialize_runlog(const TrainingRun& run, std::ostream& out) {
    out << "# model_label=" << run.model_label << '\n';
    out << "# model_params=" << ordered_json(run.model_params).dump() << '\n';
    out << "# data_hours=" << ordered_json(run.data_hours).dump() << '\n';
    out << "step,loss,wer\n";
    for (const RunSample& s : run.samples) {
        out << s.step << ',';
        if (s.loss) out << ordered_json(*s.loss).dump();
        out << ',' << ordered_json(s.wer).dump() << '\n';
    }
}

void write_runlog(const TrainingRun& run, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write run log '" + path.string() + "'");
    serialize_runlog(run, out);
}

ObservationPoint best_wer(const TrainingRun& run) {
    if (run.samples.empty()) {
        throw DataError("run '" + run.model_label + "' has no samples");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const RunSample& s : run.samples) best = std::min(best, s.wer);
    ObservationPoint p;
    p.model_params = run.model_params;
    p.data_hours = run.data_hours;
    p.wer = best;
    p.label = run.model_label;
    return p;
}

std::vector<CurveRow> curve_export(std::span<const TrainingRun> runs) {
    std::vector<CurveRow> rows;
    for (const TrainingRun& run : runs) {
        for (const RunSample& s : run.samples) {
            rows.push_back({run.model_label, s.step, s.wer});
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) {
        if (a.model_label != b.model_label) return a.model_label < b.model_label;
        return a.step < b.step;
    });
    return rows;
}

void write_curves_csv(std::span<const CurveRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write curves file '" + path.string() + "'");
    out << "model_label,step,wer\n";
    for (const CurveRow& r : rows) {
        out << r.model_label << ',' << r.step << ',' << ordered_json(r.wer).dump() << '\n';
    }
}

} // namespace patwa
