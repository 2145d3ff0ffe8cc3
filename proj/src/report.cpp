#include "patwa/report.hpp"

#include "patwa/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace patwa {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) { return ordered_json(v).dump(); }

// Fixed-precision helper for SVG coordinates.
std::string coord(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

} // namespace

ReportBundle build_report(std::span<const ObservationPoint> observations, const FitDocument& fit_doc,
                          const ModelCatalog& catalog, const SweepSpec& sweep) {
    ReportBundle bundle;
    bundle.fit_doc = fit_doc;

    std::vector<ObservationPoint> fitted;
    for (const ObservationPoint& p : observations) {
        if (is_benchmark(p)) {
            bundle.benchmarks.push_back({p.label, p.model_params, p.wer});
        } else {
            fitted.push_back(p);
        }
    }
    if (fitted.empty()) throw DataError("report: no non-benchmark observations");

    // Distinct hours and models, models ordered by parameter count.
    std::set<double> hours_set;
    std::map<std::string, double> model_params;
    for (const ObservationPoint& p : fitted) {
        hours_set.insert(p.data_hours);
        auto it = model_params.find(p.label);
        if (it != model_params.end() && it->second != p.model_params) {
            throw DataError("report: label '" + p.label + "' appears with conflicting parameter counts");
        }
        model_params[p.label] = p.model_params;
    }

    std::vector<std::pair<std::string, double>> models(model_params.begin(), model_params.end());
    // Catalog models with no observations become predicted-only extrapolation columns.
    for (const auto& [name, params] : catalog.entries()) {
        if (!model_params.contains(name)) models.emplace_back(name, params);
    }
    std::sort(models.begin(), models.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });

    for (double h : hours_set) {
        for (const auto& [name, params] : models) {
            GridCell cell;
            cell.model = name;
            cell.model_params = params;
            cell.hours = h;
            for (const ObservationPoint& p : fitted) {
                if (p.label == name && p.data_hours == h) {
                    cell.observed = p.wer;
                    break;
                }
            }
            cell.predicted = predict_wer(fit_doc.fit, params, h);
            cell.extrapolation = !cell.observed.has_value();
            bundle.grid.push_back(std::move(cell));
        }
    }

    SweepSpec spec = sweep;
    if (spec.min_params <= 0.0) spec.min_params = catalog.min_params();
    if (spec.max_params <= 0.0) spec.max_params = catalog.max_params();
    if (spec.hours.empty()) spec.hours.assign(hours_set.begin(), hours_set.end());
    if (spec.points < 2) throw UsageError("sweep needs at least 2 points");
    if (!(spec.min_params > 0.0) || !(spec.max_params > spec.min_params)) {
        throw UsageError("sweep parameter range must be positive and increasing");
    }

    const double log_lo = std::log(spec.min_params);
    const double log_hi = std::log(spec.max_params);
    for (double h : spec.hours) {
        for (int i = 0; i < spec.points; ++i) {
            // Endpoints are pinned exactly; exp/log would smear them.
            double m = spec.min_params;
            if (i == spec.points - 1) {
                m = spec.max_params;
            } else if (i > 0) {
                m = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / (spec.points - 1));
            }
            bundle.sweep.push_back({h, m, predict_wer(fit_doc.fit, m, h)});
        }
    }
    return bundle;
}

void write_report(const ReportBundle& bundle, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    // Wide grid, one row per hours value, observed and predicted side by side.
    {
        std::set<double> hours;
        std::vector<std::pair<std::string, double>> models;
        for (const GridCell& c : bundle.grid) {
            hours.insert(c.hours);
            if (std::none_of(models.begin(), models.end(),
                             [&](const auto& m) { return m.first == c.model; })) {
                models.emplace_back(c.model, c.model_params);
            }
        }
        std::sort(models.begin(), models.end(),
                  [](const auto& a, const auto& b) { return a.second < b.second; });

        std::ofstream out(out_dir / "grid.csv");
        if (!out) throw DataError("cannot write grid.csv");
        out << "hours";
        for (const auto& [name, params] : models) {
            out << ',' << name << "_observed," << name << "_predicted";
        }
        out << '\n';
        for (double h : hours) {
            out << fmt(h);
            for (const auto& [name, params] : models) {
                const GridCell* cell = nullptr;
                for (const GridCell& c : bundle.grid) {
                    if (c.model == name && c.hours == h) {
                        cell = &c;
                        break;
                    }
                }
                out << ',';
                if (cell && cell->observed) out << fmt(*cell->observed);
                out << ',';
                if (cell) out << fmt(cell->predicted);
            }
            out << '\n';
        }
    }

    // Long form: every number with its provenance.
    {
        std::ofstream out(out_dir / "cells.csv");
        if (!out) throw DataError("cannot write cells.csv");
        out << "model,model_params,hours,wer,provenance\n";
        for (const GridCell& c : bundle.grid) {
            if (c.observed) {
                out << c.model << ',' << fmt(c.model_params) << ',' << fmt(c.hours) << ','
                    << fmt(*c.observed) << ",observed\n";
            }
            out << c.model << ',' << fmt(c.model_params) << ',' << fmt(c.hours) << ','
                << fmt(c.predicted) << (c.extrapolation ? ",predicted-extrapolation\n" : ",predicted\n");
        }
        for (const BenchmarkRow& b : bundle.benchmarks) {
            out << b.label << ',' << fmt(b.model_params) << ",0," << fmt(b.wer) << ",benchmark\n";
        }
    }

    {
        std::ofstream out(out_dir / "sweep.csv");
        if (!out) throw DataError("cannot write sweep.csv");
        out << "hours,model_params,predicted_wer\n";
        for (const SweepPoint& p : bundle.sweep) {
            out << fmt(p.hours) << ',' << fmt(p.model_params) << ',' << fmt(p.predicted) << '\n';
        }
    }

    {
        ordered_json j;
        j["fit"] = ordered_json::parse(fit_document_json(bundle.fit_doc));
        ordered_json cells = ordered_json::array();
        for (const GridCell& c : bundle.grid) {
            ordered_json cj;
            cj["model"] = c.model;
            cj["model_params"] = c.model_params;
            cj["hours"] = c.hours;
            if (c.observed) cj["observed"] = *c.observed;
            cj["predicted"] = c.predicted;
            cj["provenance"] = c.extrapolation ? "predicted-extrapolation" : "observed+predicted";
            cells.push_back(std::move(cj));
        }
        j["cells"] = std::move(cells);
        ordered_json benches = ordered_json::array();
        for (const BenchmarkRow& b : bundle.benchmarks) {
            ordered_json bj;
            bj["label"] = b.label;
            bj["model_params"] = b.model_params;
            bj["wer"] = b.wer;
            bj["provenance"] = "benchmark";
            benches.push_back(std::move(bj));
        }
        j["benchmarks"] = std::move(benches);
        std::ofstream out(out_dir / "report.json");
        if (!out) throw DataError("cannot write report.json");
        out << j.dump(2) << '\n';
    }

    {
        std::ofstream out(out_dir / "sweep.svg");
        if (!out) throw DataError("cannot write sweep.svg");
        out << render_sweep_svg(bundle);
    }
}

std::string render_sweep_svg(const ReportBundle& bundle) {
    const double width = 720, height = 480;
    const double ml = 70, mr = 160, mt = 40, mb = 60; // margins
    const double pw = width - ml - mr, ph = height - mt - mb;

    double min_m = std::numeric_limits<double>::infinity(), max_m = 0.0, max_w = 0.0;
    for (const SweepPoint& p : bundle.sweep) {
        min_m = std::min(min_m, p.model_params);
        max_m = std::max(max_m, p.model_params);
        max_w = std::max(max_w, p.predicted);
    }
    for (const GridCell& c : bundle.grid) {
        if (c.observed) max_w = std::max(max_w, *c.observed);
    }
    for (const BenchmarkRow& b : bundle.benchmarks) {
        min_m = std::min(min_m, b.model_params);
        max_m = std::max(max_m, b.model_params);
        max_w = std::max(max_w, b.wer);
    }
    if (!(min_m > 0.0) || bundle.sweep.empty()) {
        throw DataError("sweep chart needs at least one sweep point");
    }
    max_w *= 1.1;

    const double lx0 = std::log10(min_m), lx1 = std::log10(max_m);
    auto x_of = [&](double m) { return ml + (std::log10(m) - lx0) / (lx1 - lx0) * pw; };
    auto y_of = [&](double w) { return mt + (1.0 - w / max_w) * ph; };

    std::set<double> hours;
    for (const SweepPoint& p : bundle.sweep) hours.insert(p.hours);
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
        << "Predicted WER vs model size</text>\n";

    // Axes.
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";

    // Decade ticks on x.
    for (int e = static_cast<int>(std::floor(lx0)); e <= static_cast<int>(std::ceil(lx1)); ++e) {
        const double m = std::pow(10.0, e);
        if (m < min_m * 0.999 || m > max_m * 1.001) continue;
        const double x = x_of(m);
        svg << "<line x1=\"" << coord(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << coord(x)
            << "\" y2=\"" << mt + ph + 6 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << coord(x) << "\" y=\"" << mt + ph + 22
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e" << e
            << "</text>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 16
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">model parameters (log scale)</text>\n";

    // y ticks every 0.2.
    for (double w = 0.0; w <= max_w + 1e-9; w += 0.2) {
        const double y = y_of(w);
        svg << "<line x1=\"" << ml - 6 << "\" y1=\"" << coord(y) << "\" x2=\"" << ml << "\" y2=\""
            << coord(y) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << ml - 10 << "\" y=\"" << coord(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << coord(w)
            << "</text>\n";
    }
    svg << "<text x=\"18\" y=\"" << mt + ph / 2
        << "\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " << mt + ph / 2
        << ")\" text-anchor=\"middle\">WER</text>\n";

    int color_idx = 0;
    double legend_y = mt + 10;
    for (double h : hours) {
        const char* color = palette[color_idx % 7];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const SweepPoint& p : bundle.sweep) {
            if (p.hours != h) continue;
            svg << coord(x_of(p.model_params)) << ',' << coord(y_of(p.predicted)) << ' ';
        }
        svg << "\"/>\n";
        svg << "<rect x=\"" << ml + pw + 14 << "\" y=\"" << coord(legend_y - 8)
            << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        svg << "<text x=\"" << ml + pw + 32 << "\" y=\"" << coord(legend_y + 2)
            << "\" font-family=\"sans-serif\" font-size=\"12\">predicted, " << fmt(h) << " h</text>\n";
        legend_y += 20;
        ++color_idx;
    }

    for (const GridCell& c : bundle.grid) {
        if (!c.observed) continue;
        svg << "<circle cx=\"" << coord(x_of(c.model_params)) << "\" cy=\"" << coord(y_of(*c.observed))
            << "\" r=\"3.5\" fill=\"black\"/>\n";
    }
    if (std::any_of(bundle.grid.begin(), bundle.grid.end(),
                    [](const GridCell& c) { return c.observed.has_value(); })) {
        svg << "<circle cx=\"" << ml + pw + 20 << "\" cy=\"" << coord(legend_y - 4)
            << "\" r=\"3.5\" fill=\"black\"/>\n";
        svg << "<text x=\"" << ml + pw + 32 << "\" y=\"" << coord(legend_y)
            << "\" font-family=\"sans-serif\" font-size=\"12\">observed</text>\n";
        legend_y += 20;
    }

    for (const BenchmarkRow& b : bundle.benchmarks) {
        const double x = x_of(b.model_params), y = y_of(b.wer);
        svg << "<rect x=\"" << coord(x - 4) << "\" y=\"" << coord(y - 4)
            << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
        svg << "<text x=\"" << coord(x + 8) << "\" y=\"" << coord(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << b.label << " (benchmark)</text>\n";
    }

    svg << "</svg>\n";
    return svg.str();
}

} // namespace patwa
