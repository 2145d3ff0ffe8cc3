// patwa: corpus bookkeeping, WER scoring and scaling-law analysis for
// low-resource music transcription ASR.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include "patwa/audiofe.hpp"
#include "patwa/errors.hpp"
#include "patwa/fetch.hpp"
#include "patwa/manifest.hpp"
#include "patwa/metrics.hpp"
#include "patwa/report.hpp"
#include "patwa/runlog.hpp"
#include "patwa/scaling.hpp"
#include "patwa/wav.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CliError {
    int code;
    std::string category;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& category, const std::string& message) {
    throw CliError{code, category, message};
}

// Nonzero exits always carry a machine-readable error on stderr, even when
// the command also printed a structured report on stdout.
int fail_soft(int code, const std::string& category, const std::string& message) {
    ordered_json err;
    err["error"] = message;
    err["category"] = category;
    std::cerr << err.dump() << '\n';
    return code;
}

std::string env_cache_dir() {
    const char* v = std::getenv("PATWA_CACHE_DIR");
    return v ? std::string(v) : std::string();
}

// ---------------------------------------------------------------------------
// wer input loading: line-delimited JSON ({"id","text"} per line) or plain
// text (one utterance per line, ids are 1-based line numbers).

std::vector<std::pair<std::string, std::string>> load_utterances(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw patwa::DataError("cannot open '" + path.string() + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t row = 0;
    bool jsonl = path.extension() == ".jsonl" || path.extension() == ".json";
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (jsonl) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const std::exception& e) {
                throw patwa::DataError(path.string() + " row " + std::to_string(row) +
                                       ": malformed JSON: " + e.what());
            }
            if (!j.contains("id") || !j.contains("text")) {
                throw patwa::DataError(path.string() + " row " + std::to_string(row) +
                                       ": expected fields 'id' and 'text'");
            }
            out.emplace_back(j["id"].get<std::string>(), j["text"].get<std::string>());
        } else {
            out.emplace_back(std::to_string(row), line);
        }
    }
    if (out.empty()) throw patwa::DataError("'" + path.string() + "' has no utterances");
    return out;
}

patwa::FitDocument fit_observations(const fs::path& observations_path) {
    std::vector<patwa::ObservationPoint> all = patwa::read_observations_csv(observations_path);
    std::vector<patwa::ObservationPoint> fitted;
    patwa::FitDocument doc;
    for (const auto& p : all) {
        if (patwa::is_benchmark(p)) {
            doc.benchmark_labels.push_back(p.label);
        } else {
            fitted.push_back(p);
        }
    }
    doc.fit = patwa::fit_power_law(fitted);
    for (const auto& p : fitted) doc.included_labels.push_back(p.label);
    doc.observations_digest = "sha256:" + patwa::sha256_hex_file(observations_path);
    return doc;
}

// ---------------------------------------------------------------------------

int cmd_validate(const fs::path& manifest_path, bool check_audio) {
    patwa::Manifest m;
    try {
        m = patwa::parse_manifest(manifest_path);
    } catch (const patwa::ManifestError& e) {
        ordered_json out;
        out["ok"] = false;
        ordered_json issues = ordered_json::array();
        for (const auto& issue : e.issues()) {
            issues.push_back({{"row", issue.row}, {"message", issue.message}});
        }
        out["issues"] = std::move(issues);
        std::cout << out.dump(2) << '\n';
        return fail_soft(2, "data", std::to_string(e.issues().size()) + " invalid manifest rows");
    }

    ordered_json out;
    out["ok"] = true;
    out["records"] = m.records.size();
    out["total_hours"] = patwa::format_hours(patwa::total_hours(m));

    if (check_audio) {
        ordered_json audio = ordered_json::array();
        bool all_pass = true;
        for (const auto& r : m.records) {
            ordered_json row;
            row["id"] = r.id;
            try {
                patwa::AudioValidation v = patwa::validate_audio(r);
                row["pass"] = v.pass;
                row["samples"] = v.sample_count;
                row["expected_samples"] = v.expected_samples;
                row["sample_rate_hz"] = v.sample_rate_hz;
                row["message"] = v.message;
                all_pass = all_pass && v.pass;
            } catch (const patwa::Error& e) {
                row["pass"] = false;
                row["message"] = e.what();
                all_pass = false;
            }
            audio.push_back(std::move(row));
        }
        out["audio"] = std::move(audio);
        out["ok"] = all_pass;
        std::cout << out.dump(2) << '\n';
        return all_pass ? 0 : fail_soft(2, "data", "audio validation failed");
    }

    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_fetch(const fs::path& manifest_path, const fs::path& cache_dir, const fs::path& out_path,
              int timeout_s, int retries, int jobs) {
    patwa::Manifest m = patwa::parse_manifest(manifest_path);
    patwa::FetchOptions options;
    options.cache_dir = cache_dir;
    options.timeout_s = timeout_s;
    options.retries = retries;

    std::vector<patwa::ClipRecord> fetched(m.records.size());
    std::vector<std::string> errors;
    std::mutex err_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= m.records.size()) return;
            try {
                fetched[i] = patwa::fetch_audio(m.records[i], options);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                errors.emplace_back(e.what());
                fetched[i] = m.records[i];
            }
        }
    };
    const int n_threads = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    patwa::Manifest out_manifest;
    out_manifest.schema_version = m.schema_version;
    out_manifest.records = std::move(fetched);
    patwa::write_manifest(out_manifest, out_path);

    ordered_json summary;
    summary["records"] = m.records.size();
    summary["fetched"] = m.records.size() - errors.size();
    summary["failed"] = errors.size();
    summary["manifest"] = out_path.string();
    if (!errors.empty()) {
        std::sort(errors.begin(), errors.end());
        summary["errors"] = errors;
    }
    std::cout << summary.dump(2) << '\n';
    if (!errors.empty()) {
        return fail_soft(2, "data", std::to_string(errors.size()) + " of " +
                                        std::to_string(m.records.size()) + " fetches failed");
    }
    return 0;
}

// Expands a decoder command template: {in}, {out}, {rate}.
std::string expand_decoder_template(std::string tmpl, const std::string& in, const std::string& out,
                                    int rate) {
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all(tmpl, "{in}", in);
    replace_all(tmpl, "{out}", out);
    replace_all(tmpl, "{rate}", std::to_string(rate));
    return tmpl;
}

struct PrepOptions {
    fs::path manifest_path, out_dir, cache_dir;
    int jobs = 1;
    int target_rate = 16000;
    double clip_seconds = 30.0;
    std::string decoder_cmd;
    double subset_hours = 0.0;
    std::uint64_t seed = 0;
    patwa::TrainingConfig training;
};

int cmd_prep(const PrepOptions& opt) {
    patwa::Manifest m = patwa::parse_manifest(opt.manifest_path);
    fs::create_directories(opt.out_dir);
    if (opt.subset_hours > 0.0) {
        m = patwa::subset_by_hours(m, {opt.subset_hours, opt.seed});
        patwa::write_manifest(m, opt.out_dir / "subset.jsonl");
    }

    patwa::emit_training_config(opt.training, opt.out_dir / "training_config.toml");

    std::vector<ordered_json> index(m.records.size());
    std::vector<std::string> errors;
    std::mutex err_mutex;
    std::atomic<std::size_t> next{0};

    auto resolve_input = [&](const patwa::ClipRecord& r) -> fs::path {
        if (r.local_path && fs::exists(*r.local_path)) return *r.local_path;
        if (!opt.cache_dir.empty()) {
            fs::path cached = patwa::cache_path_for(r, opt.cache_dir);
            if (fs::exists(cached)) return cached;
        }
        throw patwa::DataError("record '" + r.id + "' has no local audio; run fetch first");
    };

    auto process_one = [&](const patwa::ClipRecord& r, std::size_t i) {
        fs::path in_path = resolve_input(r);
        fs::path wav_path = in_path;
        fs::path temp_wav;
        if (in_path.extension() != ".wav") {
            if (opt.decoder_cmd.empty()) {
                throw patwa::DataError("record '" + r.id + "': input '" + in_path.string() +
                                       "' is not WAV and no --decoder-cmd is configured");
            }
            temp_wav = opt.out_dir / (in_path.stem().string() + ".decoded.wav");
            const std::string cmd = expand_decoder_template(opt.decoder_cmd, in_path.string(),
                                                            temp_wav.string(), r.sample_rate_hz);
            const int rc = std::system(cmd.c_str());
            if (rc != 0 || !fs::exists(temp_wav)) {
                throw patwa::DataError("record '" + r.id + "': decoder command failed: " + cmd);
            }
            wav_path = temp_wav;
        }

        patwa::AudioBuffer audio = patwa::read_wav(wav_path);
        if (!temp_wav.empty()) fs::remove(temp_wav);
        audio = patwa::resample(audio, opt.target_rate);
        audio = patwa::pad_or_trim(audio, opt.clip_seconds);
        patwa::FrontEndConfig cfg;
        cfg.expected_rate_hz = opt.target_rate;
        patwa::LogMelFeature feature = patwa::log_mel(audio, cfg);
        const fs::path feature_path = opt.out_dir / (r.id + ".mel");
        patwa::write_feature_file(feature, feature_path, cfg.hop);

        ordered_json entry;
        entry["id"] = r.id;
        entry["feature_path"] = feature_path.string();
        entry["frames"] = feature.frames;
        entry["n_mels"] = feature.n_mels;
        entry["transcript"] = r.transcript;
        index[i] = std::move(entry);
    };

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= m.records.size()) return;
            try {
                process_one(m.records[i], i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(err_mutex);
                errors.emplace_back(e.what());
            }
        }
    };
    const int n_threads = std::max(1, opt.jobs);
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    {
        std::ofstream fi(opt.out_dir / "features.jsonl");
        for (const auto& entry : index) {
            if (!entry.is_null()) fi << entry.dump() << '\n';
        }
    }

    ordered_json summary;
    summary["records"] = m.records.size();
    summary["prepared"] = m.records.size() - errors.size();
    summary["failed"] = errors.size();
    summary["out_dir"] = opt.out_dir.string();
    summary["total_hours"] = patwa::format_hours(patwa::total_hours(m));
    if (!errors.empty()) {
        std::sort(errors.begin(), errors.end());
        summary["errors"] = errors;
    }
    std::cout << summary.dump(2) << '\n';
    if (!errors.empty()) {
        return fail_soft(2, "data", std::to_string(errors.size()) + " of " +
                                        std::to_string(m.records.size()) + " clips failed to prep");
    }
    return 0;
}

int cmd_wer(const fs::path& hyp_path, const fs::path& ref_path, const std::string& mode_name,
            const std::string& agg_name, const std::string& csv_out, const std::string& json_out) {
    const patwa::WerMode mode =
        mode_name == "positional" ? patwa::WerMode::positional : patwa::WerMode::levenshtein;
    const patwa::Aggregation agg =
        agg_name == "mean" ? patwa::Aggregation::mean_per_utterance : patwa::Aggregation::pooled;

    auto hyps = load_utterances(hyp_path);
    auto refs = load_utterances(ref_path);

    std::map<std::string, std::string> hyp_by_id(hyps.begin(), hyps.end());
    std::vector<std::string> ids;
    std::vector<std::pair<patwa::TokenSeq, patwa::TokenSeq>> pairs;
    for (const auto& [id, ref_text] : refs) {
        auto it = hyp_by_id.find(id);
        if (it == hyp_by_id.end()) {
            throw patwa::DataError("no hypothesis for id '" + id + "'");
        }
        ids.push_back(id);
        pairs.emplace_back(patwa::tokenize(it->second), patwa::tokenize(ref_text));
    }

    patwa::CorpusWer corpus = patwa::corpus_wer(pairs, mode);

    if (!csv_out.empty()) {
        std::ostringstream csv;
        csv << "id,substitutions,deletions,insertions,n_ref,wer\n";
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const patwa::WerBreakdown& b = corpus.per_pair[i];
            csv << ids[i] << ',' << b.substitutions << ',' << b.deletions << ',' << b.insertions
                << ',' << b.n_ref << ',' << ordered_json(b.wer).dump() << '\n';
        }
        if (csv_out == "-") {
            std::cout << csv.str();
        } else {
            std::ofstream out(csv_out);
            if (!out) throw patwa::DataError("cannot write '" + csv_out + "'");
            out << csv.str();
        }
    }

    ordered_json summary;
    summary["mode"] = patwa::wer_mode_name(mode);
    summary["aggregation"] = agg_name;
    summary["wer"] = corpus.value(agg);
    summary["pooled"] = corpus.pooled;
    summary["mean_per_utterance"] = corpus.mean_per_utterance;
    summary["substitutions"] = corpus.totals.substitutions;
    summary["deletions"] = corpus.totals.deletions;
    summary["insertions"] = corpus.totals.insertions;
    summary["n_ref"] = corpus.totals.n_ref;
    summary["utterances"] = ids.size();
    const std::string summary_text = summary.dump(2) + "\n";
    if (!json_out.empty()) {
        std::ofstream out(json_out);
        if (!out) throw patwa::DataError("cannot write '" + json_out + "'");
        out << summary_text;
    }
    if (csv_out != "-") std::cout << summary_text;
    return 0;
}

int cmd_fit(const fs::path& observations_path, const std::string& out_path) {
    patwa::FitDocument doc = fit_observations(observations_path);
    if (!out_path.empty()) {
        patwa::write_fit_json(doc, out_path);
    }
    std::cout << patwa::fit_document_json(doc);
    return 0;
}

int cmd_predict(const fs::path& fit_path, double params, double hours) {
    patwa::FitDocument doc = patwa::read_fit_json(fit_path);
    const double wer = patwa::predict_wer(doc.fit, params, hours);
    std::cout << ordered_json(wer).dump() << '\n';
    return 0;
}

int cmd_plan(const fs::path& fit_path, double params, double hours, double target_wer) {
    patwa::FitDocument doc = patwa::read_fit_json(fit_path);
    ordered_json out;
    if (params > 0.0) {
        out["required_hours"] = patwa::required_hours(doc.fit, params, target_wer);
    } else {
        out["required_params"] = patwa::required_params(doc.fit, hours, target_wer);
    }
    out["target_wer"] = target_wer;
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_report(const fs::path& fit_path, const fs::path& observations_path, const fs::path& out_dir,
               const std::string& catalog_path, double sweep_min, double sweep_max, int sweep_points,
               const std::vector<double>& sweep_hours) {
    patwa::FitDocument doc = patwa::read_fit_json(fit_path);
    std::vector<patwa::ObservationPoint> observations = patwa::read_observations_csv(observations_path);
    patwa::ModelCatalog catalog =
        catalog_path.empty() ? patwa::ModelCatalog::defaults() : patwa::ModelCatalog::load_json(catalog_path);

    patwa::SweepSpec sweep;
    sweep.min_params = sweep_min;
    sweep.max_params = sweep_max;
    sweep.points = sweep_points;
    sweep.hours = sweep_hours;

    patwa::ReportBundle bundle = patwa::build_report(observations, doc, catalog, sweep);
    patwa::write_report(bundle, out_dir);

    ordered_json summary;
    summary["out_dir"] = out_dir.string();
    summary["grid_cells"] = bundle.grid.size();
    summary["benchmarks"] = bundle.benchmarks.size();
    summary["sweep_points"] = bundle.sweep.size();
    summary["files"] = {"grid.csv", "cells.csv", "sweep.csv", "report.json", "sweep.svg"};
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_runs(const std::vector<std::string>& log_paths, const std::string& out_observations,
             const std::string& out_curves) {
    std::vector<patwa::TrainingRun> runs;
    for (const auto& p : log_paths) runs.push_back(patwa::parse_runlog(p));

    std::vector<patwa::ObservationPoint> points;
    for (const auto& run : runs) points.push_back(patwa::best_wer(run));

    if (!out_observations.empty()) {
        patwa::write_observations_csv(points, out_observations);
    }
    if (!out_curves.empty()) {
        const std::vector<patwa::CurveRow> rows = patwa::curve_export(runs);
        patwa::write_curves_csv(rows, out_curves);
    }

    ordered_json summary;
    summary["runs"] = runs.size();
    ordered_json best = ordered_json::array();
    for (const auto& p : points) {
        best.push_back({{"label", p.label},
                        {"model_params", p.model_params},
                        {"data_hours", p.data_hours},
                        {"best_wer", p.wer}});
    }
    summary["best"] = std::move(best);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"patwa: ASR evaluation and scaling-law toolkit for Patois music transcription"};
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "Parse and validate a corpus manifest");
    std::string v_manifest;
    bool v_audio = false;
    validate->add_option("--manifest", v_manifest, "Manifest path (JSONL)")->required();
    validate->add_flag("--audio", v_audio, "Also decode and check local audio files");

    // fetch
    auto* fetch = app.add_subcommand("fetch", "Download clip audio into the cache");
    std::string f_manifest, f_cache = env_cache_dir(), f_out;
    int f_timeout = 30, f_retries = 3, f_jobs = 4;
    fetch->add_option("--manifest", f_manifest, "Manifest path")->required();
    fetch->add_option("--cache", f_cache, "Cache directory (default $PATWA_CACHE_DIR)");
    fetch->add_option("--out", f_out, "Updated manifest output path (default <cache>/manifest.jsonl)");
    fetch->add_option("--timeout", f_timeout, "Per-request timeout, seconds");
    fetch->add_option("--retries", f_retries, "Retry attempts after the first try");
    fetch->add_option("--jobs", f_jobs, "Concurrent downloads");

    // prep
    auto* prep = app.add_subcommand("prep", "Extract log-mel features and a training config");
    PrepOptions p_opt;
    std::string p_manifest, p_out, p_cache = env_cache_dir();
    prep->add_option("--manifest", p_manifest, "Manifest path")->required();
    prep->add_option("--out", p_out, "Output directory")->required();
    prep->add_option("--cache", p_cache, "Cache directory to resolve audio from");
    prep->add_option("--jobs", p_opt.jobs, "Worker threads");
    prep->add_option("--target-rate", p_opt.target_rate, "Feature sample rate (Hz)");
    prep->add_option("--clip-seconds", p_opt.clip_seconds, "Fixed analysis window length");
    prep->add_option("--decoder-cmd", p_opt.decoder_cmd,
                     "External decoder template for non-WAV input ({in}, {out}, {rate})");
    prep->add_option("--subset-hours", p_opt.subset_hours, "Prep a seeded subset of this many hours");
    prep->add_option("--seed", p_opt.seed, "Subset selection seed");
    prep->add_option("--lr", p_opt.training.initial_lr, "Training config: initial learning rate");
    prep->add_option("--warmup-steps", p_opt.training.warmup_steps, "Training config: warmup steps");
    prep->add_option("--total-steps", p_opt.training.total_steps, "Training config: total steps");
    prep->add_option("--optimizer", p_opt.training.optimizer_name, "Training config: optimizer");
    prep->add_option("--scheduler", p_opt.training.scheduler, "Training config: LR scheduler");

    // wer
    auto* wer = app.add_subcommand("wer", "Score hypothesis transcripts against references");
    std::string w_hyp, w_ref, w_mode = "levenshtein", w_agg = "pooled", w_csv, w_json;
    wer->add_option("--hyp", w_hyp, "Hypothesis file (.jsonl with id/text, or plain text)")->required();
    wer->add_option("--ref", w_ref, "Reference file")->required();
    wer->add_option("--mode", w_mode, "Scoring mode")->check(CLI::IsMember({"positional", "levenshtein"}));
    wer->add_option("--agg", w_agg, "Headline aggregation")->check(CLI::IsMember({"pooled", "mean"}));
    wer->add_option("--csv", w_csv, "Per-utterance CSV output path ('-' for stdout)");
    wer->add_option("--json", w_json, "Summary JSON output path");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit the WER power law to observations");
    std::string t_observations, t_out;
    fit->add_option("--observations", t_observations, "Observations CSV")->required();
    fit->add_option("--out", t_out, "Fit JSON output path");

    // predict
    auto* predict = app.add_subcommand("predict", "Predict WER for a model size and data hours");
    std::string pr_fit;
    double pr_params = 0.0, pr_hours = 0.0;
    predict->add_option("--fit", pr_fit, "Fit JSON path")->required();
    predict->add_option("--params", pr_params, "Model parameter count")->required();
    predict->add_option("--hours", pr_hours, "Training data hours")->required();

    // plan
    auto* plan = app.add_subcommand("plan", "Invert the law for required hours or model size");
    std::string pl_fit;
    double pl_params = 0.0, pl_hours = 0.0, pl_target = 0.0;
    plan->add_option("--fit", pl_fit, "Fit JSON path")->required();
    plan->add_option("--params", pl_params, "Fixed model parameter count (solve for hours)");
    plan->add_option("--hours", pl_hours, "Fixed data hours (solve for model size)");
    plan->add_option("--target-wer", pl_target, "Target WER")->required();

    // report
    auto* report = app.add_subcommand("report", "Emit observed/predicted grids and sweep charts");
    std::string r_fit, r_observations, r_out, r_catalog;
    double r_sweep_min = 0.0, r_sweep_max = 0.0;
    int r_sweep_points = 50;
    std::vector<double> r_sweep_hours;
    report->add_option("--fit", r_fit, "Fit JSON path")->required();
    report->add_option("--observations", r_observations, "Observations CSV")->required();
    report->add_option("--out", r_out, "Output directory")->required();
    report->add_option("--catalog", r_catalog, "Model catalog JSON (name -> params)");
    report->add_option("--sweep-min-params", r_sweep_min, "Sweep lower bound (default catalog min)");
    report->add_option("--sweep-max-params", r_sweep_max, "Sweep upper bound (default catalog max)");
    report->add_option("--sweep-points", r_sweep_points, "Log-spaced sweep points per series");
    report->add_option("--sweep-hours", r_sweep_hours, "Hours values to sweep (default observed)")
        ->delimiter(',');

    // runs
    auto* runs = app.add_subcommand("runs", "Ingest training run logs; extract best-WER observations");
    std::vector<std::string> u_logs;
    std::string u_out_obs, u_out_curves;
    runs->add_option("--log", u_logs, "Run log path (repeatable)")->required();
    runs->add_option("--out-observations", u_out_obs, "Write best-WER observations CSV");
    runs->add_option("--out-curves", u_out_curves, "Write long-format curve CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        ordered_json err;
        err["error"] = e.what();
        err["category"] = "usage";
        std::cerr << err.dump() << '\n';
        return 1;
    }

    try {
        try {
            if (*validate) return cmd_validate(v_manifest, v_audio);
            if (*fetch) {
                if (f_cache.empty()) {
                    fail(1, "usage", "no cache directory: pass --cache or set PATWA_CACHE_DIR");
                }
                fs::path out = f_out.empty() ? fs::path(f_cache) / "manifest.jsonl" : fs::path(f_out);
                return cmd_fetch(f_manifest, f_cache, out, f_timeout, f_retries, f_jobs);
            }
            if (*prep) {
                p_opt.manifest_path = p_manifest;
                p_opt.out_dir = p_out;
                p_opt.cache_dir = p_cache;
                return cmd_prep(p_opt);
            }
            if (*wer) return cmd_wer(w_hyp, w_ref, w_mode, w_agg, w_csv, w_json);
            if (*fit) return cmd_fit(t_observations, t_out);
            if (*predict) return cmd_predict(pr_fit, pr_params, pr_hours);
            if (*plan) {
                const bool has_params = pl_params != 0.0, has_hours = pl_hours != 0.0;
                if (has_params == has_hours) {
                    fail(1, "usage", "pass exactly one of --params or --hours");
                }
                if (!(pl_target > 0.0)) fail(1, "usage", "target must be positive");
                return cmd_plan(pl_fit, pl_params, pl_hours, pl_target);
            }
            if (*report) {
                return cmd_report(r_fit, r_observations, r_out, r_catalog, r_sweep_min, r_sweep_max,
                                  r_sweep_points, r_sweep_hours);
            }
            if (*runs) return cmd_runs(u_logs, u_out_obs, u_out_curves);
            fail(1, "usage", "unknown subcommand");
        } catch (const patwa::Error& e) {
            fail(e.exit_code(), patwa::category_name(e.category()), e.what());
        } catch (const std::exception& e) {
            fail(2, "data", e.what());
        }
    } catch (const CliError& e) {
        ordered_json err;
        err["error"] = e.message;
        err["category"] = e.category;
        std::cerr << err.dump() << '\n';
        return e.code;
    }
    return 0;
}
