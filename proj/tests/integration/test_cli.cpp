#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end checks of the patwa binary: exit codes, flag handling and the
// deterministic file outputs of each subcommand.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "patwa/audiofe.hpp"
#include "patwa/manifest.hpp"
#include "patwa/runlog.hpp"
#include "patwa/scaling.hpp"
#include "patwa/wav.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static std::atomic<int> counter{0};
    const int n = counter.fetch_add(1);
    const fs::path out_path = fs::temp_directory_path() / ("patwa_cli_out_" + std::to_string(n));
    const fs::path err_path = fs::temp_directory_path() / ("patwa_cli_err_" + std::to_string(n));
    const std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + PATWA_CLI_PATH + " " +
                            args + " > " + out_path.string() + " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    fs::remove(out_path);
    fs::remove(err_path);
    return result;
}

fs::path fixture_csv() { return fs::path(PATWA_DATA_DIR) / "patois_music_observations.csv"; }

fs::path make_temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_reference_fit(const fs::path& dir) {
    patwa::FitDocument doc;
    doc.fit.log_a = 5.063;
    doc.fit.alpha = 0.255;
    doc.fit.beta = 0.269;
    doc.fit.n_obs = 12;
    const fs::path path = dir / "reference_fit.json";
    patwa::write_fit_json(doc, path);
    return path;
}

} // namespace

TEST_CASE("usage errors exit 1 with JSON on stderr") {
    RunResult unknown = run_cli("frobnicate");
    CHECK(unknown.exit_code == 1);
    CHECK(unknown.err.find("\"category\":\"usage\"") != std::string::npos);

    RunResult missing = run_cli("fit");
    CHECK(missing.exit_code == 1);

    RunResult help = run_cli("--help");
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("validate") != std::string::npos);
}

TEST_CASE("data errors exit 2") {
    RunResult missing_file = run_cli("fit --observations /nonexistent/path.csv");
    CHECK(missing_file.exit_code == 2);
    const nlohmann::json err = nlohmann::json::parse(missing_file.err);
    CHECK(err["category"] == "data");
}

TEST_CASE("numeric failures exit 3") {
    const fs::path dir = make_temp_dir("patwa_cli_numeric");
    {
        std::ofstream obs(dir / "two.csv");
        obs << "label,model_params,data_hours,wer\n"
            << "a,39000000,20,0.79\n"
            << "b,74000000,35,0.6\n";
    }
    RunResult two = run_cli("fit --observations " + (dir / "two.csv").string());
    CHECK(two.exit_code == 3);
    CHECK(two.err.find("insufficient observations") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("fit writes the expected coefficients and provenance") {
    const fs::path dir = make_temp_dir("patwa_cli_fit");
    const fs::path fit_path = dir / "fit.json";
    RunResult fit = run_cli("fit --observations " + fixture_csv().string() + " --out " +
                            fit_path.string());
    REQUIRE(fit.exit_code == 0);

    const nlohmann::json doc = nlohmann::json::parse(slurp(fit_path));
    CHECK(std::abs(doc["alpha"].get<double>() - 0.255) < 0.05);
    CHECK(std::abs(doc["beta"].get<double>() - 0.269) < 0.05);
    CHECK(std::abs(doc["log_a"].get<double>() - 5.063) < 0.7);
    CHECK(doc["n_obs"] == 12);
    CHECK(doc["benchmark_labels"] == nlohmann::json::array({"large"}));
    CHECK(doc["observations_digest"].get<std::string>().rfind("sha256:", 0) == 0);

    // Re-running produces byte-identical output.
    const std::string first = slurp(fit_path);
    RunResult again = run_cli("fit --observations " + fixture_csv().string() + " --out " +
                              fit_path.string());
    REQUIRE(again.exit_code == 0);
    CHECK(slurp(fit_path) == first);
    fs::remove_all(dir);
}

TEST_CASE("predict and plan evaluate the law from a fit file") {
    const fs::path dir = make_temp_dir("patwa_cli_predict");
    const fs::path fit_path = write_reference_fit(dir);

    RunResult predict = run_cli("predict --fit " + fit_path.string() + " --params 769e6 --hours 40");
    REQUIRE(predict.exit_code == 0);
    CHECK(std::abs(std::stod(predict.out) - 0.3176637128043474) < 1e-9);

    RunResult plan_hours =
        run_cli("plan --fit " + fit_path.string() + " --params 769e6 --target-wer 0.25");
    REQUIRE(plan_hours.exit_code == 0);
    const nlohmann::json planned = nlohmann::json::parse(plan_hours.out);
    CHECK(std::abs(planned["required_hours"].get<double>() - 97.4495167482968) < 1e-6);

    RunResult plan_params =
        run_cli("plan --fit " + fit_path.string() + " --hours 40 --target-wer 0.89");
    REQUIRE(plan_params.exit_code == 0);
    const nlohmann::json planned_p = nlohmann::json::parse(plan_params.out);
    CHECK(planned_p["required_params"].get<double>() < 39e6);

    RunResult bad_target =
        run_cli("plan --fit " + fit_path.string() + " --params 769e6 --target-wer 0");
    CHECK(bad_target.exit_code == 1);
    CHECK(bad_target.err.find("target must be positive") != std::string::npos);

    RunResult both = run_cli("plan --fit " + fit_path.string() +
                             " --params 769e6 --hours 40 --target-wer 0.3");
    CHECK(both.exit_code == 1);

    RunResult neither = run_cli("plan --fit " + fit_path.string() + " --target-wer 0.3");
    CHECK(neither.exit_code == 1);

    fs::remove_all(dir);
}

TEST_CASE("wer subcommand scores jsonl and text inputs") {
    const fs::path dir = make_temp_dir("patwa_cli_wer");
    {
        std::ofstream hyp(dir / "hyp.jsonl");
        hyp << R"({"id": "u1", "text": "x a b c d"})" << '\n';
        hyp << R"({"id": "u2", "text": "wah gwaan"})" << '\n';
        std::ofstream ref(dir / "ref.jsonl");
        ref << R"({"id": "u1", "text": "a b c d"})" << '\n';
        ref << R"({"id": "u2", "text": "wah gwaan"})" << '\n';
    }

    const fs::path csv_path = dir / "per_utt.csv";
    RunResult scored = run_cli("wer --hyp " + (dir / "hyp.jsonl").string() + " --ref " +
                               (dir / "ref.jsonl").string() + " --csv " + csv_path.string() +
                               " --json " + (dir / "summary.json").string());
    REQUIRE(scored.exit_code == 0);

    const nlohmann::json summary = nlohmann::json::parse(scored.out);
    CHECK(summary["mode"] == "levenshtein");
    CHECK(summary["pooled"].get<double>() == doctest::Approx(1.0 / 6.0));
    CHECK(summary["mean_per_utterance"].get<double>() == doctest::Approx(0.125));
    CHECK(summary["insertions"] == 1);
    CHECK(nlohmann::json::parse(slurp(dir / "summary.json")) == summary);

    const std::string csv = slurp(csv_path);
    CHECK(csv.rfind("id,substitutions,deletions,insertions,n_ref,wer", 0) == 0);
    CHECK(csv.find("u1,0,0,1,4,0.25") != std::string::npos);
    CHECK(csv.find("u2,0,0,0,2,0.0") != std::string::npos);

    // Positional mode on plain text files, paired by line number.
    {
        std::ofstream hyp(dir / "hyp.txt");
        hyp << "x a b c d\n";
        std::ofstream ref(dir / "ref.txt");
        ref << "a b c d\n";
    }
    RunResult positional = run_cli("wer --hyp " + (dir / "hyp.txt").string() + " --ref " +
                                   (dir / "ref.txt").string() + " --mode positional");
    REQUIRE(positional.exit_code == 0);
    const nlohmann::json pos = nlohmann::json::parse(positional.out);
    CHECK(pos["wer"].get<double>() == doctest::Approx(1.25));

    RunResult mismatched = run_cli("wer --hyp " + (dir / "hyp.txt").string() + " --ref " +
                                   (dir / "ref.jsonl").string());
    CHECK(mismatched.exit_code == 2);

    fs::remove_all(dir);
}

TEST_CASE("report emits deterministic grids, sweeps and charts") {
    const fs::path dir = make_temp_dir("patwa_cli_report");
    const fs::path fit_path = dir / "fit.json";
    REQUIRE(run_cli("fit --observations " + fixture_csv().string() + " --out " + fit_path.string())
                .exit_code == 0);

    const fs::path out_a = dir / "report_a";
    const fs::path out_b = dir / "report_b";
    REQUIRE(run_cli("report --fit " + fit_path.string() + " --observations " +
                    fixture_csv().string() + " --out " + out_a.string())
                .exit_code == 0);
    REQUIRE(run_cli("report --fit " + fit_path.string() + " --observations " +
                    fixture_csv().string() + " --out " + out_b.string())
                .exit_code == 0);

    for (const char* name : {"grid.csv", "cells.csv", "sweep.csv", "report.json", "sweep.svg"}) {
        CAPTURE(name);
        const std::string a = slurp(out_a / name);
        REQUIRE(!a.empty());
        REQUIRE(a == slurp(out_b / name));
    }

    const std::string cells = slurp(out_a / "cells.csv");
    CHECK(cells.find("benchmark") != std::string::npos);
    const std::string grid = slurp(out_a / "grid.csv");
    CHECK(grid.find("large_observed,large_predicted") != std::string::npos);

    // Grid cells echo the fixture exactly.
    CHECK(grid.find("20.0,0.79,") != std::string::npos);
    CHECK(grid.find(",0.3,") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("validate reports totals and row issues") {
    const fs::path dir = make_temp_dir("patwa_cli_validate");
    {
        std::ofstream m(dir / "good.jsonl");
        for (int i = 0; i < 120; ++i) {
            m << R"({"id": "c)" << i << R"(", "audio_url": "http://h/x.mp3", "transcript": "t", )"
              << R"("duration_s": 30.0, "sample_rate_hz": 22050})" << '\n';
        }
    }
    RunResult good = run_cli("validate --manifest " + (dir / "good.jsonl").string());
    REQUIRE(good.exit_code == 0);
    const nlohmann::json summary = nlohmann::json::parse(good.out);
    CHECK(summary["ok"] == true);
    CHECK(summary["records"] == 120);
    CHECK(summary["total_hours"] == "1.00");

    {
        std::ofstream m(dir / "bad.jsonl");
        m << R"({"id": "a", "audio_url": "http://h/x.mp3", "transcript": "t", "duration_s": 30.0, "sample_rate_hz": 22050})"
          << '\n';
        m << "not json\n";
    }
    RunResult bad = run_cli("validate --manifest " + (dir / "bad.jsonl").string());
    CHECK(bad.exit_code == 2);
    const nlohmann::json issues = nlohmann::json::parse(bad.out);
    CHECK(issues["ok"] == false);
    CHECK(issues["issues"][0]["row"] == 2);

    fs::remove_all(dir);
}

TEST_CASE("validate --audio checks decoded sample counts") {
    const fs::path dir = make_temp_dir("patwa_cli_validate_audio");
    patwa::AudioBuffer clip;
    clip.sample_rate_hz = 22050;
    clip.samples.assign(661500, 0.05);
    patwa::write_wav(clip, dir / "full.wav", patwa::WavEncoding::pcm16);
    clip.samples.assign(639450, 0.05); // 29 s
    patwa::write_wav(clip, dir / "short.wav", patwa::WavEncoding::pcm16);

    {
        std::ofstream m(dir / "m.jsonl");
        m << R"({"id": "full", "audio_url": "http://h/full.mp3", "transcript": "t", "duration_s": 30.0, )"
          << R"("sample_rate_hz": 22050, "local_path": ")" << (dir / "full.wav").string() << R"("})"
          << '\n';
    }
    RunResult ok = run_cli("validate --audio --manifest " + (dir / "m.jsonl").string());
    REQUIRE(ok.exit_code == 0);
    CHECK(nlohmann::json::parse(ok.out)["audio"][0]["pass"] == true);

    {
        std::ofstream m(dir / "m_short.jsonl");
        m << R"({"id": "short", "audio_url": "http://h/short.mp3", "transcript": "t", "duration_s": 30.0, )"
          << R"("sample_rate_hz": 22050, "local_path": ")" << (dir / "short.wav").string() << R"("})"
          << '\n';
    }
    RunResult short_clip = run_cli("validate --audio --manifest " + (dir / "m_short.jsonl").string());
    CHECK(short_clip.exit_code == 2);
    const nlohmann::json audio = nlohmann::json::parse(short_clip.out)["audio"][0];
    CHECK(audio["pass"] == false);
    CHECK(audio["samples"] == 639450);

    fs::remove_all(dir);
}

TEST_CASE("fetch downloads a manifest against a local server") {
    const fs::path dir = make_temp_dir("patwa_cli_fetch");

    httplib::Server server;
    server.Get("/clip.wav", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("RIFFfakeaudio", "application/octet-stream");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    {
        std::ofstream m(dir / "m.jsonl");
        for (int i = 0; i < 3; ++i) {
            m << R"({"id": "c)" << i << R"(", "audio_url": "http://127.0.0.1:)" << port
              << R"(/clip.wav", "transcript": "t", "duration_s": 30.0, "sample_rate_hz": 22050})"
              << '\n';
        }
    }
    const fs::path cache = dir / "cache";
    RunResult fetched = run_cli("fetch --manifest " + (dir / "m.jsonl").string() + " --cache " +
                                cache.string() + " --jobs 3 --retries 1");
    server.stop();
    server_thread.join();

    REQUIRE(fetched.exit_code == 0);
    const nlohmann::json summary = nlohmann::json::parse(fetched.out);
    CHECK(summary["fetched"] == 3);
    CHECK(fs::exists(cache / "manifest.jsonl"));

    patwa::Manifest out = patwa::parse_manifest(cache / "manifest.jsonl");
    REQUIRE(out.records.size() == 3);
    for (const auto& r : out.records) {
        REQUIRE(r.local_path.has_value());
        CHECK(fs::exists(*r.local_path));
        REQUIRE(r.checksum.has_value());
        CHECK(r.checksum->rfind("sha256:", 0) == 0);
    }

    fs::remove_all(dir);
}

TEST_CASE("fetch falls back to PATWA_CACHE_DIR") {
    const fs::path dir = make_temp_dir("patwa_cli_fetch_env");
    {
        std::ofstream m(dir / "m.jsonl");
        m << R"({"id": "c0", "audio_url": "http://127.0.0.1:1/x.wav", "transcript": "t", )"
          << R"("duration_s": 30.0, "sample_rate_hz": 22050})" << '\n';
    }

    // No --cache and no env: usage error before any network activity.
    RunResult none = run_cli("fetch --manifest " + (dir / "m.jsonl").string() +
                                 " --retries 0 --timeout 1",
                             "env -u PATWA_CACHE_DIR");
    CHECK(none.exit_code == 1);
    CHECK(none.err.find("PATWA_CACHE_DIR") != std::string::npos);

    // Env var supplies the cache dir; the unreachable host then fails as a
    // data error, proving the command got past cache resolution.
    const fs::path env_cache = dir / "env_cache";
    RunResult with_env = run_cli("fetch --manifest " + (dir / "m.jsonl").string() +
                                     " --retries 0 --timeout 1",
                                 "PATWA_CACHE_DIR=" + env_cache.string());
    CHECK(with_env.exit_code == 2);
    CHECK(fs::exists(env_cache));

    fs::remove_all(dir);
}

TEST_CASE("prep extracts features, configs and subsets") {
    const fs::path dir = make_temp_dir("patwa_cli_prep");

    // Two 30 s clips at the corpus rate.
    patwa::AudioBuffer clip;
    clip.sample_rate_hz = 22050;
    clip.samples.assign(661500, 0.0);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        clip.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * 330.0 * static_cast<double>(i) / 22050.0);
    }
    patwa::write_wav(clip, dir / "c0.wav", patwa::WavEncoding::pcm16);
    patwa::write_wav(clip, dir / "c1.wav", patwa::WavEncoding::pcm16);

    {
        std::ofstream m(dir / "m.jsonl");
        for (int i = 0; i < 2; ++i) {
            m << R"({"id": "c)" << i << R"(", "audio_url": "http://h/c)" << i
              << R"(.mp3", "transcript": "t)" << i
              << R"(", "duration_s": 30.0, "sample_rate_hz": 22050, "local_path": ")"
              << (dir / ("c" + std::to_string(i) + ".wav")).string() << R"("})" << '\n';
        }
    }

    const fs::path out = dir / "prepped";
    RunResult prepped = run_cli("prep --manifest " + (dir / "m.jsonl").string() + " --out " +
                                out.string() + " --jobs 2 --warmup-steps 250 --total-steps 2000");
    REQUIRE(prepped.exit_code == 0);
    const nlohmann::json summary = nlohmann::json::parse(prepped.out);
    CHECK(summary["prepared"] == 2);

    CHECK(fs::exists(out / "c0.mel"));
    CHECK(fs::exists(out / "c1.mel"));
    patwa::TrainingConfig cfg = patwa::parse_training_config(out / "training_config.toml");
    CHECK(cfg.warmup_steps == 250);
    CHECK(cfg.total_steps == 2000);
    CHECK(cfg.optimizer_name == "AdamW");

    const std::string index = slurp(out / "features.jsonl");
    CHECK(index.find("\"frames\":3000") != std::string::npos);
    CHECK(index.find("\"n_mels\":80") != std::string::npos);

    // Feature files decode to the expected shape.
    patwa::LogMelFeature f = patwa::read_feature_file(out / "c0.mel");
    CHECK(f.frames == 3000);
    CHECK(f.n_mels == 80);

    // A 30 s subset keeps exactly one clip, deterministically.
    const fs::path out_subset = dir / "prepped_subset";
    RunResult subset = run_cli("prep --manifest " + (dir / "m.jsonl").string() + " --out " +
                               out_subset.string() + " --subset-hours " + "0.00834" + " --seed 9");
    REQUIRE(subset.exit_code == 0);
    patwa::Manifest sub = patwa::parse_manifest(out_subset / "subset.jsonl");
    CHECK(sub.records.size() == 1);

    // Invalid training configs are rejected before any feature work.
    RunResult bad_cfg = run_cli("prep --manifest " + (dir / "m.jsonl").string() + " --out " +
                                (dir / "never").string() + " --warmup-steps 100 --total-steps 50");
    CHECK(bad_cfg.exit_code == 2);

    fs::remove_all(dir);
}

TEST_CASE("prep delegates non-WAV input to the decoder template") {
    const fs::path dir = make_temp_dir("patwa_cli_prep_decoder");

    patwa::AudioBuffer clip;
    clip.sample_rate_hz = 22050;
    clip.samples.assign(661500, 0.1);
    patwa::write_wav(clip, dir / "hidden.wav", patwa::WavEncoding::pcm16);
    fs::rename(dir / "hidden.wav", dir / "c0.mp3"); // WAV bytes behind an mp3 name

    {
        std::ofstream m(dir / "m.jsonl");
        m << R"({"id": "c0", "audio_url": "http://h/c0.mp3", "transcript": "t", "duration_s": 30.0, )"
          << R"("sample_rate_hz": 22050, "local_path": ")" << (dir / "c0.mp3").string() << R"("})"
          << '\n';
    }

    const fs::path out = dir / "prepped";
    RunResult no_decoder =
        run_cli("prep --manifest " + (dir / "m.jsonl").string() + " --out " + out.string());
    CHECK(no_decoder.exit_code == 2);
    CHECK(no_decoder.out.find("no --decoder-cmd") != std::string::npos);

    RunResult with_decoder = run_cli("prep --manifest " + (dir / "m.jsonl").string() + " --out " +
                                     out.string() + " --decoder-cmd 'cp {in} {out}'");
    REQUIRE(with_decoder.exit_code == 0);
    CHECK(fs::exists(out / "c0.mel"));

    fs::remove_all(dir);
}

TEST_CASE("runs ingests logs and exports observations plus curves") {
    const fs::path dir = make_temp_dir("patwa_cli_runs");

    auto write_log = [&](const std::string& label, double params, double hours, double floor) {
        std::ofstream log(dir / (label + ".csv"));
        log.precision(17);
        log << "# model_label=" << label << "\n# model_params=" << params
            << "\n# data_hours=" << hours << "\nstep,loss,wer\n";
        for (int step = 200; step <= 4000; step += 200) {
            const double wer = floor + 0.4 * std::exp(-static_cast<double>(step) / 1200.0);
            log << step << ",," << wer << '\n';
        }
    };
    write_log("medium", 769e6, 35, 0.34);
    write_log("tiny", 39e6, 35, 0.73);

    RunResult runs = run_cli("runs --log " + (dir / "medium.csv").string() + " --log " +
                             (dir / "tiny.csv").string() + " --out-observations " +
                             (dir / "obs.csv").string() + " --out-curves " +
                             (dir / "curves.csv").string());
    REQUIRE(runs.exit_code == 0);

    std::vector<patwa::ObservationPoint> points = patwa::read_observations_csv(dir / "obs.csv");
    REQUIRE(points.size() == 2);
    CHECK(points[0].label == "medium");
    CHECK(points[0].wer == doctest::Approx(0.34 + 0.4 * std::exp(-4000.0 / 1200.0)).epsilon(1e-9));

    const std::string curves = slurp(dir / "curves.csv");
    CHECK(curves.rfind("model_label,step,wer", 0) == 0);
    // 2 runs x 20 checkpoints + header.
    CHECK(std::count(curves.begin(), curves.end(), '\n') == 41);

    fs::remove_all(dir);
}
