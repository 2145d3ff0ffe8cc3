#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "patwa/errors.hpp"
#include "patwa/runlog.hpp"

#include <sstream>

using namespace patwa;

namespace {

std::string sample_log(int eval_interval = 200, int total_steps = 4000) {
    std::ostringstream os;
    os << "# model_label=medium\n";
    os << "# model_params=769000000\n";
    os << "# data_hours=35\n";
    os << "step,loss,wer\n";
    for (int step = eval_interval; step <= total_steps; step += eval_interval) {
        const double wer = 0.52 - 0.18 * static_cast<double>(step) / total_steps;
        os << step << ",," << wer << '\n';
    }
    return os.str();
}

TrainingRun parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse_runlog(in, "test");
}

} // namespace

TEST_CASE("parse_runlog reads metadata and samples") {
    TrainingRun run = parse_string(sample_log());
    CHECK(run.model_label == "medium");
    CHECK(run.model_params == 769000000.0);
    CHECK(run.data_hours == 35.0);
    // 4,000 steps at a 200-step eval interval gives 20 checkpoints.
    CHECK(run.samples.size() == 20);
    CHECK(run.samples.front().step == 200);
    CHECK(run.samples.back().step == 4000);
    CHECK(!run.samples.front().loss.has_value());
}

TEST_CASE("parse_runlog reads optional loss values") {
    TrainingRun run = parse_string(
        "# model_label=tiny\n# model_params=39000000\n# data_hours=20\n"
        "step,loss,wer\n100,1.8,1.15\n200,1.2,0.97\n");
    REQUIRE(run.samples.size() == 2);
    CHECK(run.samples[0].loss == 1.8);
    CHECK(run.samples[1].wer == 0.97);
}

TEST_CASE("parse_runlog errors are row addressed") {
    CHECK_THROWS_WITH_AS(
        parse_string("# model_label=x\n# model_params=1\n# data_hours=1\n"
                     "step,loss,wer\n100,,0.5\n100,,0.4\n"),
        doctest::Contains("non-monotone steps"), DataError);

    CHECK_THROWS_WITH_AS(
        parse_string("# model_label=x\n# model_params=1\n# data_hours=1\nstep,loss,wer\n"),
        doctest::Contains("empty run log body"), DataError);

    CHECK_THROWS_WITH_AS(parse_string("# model_label=x\n# model_params=1\n# data_hours=1\n"
                                      "step,wer\n100,0.5\n"),
                         doctest::Contains("step,loss,wer"), DataError);

    CHECK_THROWS_WITH_AS(parse_string("# model_label=x\n# model_params=1\n# data_hours=1\n"
                                      "step,loss,wer\nabc,,0.5\n"),
                         doctest::Contains("row 5"), DataError);

    CHECK_THROWS_WITH_AS(parse_string("step,loss,wer\n100,,0.5\n"),
                         doctest::Contains("missing metadata"), DataError);

    CHECK_THROWS_WITH_AS(parse_string("# model_label=x\n# model_params=1\n# data_hours=1\n"
                                      "step,loss,wer\n100,,-0.5\n"),
                         doctest::Contains("wer must be positive"), DataError);
}

TEST_CASE("best_wer takes the minimum, not the last value") {
    TrainingRun run = parse_string(
        "# model_label=tiny\n# model_params=39000000\n# data_hours=20\n"
        "step,loss,wer\n100,,1.1\n200,,0.9\n300,,0.95\n");
    ObservationPoint p = best_wer(run);
    CHECK(p.wer == 0.9);
    CHECK(p.model_params == 39000000.0);
    CHECK(p.data_hours == 20.0);
    CHECK(p.label == "tiny");
    for (const RunSample& s : run.samples) CHECK(p.wer <= s.wer);

    TrainingRun single = parse_string(
        "# model_label=tiny\n# model_params=39000000\n# data_hours=20\n"
        "step,loss,wer\n100,,0.73\n");
    CHECK(best_wer(single).wer == 0.73);

    TrainingRun empty;
    empty.model_label = "none";
    CHECK_THROWS_AS(best_wer(empty), DataError);
}

TEST_CASE("curve_export flattens and orders rows") {
    std::vector<TrainingRun> runs;
    for (const char* label : {"tiny", "base", "small", "medium"}) {
        std::ostringstream os;
        os << "# model_label=" << label << "\n# model_params=1000000\n# data_hours=35\n";
        os << "step,loss,wer\n";
        for (int step = 200; step <= 4000; step += 200) {
            os << step << ",," << 1.2 - 0.0001 * step << '\n';
        }
        runs.push_back(parse_string(os.str()));
    }
    std::vector<CurveRow> rows = curve_export(runs);
    CHECK(rows.size() == 80);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const bool ordered = rows[i - 1].model_label < rows[i].model_label ||
                             (rows[i - 1].model_label == rows[i].model_label &&
                              rows[i - 1].step < rows[i].step);
        REQUIRE(ordered);
    }

    std::vector<TrainingRun> none;
    CHECK(curve_export(none).empty());

    // WER values above 1 pass through unmodified.
    TrainingRun high = parse_string(
        "# model_label=tiny\n# model_params=39000000\n# data_hours=35\n"
        "step,loss,wer\n100,,1.18\n200,,1.12\n");
    std::vector<CurveRow> high_rows = curve_export(std::vector<TrainingRun>{high});
    CHECK(high_rows[0].wer == 1.18);
    CHECK(high_rows[1].wer == 1.12);
}

TEST_CASE("runlog serialize/parse round-trip") {
    TrainingRun run = parse_string(sample_log(400, 4000));
    run.samples[2].loss = 1.25;
    std::ostringstream out;
    serialize_runlog(run, out);
    TrainingRun back = parse_string(out.str());
    CHECK(back.model_label == run.model_label);
    CHECK(back.model_params == run.model_params);
    CHECK(back.data_hours == run.data_hours);
    REQUIRE(back.samples.size() == run.samples.size());
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        CHECK(back.samples[i].step == run.samples[i].step);
        CHECK(back.samples[i].loss == run.samples[i].loss);
        CHECK(back.samples[i].wer == run.samples[i].wer);
    }
}
