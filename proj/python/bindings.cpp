// Python bindings for the patwa core: tokenization and WER scoring, the
// scaling-law fit and its inversions, and the audio front end.

#include "patwa/audiofe.hpp"
#include "patwa/errors.hpp"
#include "patwa/manifest.hpp"
#include "patwa/metrics.hpp"
#include "patwa/scaling.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;

namespace {

patwa::AudioBuffer buffer_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> samples,
                                     int sample_rate_hz) {
    patwa::AudioBuffer buf;
    buf.sample_rate_hz = sample_rate_hz;
    buf.samples.assign(samples.data(), samples.data() + samples.size());
    return buf;
}

py::array_t<double> array_from_buffer(const patwa::AudioBuffer& buf) {
    py::array_t<double> out(static_cast<py::ssize_t>(buf.samples.size()));
    std::copy(buf.samples.begin(), buf.samples.end(), out.mutable_data());
    return out;
}

py::dict breakdown_to_dict(const patwa::WerBreakdown& b) {
    py::dict d;
    d["substitutions"] = b.substitutions;
    d["deletions"] = b.deletions;
    d["insertions"] = b.insertions;
    d["n_ref"] = b.n_ref;
    d["wer"] = b.wer;
    d["mode"] = patwa::wer_mode_name(b.mode);
    return d;
}

patwa::WerMode mode_from_name(const std::string& name) {
    if (name == "positional") return patwa::WerMode::positional;
    if (name == "levenshtein") return patwa::WerMode::levenshtein;
    throw patwa::UsageError("unknown WER mode '" + name + "'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Patois ASR evaluation and scaling-law core";

    py::register_exception<patwa::Error>(m, "PatwaError");

    // --- metrics ---
    m.def("tokenize", [](const std::string& text) { return patwa::tokenize(text); },
          py::arg("text"), "Normalize text into scoring tokens.");

    m.def(
        "wer",
        [](const std::string& hyp, const std::string& ref, const std::string& mode) {
            const patwa::TokenSeq h = patwa::tokenize(hyp);
            const patwa::TokenSeq r = patwa::tokenize(ref);
            if (mode_from_name(mode) == patwa::WerMode::positional) {
                return breakdown_to_dict(patwa::wer_positional(h, r));
            }
            return breakdown_to_dict(patwa::wer_levenshtein(h, r).breakdown);
        },
        py::arg("hyp"), py::arg("ref"), py::arg("mode") = "levenshtein",
        "Score one hypothesis/reference pair; returns the error breakdown.");

    m.def(
        "corpus_wer",
        [](const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& mode) {
            std::vector<std::pair<patwa::TokenSeq, patwa::TokenSeq>> tokenized;
            tokenized.reserve(pairs.size());
            for (const auto& [hyp, ref] : pairs) {
                tokenized.emplace_back(patwa::tokenize(hyp), patwa::tokenize(ref));
            }
            const patwa::CorpusWer c = patwa::corpus_wer(tokenized, mode_from_name(mode));
            py::dict d;
            d["pooled"] = c.pooled;
            d["mean_per_utterance"] = c.mean_per_utterance;
            d["n_ref"] = c.totals.n_ref;
            d["errors"] = c.totals.errors();
            return d;
        },
        py::arg("pairs"), py::arg("mode") = "levenshtein",
        "Aggregate WER over (hyp, ref) text pairs; reports pooled and mean forms.");

    // --- scaling ---
    py::class_<patwa::ScalingFit>(m, "ScalingFit")
        .def_readonly("log_a", &patwa::ScalingFit::log_a)
        .def_readonly("alpha", &patwa::ScalingFit::alpha)
        .def_readonly("beta", &patwa::ScalingFit::beta)
        .def_readonly("r2", &patwa::ScalingFit::r2)
        .def_readonly("residuals", &patwa::ScalingFit::residuals)
        .def_readonly("n_obs", &patwa::ScalingFit::n_obs)
        .def("__repr__", [](const patwa::ScalingFit& f) {
            std::ostringstream os;
            os << "ScalingFit(log_a=" << f.log_a << ", alpha=" << f.alpha << ", beta=" << f.beta
               << ", r2=" << f.r2 << ", n_obs=" << f.n_obs << ")";
            return os.str();
        });

    m.def(
        "fit_power_law",
        [](const std::vector<std::tuple<double, double, double>>& points) {
            std::vector<patwa::ObservationPoint> obs;
            obs.reserve(points.size());
            for (const auto& [params, hours, wer] : points) {
                obs.push_back({params, hours, wer, ""});
            }
            return patwa::fit_power_law(obs);
        },
        py::arg("points"),
        "Fit WER = A * M^-alpha * D^-beta to (model_params, data_hours, wer) triples.");

    m.def("predict_wer", &patwa::predict_wer, py::arg("fit"), py::arg("model_params"),
          py::arg("data_hours"));
    m.def("required_hours", &patwa::required_hours, py::arg("fit"), py::arg("model_params"),
          py::arg("target_wer"));
    m.def("required_params", &patwa::required_params, py::arg("fit"), py::arg("data_hours"),
          py::arg("target_wer"));

    // --- audio front end ---
    m.def(
        "resample",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int source_rate,
           int target_rate) {
            return array_from_buffer(patwa::resample(buffer_from_array(samples, source_rate), target_rate));
        },
        py::arg("samples"), py::arg("source_rate"), py::arg("target_rate"),
        "Band-limited resampling of a mono sample array.");

    m.def(
        "pad_or_trim",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int rate,
           double target_s) {
            return array_from_buffer(patwa::pad_or_trim(buffer_from_array(samples, rate), target_s));
        },
        py::arg("samples"), py::arg("rate"), py::arg("target_s") = 30.0);

    m.def(
        "log_mel",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> samples, int rate) {
            const patwa::LogMelFeature f = patwa::log_mel(buffer_from_array(samples, rate));
            py::array_t<float> out({static_cast<py::ssize_t>(f.frames), static_cast<py::ssize_t>(f.n_mels)});
            std::copy(f.values.begin(), f.values.end(), out.mutable_data());
            return out;
        },
        py::arg("samples"), py::arg("rate") = 16000,
        "Whisper-style log-mel features: frames x 80, hop 10 ms.");

    // --- manifest bookkeeping ---
    m.def(
        "manifest_total_hours",
        [](const std::string& path) { return patwa::total_hours(patwa::parse_manifest(path)); },
        py::arg("path"), "Exact total duration of a manifest, in hours.");

    m.attr("__version__") = "0.1.0";
}
