#include "patwa/audiofe.hpp"

#include "patwa/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>

namespace patwa {

namespace {

constexpr double kPi = std::numbers::pi;

// Kernel quality: 24 sinc zero crossings per side, Kaiser beta 9.0. This
// lands the stopband near -90 dB, well inside the >= 60 dB contract.
constexpr int kZeroCrossings = 24;
constexpr double kKaiserBeta = 9.0;

double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
        double f = x / (2.0 * k);
        term *= f * f;
        sum += term;
        if (term < 1e-15 * sum) break;
    }
    return sum;
}

double sinc(double u) {
    if (u == 0.0) return 1.0;
    double p = kPi * u;
    return std::sin(p) / p;
}

// FFTW plan creation/destruction is not thread safe; execution is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular filters with peak 1, n_mels bands equally spaced on the HTK mel
// scale between fmin and fmax, sampled at the FFT bin frequencies.
std::vector<double> mel_filterbank(const FrontEndConfig& cfg) {
    const int n_bins = cfg.fft_size / 2 + 1;
    std::vector<double> mel_points(static_cast<std::size_t>(cfg.n_mels) + 2);
    const double mel_lo = hz_to_mel(cfg.fmin_hz);
    const double mel_hi = hz_to_mel(cfg.fmax_hz);
    for (std::size_t i = 0; i < mel_points.size(); ++i) {
        mel_points[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                               static_cast<double>(cfg.n_mels + 1));
    }

    std::vector<double> bank(static_cast<std::size_t>(cfg.n_mels) * n_bins, 0.0);
    const double bin_hz = static_cast<double>(cfg.expected_rate_hz) / cfg.fft_size;
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double f_lo = mel_points[m];
        const double f_center = mel_points[m + 1];
        const double f_hi = mel_points[m + 2];
        for (int b = 0; b < n_bins; ++b) {
            const double f = b * bin_hz;
            double w = 0.0;
            if (f > f_lo && f < f_hi) {
                w = f <= f_center ? (f - f_lo) / (f_center - f_lo) : (f_hi - f) / (f_hi - f_center);
            }
            bank[static_cast<std::size_t>(m) * n_bins + b] = w;
        }
    }
    return bank;
}

// Index into [0, len) reflected about the edges without repeating them,
// matching numpy-style 'reflect' padding for any offset.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t len) {
    if (len == 1) return 0;
    const std::ptrdiff_t period = 2 * (static_cast<std::ptrdiff_t>(len) - 1);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(len)) m = period - m;
    return static_cast<std::size_t>(m);
}

} // namespace

AudioBuffer resample(const AudioBuffer& input, int target_rate_hz) {
    if (target_rate_hz <= 0) throw DataError("target sample rate must be positive");
    if (input.samples.empty()) throw DataError("cannot resample an empty buffer");
    if (input.sample_rate_hz <= 0) throw DataError("source sample rate must be positive");
    if (target_rate_hz == input.sample_rate_hz) return input;

    const double src = input.sample_rate_hz;
    const double dst = target_rate_hz;
    const std::size_t in_len = input.samples.size();
    const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(in_len) * dst / src));

    // Cutoff in cycles per input sample; half-width sized to kZeroCrossings
    // sinc lobes at that cutoff.
    const double fc = 0.5 * std::min(1.0, dst / src);
    const double half_width = kZeroCrossings / (2.0 * fc);
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(half_width));
    const double i0_beta = bessel_i0(kKaiserBeta);

    AudioBuffer out;
    out.sample_rate_hz = target_rate_hz;
    out.samples.resize(out_len);

    for (std::size_t k = 0; k < out_len; ++k) {
        // Exact center position in input samples: k * src / dst as integer + fraction.
        const auto num = static_cast<std::int64_t>(k) * input.sample_rate_hz;
        const auto n0 = static_cast<std::ptrdiff_t>(num / target_rate_hz);
        const double frac = static_cast<double>(num % target_rate_hz) / dst;
        const double t = static_cast<double>(n0) + frac;

        double acc = 0.0, weight = 0.0;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, n0 - reach);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(in_len) - 1, n0 + reach + 1);
        for (std::ptrdiff_t n = lo; n <= hi; ++n) {
            const double dx = t - static_cast<double>(n);
            if (std::abs(dx) > half_width) continue;
            const double r = dx / half_width;
            const double window = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
            const double h = 2.0 * fc * sinc(2.0 * fc * dx) * window;
            acc += input.samples[static_cast<std::size_t>(n)] * h;
            weight += h;
        }
        // Normalizing by the kernel sum pins DC gain to exactly 1, edges included.
        out.samples[k] = weight != 0.0 ? acc / weight : 0.0;
    }
    return out;
}

AudioBuffer pad_or_trim(const AudioBuffer& input, double target_s) {
    if (input.sample_rate_hz <= 0) throw DataError("sample rate must be positive");
    if (target_s < 0.0) throw DataError("target duration must be non-negative");
    const auto target_len = static_cast<std::size_t>(std::llround(target_s * input.sample_rate_hz));
    AudioBuffer out;
    out.sample_rate_hz = input.sample_rate_hz;
    out.samples.assign(target_len, 0.0);
    const std::size_t n = std::min(target_len, input.samples.size());
    std::copy_n(input.samples.begin(), n, out.samples.begin());
    return out;
}

LogMelFeature log_mel(const AudioBuffer& input, const FrontEndConfig& cfg) {
    if (input.samples.empty()) throw DataError("cannot extract features from an empty buffer");
    if (input.sample_rate_hz != cfg.expected_rate_hz) {
        throw DataError("log_mel expects " + std::to_string(cfg.expected_rate_hz) + " Hz input, got " +
                        std::to_string(input.sample_rate_hz) + " Hz; resample first");
    }
    if (cfg.fft_size < cfg.hop || cfg.hop <= 0 || cfg.n_mels <= 0) {
        throw DataError("invalid front-end config");
    }
    if (cfg.fmax_hz > cfg.expected_rate_hz / 2.0) {
        throw DataError("fmax exceeds Nyquist for the expected rate");
    }

    const std::size_t len = input.samples.size();
    const int n_fft = cfg.fft_size;
    const int n_bins = n_fft / 2 + 1;
    const std::size_t frames = (len + cfg.hop - 1) / cfg.hop; // ceil(len / hop)
    const int pad = n_fft / 2;

    // Periodic Hann window.
    std::vector<double> window(static_cast<std::size_t>(n_fft));
    for (int i = 0; i < n_fft; ++i) {
        window[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n_fft));
    }

    const std::vector<double> bank = mel_filterbank(cfg);

    std::vector<double> frame_buf(static_cast<std::size_t>(n_fft));
    std::vector<double> spectrum(static_cast<std::size_t>(2 * (n_fft / 2 + 1)));
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(n_fft, frame_buf.data(),
                                    reinterpret_cast<fftw_complex*>(spectrum.data()), FFTW_ESTIMATE);
    }

    LogMelFeature feature;
    feature.frames = frames;
    feature.n_mels = static_cast<std::size_t>(cfg.n_mels);
    feature.frame_hop_s = static_cast<double>(cfg.hop) / cfg.expected_rate_hz;
    feature.values.resize(frames * feature.n_mels);

    std::vector<double> power(static_cast<std::size_t>(n_bins));
    std::vector<double> log_spec(frames * feature.n_mels);
    double global_max = -std::numeric_limits<double>::infinity();

    for (std::size_t f = 0; f < frames; ++f) {
        const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(f) * cfg.hop - pad;
        for (int i = 0; i < n_fft; ++i) {
            frame_buf[static_cast<std::size_t>(i)] =
                input.samples[reflect_index(start + i, len)] * window[static_cast<std::size_t>(i)];
        }
        fftw_execute(plan);
        for (int b = 0; b < n_bins; ++b) {
            const double re = spectrum[static_cast<std::size_t>(2 * b)];
            const double im = spectrum[static_cast<std::size_t>(2 * b + 1)];
            power[static_cast<std::size_t>(b)] = re * re + im * im;
        }
        for (int m = 0; m < cfg.n_mels; ++m) {
            const double* w = &bank[static_cast<std::size_t>(m) * n_bins];
            double acc = 0.0;
            for (int b = 0; b < n_bins; ++b) acc += w[b] * power[static_cast<std::size_t>(b)];
            const double v = std::log10(std::max(acc, cfg.log_floor));
            log_spec[f * feature.n_mels + static_cast<std::size_t>(m)] = v;
            global_max = std::max(global_max, v);
        }
    }

    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }

    const double floor_val = global_max - cfg.dynamic_range;
    for (std::size_t i = 0; i < log_spec.size(); ++i) {
        const double v = std::max(log_spec[i], floor_val);
        feature.values[i] = static_cast<float>((v + 4.0) / 4.0);
    }
    return feature;
}

void write_feature_file(const LogMelFeature& feature, const std::filesystem::path& path, int hop_samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write feature file '" + path.string() + "'");
    auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    out.write("PWML", 4);
    put_u32(1); // version
    put_u32(static_cast<std::uint32_t>(feature.frames));
    put_u32(static_cast<std::uint32_t>(feature.n_mels));
    put_u32(static_cast<std::uint32_t>(hop_samples));
    for (float v : feature.values) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        put_u32(u);
    }
}

LogMelFeature read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 20 || std::memcmp(bytes.data(), "PWML", 4) != 0) {
        throw DataError("feature file '" + path.string() + "' has no PWML header");
    }
    auto get_u32 = [&](std::size_t off) {
        return static_cast<std::uint32_t>(bytes[off]) | (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
               (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
               (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
    };
    const std::uint32_t version = get_u32(4);
    if (version != 1) throw DataError("feature file '" + path.string() + "' has unsupported version");
    LogMelFeature feature;
    feature.frames = get_u32(8);
    feature.n_mels = get_u32(12);
    const std::uint32_t hop = get_u32(16);
    feature.frame_hop_s = hop / 16000.0;
    const std::size_t count = feature.frames * feature.n_mels;
    if (bytes.size() != 20 + 4 * count) {
        throw DataError("feature file '" + path.string() + "' is truncated");
    }
    feature.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t u = get_u32(20 + 4 * i);
        float f;
        std::memcpy(&f, &u, 4);
        feature.values[i] = f;
    }
    return feature;
}

} // namespace patwa
