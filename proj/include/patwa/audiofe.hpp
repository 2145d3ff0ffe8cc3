#pragma once

#include "patwa/wav.hpp"

#include <cstddef>
#include <filesystem>
#include <vector>

namespace patwa {

// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.
// Output length is round(n * target / source); the low-pass sits at
// min(source, target)/2 with >= 60 dB stopband attenuation. Equal rates
// return a bit-identical copy.
AudioBuffer resample(const AudioBuffer& input, int target_rate_hz);

// Fixes the buffer to exactly target_s seconds: zero-pads short inputs at the
// end, truncates long ones.
AudioBuffer pad_or_trim(const AudioBuffer& input, double target_s = 30.0);

// Log-mel front end constants. These follow the published Whisper front end:
// 400-point FFT, hop 160, 80 mel bands on the HTK scale, periodic Hann
// window, reflect padding, log10 floored at 1e-10, clamped to (max - 8) and
// mapped through (x + 4) / 4.
struct FrontEndConfig {
    int fft_size = 400;
    int hop = 160;
    int n_mels = 80;
    double fmin_hz = 0.0;
    double fmax_hz = 8000.0;
    double log_floor = 1e-10;
    double dynamic_range = 8.0; // clamp to global max minus this, in log10 units
    int expected_rate_hz = 16000;
};

struct LogMelFeature {
    std::size_t frames = 0;
    std::size_t n_mels = 0;
    std::vector<float> values; // row-major frames x n_mels
    double frame_hop_s = 0.01;

    float at(std::size_t frame, std::size_t mel) const { return values[frame * n_mels + mel]; }
};

// frames = ceil(len / hop); shape depends only on input length and config.
LogMelFeature log_mel(const AudioBuffer& input, const FrontEndConfig& cfg = {});

// Feature file: "PWML" magic, u32 version, u32 frames, u32 n_mels, u32 hop
// samples, then frames*n_mels little-endian f32 values, row-major.
void write_feature_file(const LogMelFeature& feature, const std::filesystem::path& path,
                        int hop_samples = 160);
LogMelFeature read_feature_file(const std::filesystem::path& path);

} // namespace patwa
