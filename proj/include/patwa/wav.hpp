#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace patwa {

struct AudioBuffer {
    std::vector<double> samples; // mono, nominally in [-1, 1]
    int sample_rate_hz = 0;

    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

enum class WavEncoding : std::uint16_t {
    pcm16 = 1,   // 16-bit signed integer PCM
    float32 = 3, // 32-bit IEEE float
};

// Reads a mono RIFF/WAVE file (16-bit PCM or 32-bit float, little-endian).
AudioBuffer read_wav(const std::filesystem::path& path);

void write_wav(const AudioBuffer& audio, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::float32);

} // namespace patwa
