#include "patwa/wav.hpp"

#include "patwa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace patwa {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::uint32_t v, std::string& out) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::uint16_t v, std::string& out) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

} // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open audio file '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::string where = "'" + path.string() + "'";
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw DataError("undecodable audio file " + where + ": not a RIFF/WAVE stream");
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + off;
        std::uint32_t chunk_size = read_u32(hdr + 4);
        const unsigned char* body = hdr + 8;
        if (off + 8 + chunk_size > bytes.size()) {
            throw DataError("undecodable audio file " + where + ": truncated chunk");
        }
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw DataError("undecodable audio file " + where + ": short fmt chunk");
            format = read_u16(body);
            channels = read_u16(body + 2);
            rate = read_u32(body + 4);
            bits = read_u16(body + 14);
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = body;
            data_len = chunk_size;
        }
        off += 8 + chunk_size + (chunk_size & 1); // chunks are word-aligned
    }

    if (data == nullptr) throw DataError("undecodable audio file " + where + ": no data chunk");
    if (channels != 1) {
        throw DataError("audio file " + where + " has " + std::to_string(channels) +
                        " channels; expected mono");
    }
    if (rate == 0) throw DataError("undecodable audio file " + where + ": zero sample rate");

    AudioBuffer audio;
    audio.sample_rate_hz = static_cast<int>(rate);
    if (format == 1 && bits == 16) {
        std::size_t n = data_len / 2;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::int16_t v = static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
            audio.samples[i] = static_cast<double>(v) / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        std::size_t n = data_len / 4;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t u = read_u32(data + 4 * i);
            float f;
            std::memcpy(&f, &u, 4);
            audio.samples[i] = static_cast<double>(f);
        }
    } else {
        throw DataError("undecodable audio file " + where + ": unsupported format (format=" +
                        std::to_string(format) + ", bits=" + std::to_string(bits) +
                        "); expected 16-bit PCM or 32-bit float");
    }
    if (audio.samples.empty()) {
        throw DataError("audio file " + where + " has no samples");
    }
    for (double v : audio.samples) {
        if (!std::isfinite(v)) throw DataError("audio file " + where + " contains non-finite samples");
    }
    return audio;
}

void write_wav(const AudioBuffer& audio, const std::filesystem::path& path, WavEncoding encoding) {
    if (audio.sample_rate_hz <= 0) throw DataError("cannot write WAV with non-positive sample rate");

    const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
    const std::uint16_t block = static_cast<std::uint16_t>(bits / 8);
    const std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * block);

    std::string out;
    out.reserve(44 + data_len);
    out.append("RIFF");
    put_u32(36 + data_len, out);
    out.append("WAVE");
    out.append("fmt ");
    put_u32(16, out);
    put_u16(static_cast<std::uint16_t>(encoding), out);
    put_u16(1, out); // mono
    put_u32(static_cast<std::uint32_t>(audio.sample_rate_hz), out);
    put_u32(static_cast<std::uint32_t>(audio.sample_rate_hz) * block, out);
    put_u16(block, out);
    put_u16(bits, out);
    out.append("data");
    put_u32(data_len, out);

    if (encoding == WavEncoding::pcm16) {
        for (double v : audio.samples) {
            // Same 1/32768 step the reader uses, clamped to the int16 range.
            const long q = std::clamp(std::lrint(v * 32768.0), -32768L, 32767L);
            put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)), out);
        }
    } else {
        for (double v : audio.samples) {
            float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            put_u32(u, out);
        }
    }

    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write audio file '" + path.string() + "'");
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

} // namespace patwa
