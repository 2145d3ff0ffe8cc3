#pragma once

#include "patwa/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace patwa {

// One annotated 30-second music clip: where the audio lives, the manual
// transcription of the segment, and optionally the official full-song lyrics.
struct ClipRecord {
    std::string id;
    std::string audio_url;
    std::string transcript;
    std::optional<std::string> official_lyrics;
    double duration_s = 30.0;
    int sample_rate_hz = 22050;
    std::optional<std::string> local_path;
    std::optional<std::string> checksum; // "sha256:<hex>"
};

struct Manifest {
    std::vector<ClipRecord> records;
    int schema_version = 1;
};

struct RowIssue {
    std::size_t row = 0; // 1-based line number
    std::string message;
};

// Thrown when any manifest row fails validation; carries every bad row.
class ManifestError : public DataError {
public:
    ManifestError(const std::string& summary, std::vector<RowIssue> issues)
        : DataError(summary), issues_(std::move(issues)) {}

    const std::vector<RowIssue>& issues() const { return issues_; }

private:
    std::vector<RowIssue> issues_;
};

// Line-delimited JSON, one record per line, fields id, audio_url, transcript,
// lyrics (optional), duration_s, sample_rate_hz. An optional leading
// {"_schema_version": N} line pins the schema. Parsing validates every row
// and reports all bad rows at once.
Manifest parse_manifest(std::istream& in, const std::string& name = "<stream>");
Manifest parse_manifest(const std::filesystem::path& path);
void serialize_manifest(const Manifest& m, std::ostream& out);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

// Exact sum of durations in hours.
double total_hours(const Manifest& m);
// Display form, rounded to 2 decimals.
std::string format_hours(double hours);

struct SubsetSpec {
    double target_hours = 0.0;
    std::uint64_t seed = 0;
};

// Deterministic seeded subset: records are ordered by a stable hash of their
// id mixed with the seed, then taken greedily while they fit in the hour
// budget. Independent of the manifest's file order.
Manifest subset_by_hours(const Manifest& m, const SubsetSpec& spec);

struct TrainingConfig {
    std::string optimizer_name = "AdamW";
    double initial_lr = 1e-5;
    int warmup_steps = 500;
    int total_steps = 4000;
    std::string scheduler = "linear";
};

void validate_training_config(const TrainingConfig& cfg);
// Flat TOML-style key = value file; round-trips through parse_training_config.
void emit_training_config(const TrainingConfig& cfg, const std::filesystem::path& path);
TrainingConfig parse_training_config(const std::filesystem::path& path);

struct AudioValidation {
    std::string id;
    std::size_t sample_count = 0;
    int sample_rate_hz = 0;
    double duration_s = 0.0;
    std::size_t expected_samples = 0;
    bool pass = false;
    std::string message;
};

// Decodes the record's local audio and checks it against the declared
// duration and sample rate (30 s at 22,050 Hz means 661,500 samples).
AudioValidation validate_audio(const ClipRecord& record);

} // namespace patwa
