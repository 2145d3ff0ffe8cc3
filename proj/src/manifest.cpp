#include "patwa/manifest.hpp"

#include "patwa/errors.hpp"
#include "patwa/wav.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace patwa {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// FNV-1a over the id bytes, seed-mixed through a splitmix64 finalizer. Stable
// across platforms so subsets reproduce byte-identically everywhere.
std::uint64_t subset_key(const std::string& id, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : id) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = h ^ seed;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

Manifest parse_manifest(std::istream& in, const std::string& name) {
    Manifest manifest;
    std::vector<RowIssue> issues;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t row = 0;
    bool any_content = false;

    while (std::getline(in, line)) {
        ++row;
        std::string trimmed = trim_copy(line);
        if (trimmed.empty()) continue;
        any_content = true;

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(trimmed);
        } catch (const std::exception& e) {
            issues.push_back({row, std::string("malformed JSON: ") + e.what()});
            continue;
        }
        if (!j.is_object()) {
            issues.push_back({row, "record must be a JSON object"});
            continue;
        }
        if (row == 1 && j.contains("_schema_version")) {
            manifest.schema_version = j["_schema_version"].get<int>();
            any_content = false; // header line does not count as a record
            continue;
        }

        ClipRecord r;
        bool row_ok = true;
        auto require_string = [&](const char* field, std::string& dest) {
            if (!j.contains(field) || !j[field].is_string()) {
                issues.push_back({row, std::string("missing required field '") + field + "'"});
                row_ok = false;
                return;
            }
            dest = j[field].get<std::string>();
        };
        require_string("id", r.id);
        require_string("audio_url", r.audio_url);
        require_string("transcript", r.transcript);
        if (j.contains("lyrics") && j["lyrics"].is_string()) {
            r.official_lyrics = j["lyrics"].get<std::string>();
        }
        if (!j.contains("duration_s") || !j["duration_s"].is_number()) {
            issues.push_back({row, "missing required field 'duration_s'"});
            row_ok = false;
        } else {
            r.duration_s = j["duration_s"].get<double>();
        }
        if (!j.contains("sample_rate_hz") || !j["sample_rate_hz"].is_number_integer()) {
            issues.push_back({row, "missing required field 'sample_rate_hz'"});
            row_ok = false;
        } else {
            r.sample_rate_hz = j["sample_rate_hz"].get<int>();
        }
        if (j.contains("local_path") && j["local_path"].is_string()) {
            r.local_path = j["local_path"].get<std::string>();
        }
        if (j.contains("checksum") && j["checksum"].is_string()) {
            r.checksum = j["checksum"].get<std::string>();
        }
        if (!row_ok) continue;

        if (r.duration_s <= 0.0) {
            issues.push_back({row, "duration_s must be positive"});
            row_ok = false;
        }
        if (r.sample_rate_hz <= 0) {
            issues.push_back({row, "sample_rate_hz must be positive"});
            row_ok = false;
        }
        if (trim_copy(r.transcript).empty()) {
            issues.push_back({row, "transcript is empty after trimming"});
            row_ok = false;
        }
        if (row_ok && !seen_ids.insert(r.id).second) {
            issues.push_back({row, "duplicate id '" + r.id + "'"});
            row_ok = false;
        }
        if (row_ok) manifest.records.push_back(std::move(r));
    }

    if (!any_content && manifest.records.empty() && issues.empty()) {
        throw DataError("empty manifest: " + name);
    }
    if (!issues.empty()) {
        std::ostringstream msg;
        msg << name << ": " << issues.size() << " invalid manifest row" << (issues.size() == 1 ? "" : "s");
        for (std::size_t i = 0; i < issues.size() && i < 5; ++i) {
            msg << "\n  row " << issues[i].row << ": " << issues[i].message;
        }
        if (issues.size() > 5) msg << "\n  ...";
        throw ManifestError(msg.str(), std::move(issues));
    }
    return manifest;
}

Manifest parse_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
    return parse_manifest(in, path.string());
}

void serialize_manifest(const Manifest& m, std::ostream& out) {
    if (m.schema_version != 1) {
        ordered_json header;
        header["_schema_version"] = m.schema_version;
        out << header.dump() << '\n';
    }
    for (const ClipRecord& r : m.records) {
        ordered_json j;
        j["id"] = r.id;
        j["audio_url"] = r.audio_url;
        j["transcript"] = r.transcript;
        if (r.official_lyrics) j["lyrics"] = *r.official_lyrics;
        j["duration_s"] = r.duration_s;
        j["sample_rate_hz"] = r.sample_rate_hz;
        if (r.local_path) j["local_path"] = *r.local_path;
        if (r.checksum) j["checksum"] = *r.checksum;
        out << j.dump() << '\n';
    }
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
    serialize_manifest(m, out);
}

double total_hours(const Manifest& m) {
    double seconds = 0.0;
    for (const ClipRecord& r : m.records) seconds += r.duration_s;
    return seconds / 3600.0;
}

std::string format_hours(double hours) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << hours;
    return out.str();
}

Manifest subset_by_hours(const Manifest& m, const SubsetSpec& spec) {
    if (!(spec.target_hours > 0.0)) {
        throw UsageError("subset target hours must be positive");
    }
    const double available = total_hours(m);
    if (spec.target_hours > available + 1e-12) {
        throw DataError("subset target of " + format_hours(spec.target_hours) +
                        " h exceeds available " + format_hours(available) + " h");
    }

    std::vector<const ClipRecord*> order;
    order.reserve(m.records.size());
    for (const ClipRecord& r : m.records) order.push_back(&r);
    std::sort(order.begin(), order.end(), [&](const ClipRecord* a, const ClipRecord* b) {
        const std::uint64_t ka = subset_key(a->id, spec.seed);
        const std::uint64_t kb = subset_key(b->id, spec.seed);
        if (ka != kb) return ka < kb;
        return a->id < b->id;
    });

    Manifest subset;
    subset.schema_version = m.schema_version;
    const double budget_s = spec.target_hours * 3600.0;
    double used_s = 0.0;
    for (const ClipRecord* r : order) {
        if (used_s + r->duration_s <= budget_s + 1e-6) {
            subset.records.push_back(*r);
            used_s += r->duration_s;
        }
    }
    return subset;
}

void validate_training_config(const TrainingConfig& cfg) {
    if (!(cfg.initial_lr > 0.0)) {
        throw DataError("training config: initial_lr must be positive");
    }
    if (cfg.warmup_steps < 0 || cfg.total_steps <= 0) {
        throw DataError("training config: steps must be positive");
    }
    if (cfg.warmup_steps > cfg.total_steps) {
        throw DataError("training config: warmup_steps (" + std::to_string(cfg.warmup_steps) +
                        ") exceeds total_steps (" + std::to_string(cfg.total_steps) + ")");
    }
    if (cfg.optimizer_name.empty() || cfg.scheduler.empty()) {
        throw DataError("training config: optimizer_name and scheduler must be non-empty");
    }
}

void emit_training_config(const TrainingConfig& cfg, const std::filesystem::path& path) {
    validate_training_config(cfg);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write training config '" + path.string() + "'");
    out << "optimizer_name = \"" << cfg.optimizer_name << "\"\n";
    out << "initial_lr = " << ordered_json(cfg.initial_lr).dump() << '\n';
    out << "warmup_steps = " << cfg.warmup_steps << '\n';
    out << "total_steps = " << cfg.total_steps << '\n';
    out << "scheduler = \"" << cfg.scheduler << "\"\n";
}

TrainingConfig parse_training_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open training config '" + path.string() + "'");
    TrainingConfig cfg;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::string t = trim_copy(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw DataError("training config '" + path.string() + "' row " + std::to_string(row) +
                            ": expected key = value");
        }
        std::string key = trim_copy(t.substr(0, eq));
        std::string value = trim_copy(t.substr(eq + 1));
        auto unquote = [&](const std::string& v) {
            if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
            return v;
        };
        try {
            if (key == "optimizer_name") cfg.optimizer_name = unquote(value);
            else if (key == "initial_lr") cfg.initial_lr = std::stod(value);
            else if (key == "warmup_steps") cfg.warmup_steps = std::stoi(value);
            else if (key == "total_steps") cfg.total_steps = std::stoi(value);
            else if (key == "scheduler") cfg.scheduler = unquote(value);
            else throw DataError("training config '" + path.string() + "' row " + std::to_string(row) +
                                 ": unknown key '" + key + "'");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            throw DataError("training config '" + path.string() + "' row " + std::to_string(row) +
                            ": malformed value for '" + key + "'");
        }
    }
    validate_training_config(cfg);
    return cfg;
}

AudioValidation validate_audio(const ClipRecord& record) {
    AudioValidation v;
    v.id = record.id;
    if (!record.local_path) {
        throw DataError("record '" + record.id + "' has no local audio; fetch it first");
    }
    AudioBuffer audio = read_wav(*record.local_path);
    v.sample_count = audio.samples.size();
    v.sample_rate_hz = audio.sample_rate_hz;
    v.duration_s = audio.duration_s();
    v.expected_samples =
        static_cast<std::size_t>(std::llround(record.duration_s * record.sample_rate_hz));

    std::ostringstream msg;
    v.pass = true;
    if (audio.sample_rate_hz != record.sample_rate_hz) {
        v.pass = false;
        msg << "sample rate " << audio.sample_rate_hz << " Hz, expected " << record.sample_rate_hz
            << " Hz; ";
    }
    if (v.sample_count != v.expected_samples) {
        v.pass = false;
        msg << "measured " << v.sample_count << " samples, expected " << v.expected_samples << "; ";
    }
    v.message = v.pass ? "ok" : trim_copy(msg.str());
    return v;
}

} // namespace patwa
