#pragma once

#include "patwa/manifest.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace patwa {

struct FetchOptions {
    std::filesystem::path cache_dir;
    int timeout_s = 30;
    int retries = 3;            // retry attempts after the first try
    int backoff_initial_ms = 250; // doubles per retry
};

// Downloads the record's audio into the cache if it is not already present
// with a matching checksum. Follows redirects, retries transient failures
// with exponential backoff, writes atomically (temp file + rename) and
// records a "sha256:<hex>" checksum. Pure cache hits make no network call.
ClipRecord fetch_audio(const ClipRecord& record, const FetchOptions& options);

// Cache file location for a record (id-derived name, extension from the URL).
std::filesystem::path cache_path_for(const ClipRecord& record, const std::filesystem::path& cache_dir);

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex_file(const std::filesystem::path& path);

} // namespace patwa
