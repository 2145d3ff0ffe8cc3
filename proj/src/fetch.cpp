#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "patwa/fetch.hpp"

#include "patwa/errors.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <unistd.h>
#include <thread>

namespace patwa {

namespace {

struct ParsedUrl {
    std::string scheme;
    std::string host_port; // "scheme://host[:port]" base for the client
    std::string target;    // path + query
};

ParsedUrl parse_url(const std::string& url, const std::string& id) {
    const std::string::size_type scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw DataError("record '" + id + "': malformed URL '" + url + "'");
    }
    ParsedUrl p;
    p.scheme = url.substr(0, scheme_end);
    if (p.scheme != "http" && p.scheme != "https") {
        throw DataError("record '" + id + "': unsupported scheme '" + p.scheme + "'");
    }
    const std::string::size_type path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        p.host_port = url;
        p.target = "/";
    } else {
        p.host_port = url.substr(0, path_start);
        p.target = url.substr(path_start);
    }
    if (p.host_port.size() == p.scheme.size() + 3) {
        throw DataError("record '" + id + "': malformed URL '" + url + "' (empty host)");
    }
    return p;
}

std::string sanitize_for_filename(const std::string& id) {
    std::string out;
    out.reserve(id.size());
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? std::string("clip") : out;
}

std::string url_extension(const std::string& url) {
    std::string path = url;
    const auto q = path.find_first_of("?#");
    if (q != std::string::npos) path.resize(q);
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return ".bin";
    std::string ext = path.substr(dot);
    if (ext.size() < 2 || ext.size() > 8) return ".bin";
    return ext;
}

void write_atomic(const std::filesystem::path& target, const std::string& body) {
    static std::atomic<unsigned> counter{0};
    const unsigned n = counter.fetch_add(1);
    std::filesystem::path tmp = target;
    tmp += ".tmp" + std::to_string(::getpid()) + "_" + std::to_string(n);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write cache file '" + tmp.string() + "'");
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw DataError("short write to cache file '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

} // namespace

std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (EVP_Digest(data, len, md, &md_len, EVP_sha256(), nullptr) != 1) {
        throw DataError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * md_len);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "' for hashing");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes.data(), bytes.size());
}

std::filesystem::path cache_path_for(const ClipRecord& record, const std::filesystem::path& cache_dir) {
    return cache_dir / (sanitize_for_filename(record.id) + url_extension(record.audio_url));
}

ClipRecord fetch_audio(const ClipRecord& record, const FetchOptions& options) {
    if (options.cache_dir.empty()) throw UsageError("fetch: cache directory not set");
    std::filesystem::create_directories(options.cache_dir);

    const std::filesystem::path target = cache_path_for(record, options.cache_dir);
    ClipRecord out = record;
    out.local_path = target.string();

    if (std::filesystem::exists(target)) {
        const std::string digest = "sha256:" + sha256_hex_file(target);
        if (!record.checksum) {
            out.checksum = digest;
            return out;
        }
        if (*record.checksum == digest) {
            return out; // cache hit, no network
        }
        // Stale cache entry; fall through and refetch.
    }

    const ParsedUrl url = parse_url(record.audio_url, record.id);

    std::string last_error;
    int delay_ms = options.backoff_initial_ms;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
        httplib::Client client(url.host_port);
        client.set_follow_location(true);
        client.set_connection_timeout(options.timeout_s, 0);
        client.set_read_timeout(options.timeout_s, 0);

        httplib::Result res = client.Get(url.target);
        if (!res) {
            last_error = "connection error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 404) {
            throw DataError("record '" + record.id + "': remote missing (404) at " + record.audio_url);
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw DataError("record '" + record.id + "': unexpected HTTP status " +
                            std::to_string(res->status) + " from " + record.audio_url);
        }

        const std::string digest = "sha256:" + sha256_hex(res->body.data(), res->body.size());
        if (record.checksum && *record.checksum != digest) {
            throw DataError("record '" + record.id + "': checksum mismatch (expected " +
                            *record.checksum + ", fetched " + digest + ")");
        }
        write_atomic(target, res->body);
        out.checksum = digest;
        return out;
    }

    throw DataError("record '" + record.id + "': network failure after " +
                    std::to_string(options.retries + 1) + " attempts (" + last_error + ")");
}

} // namespace patwa
