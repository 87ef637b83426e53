#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "snapshot.hpp"

namespace mblz {

inline constexpr const char* code_version = "0.1.0";

inline std::string sha256_hex(const void* data, std::size_t size) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 || EVP_DigestUpdate(ctx.get(), data, size) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw Error("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

inline std::string sha256_hex(std::string_view s) { return sha256_hex(s.data(), s.size()); }

inline std::string sha256_file(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return sha256_hex(bytes.data(), bytes.size());
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp = std::chrono::system_clock::now()) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct ManifestFile {
    std::string path;  // relative to the manifest's directory
    std::uintmax_t bytes = 0;
    std::string sha256;
};

/// Provenance record written next to every run's outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t rng_seed = 0;
    int threads = 1;
    std::string wall_start;
    std::string wall_end;
    std::vector<std::string> warnings;
    std::vector<ManifestFile> files;

    /// Inventory the given files, relative to `root`, in the order given.
    void add_files(const std::filesystem::path& root, const std::vector<std::filesystem::path>& rel) {
        for (const auto& r : rel) {
            const auto full = root / r;
            files.push_back({r.generic_string(), std::filesystem::file_size(full), sha256_file(full)});
        }
    }

    // Wall times are left out so identical runs share a digest.
    nlohmann::json content() const {
        nlohmann::json j;
        j["format"] = "mblz-manifest";
        j["format_version"] = 1;
        j["code_version"] = code_version;
        j["command"] = command;
        j["config"] = config;
        j["rng_seed"] = rng_seed;
        j["threads"] = threads;
        j["warnings"] = warnings;
        j["files"] = nlohmann::json::array();
        for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
        return j;
    }
    std::string digest() const { return sha256_hex(content().dump()); }

    nlohmann::json to_json() const {
        nlohmann::json j = content();
        j["wall_time"] = {{"start", wall_start}, {"end", wall_end}};
        j["digest"] = digest();
        return j;
    }

    static RunManifest from_json(const nlohmann::json& j) {
        try {
            if (j.at("format") != "mblz-manifest") throw FormatError("manifest: wrong format tag");
            RunManifest m;
            m.command = j.at("command");
            m.config = j.at("config");
            m.rng_seed = j.at("rng_seed");
            m.threads = j.at("threads");
            m.warnings = j.at("warnings").get<std::vector<std::string>>();
            for (const auto& f : j.at("files")) m.files.push_back({f.at("path"), f.at("bytes"), f.at("sha256")});
            if (j.contains("wall_time")) {
                m.wall_start = j["wall_time"].value("start", "");
                m.wall_end = j["wall_time"].value("end", "");
            }
            if (j.contains("digest") && j["digest"] != m.digest()) throw FormatError("manifest: digest mismatch");
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("manifest: ") + e.what());
        }
    }

    void write(const std::filesystem::path& path) const { write_text_file(path, to_json().dump(2) + "\n"); }

    static RunManifest read(const std::filesystem::path& path) {
        const auto bytes = read_bytes(path);
        try {
            return from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("manifest: ") + e.what());
        }
    }

    /// Recompute every file digest under `root`; returns the mismatching paths.
    std::vector<std::string> verify(const std::filesystem::path& root) const {
        std::vector<std::string> bad;
        for (const auto& f : files) {
            const auto full = root / f.path;
            if (!std::filesystem::exists(full) || sha256_file(full) != f.sha256) bad.push_back(f.path);
        }
        return bad;
    }

private:
    static void write_text_file(const std::filesystem::path& path, const std::string& s) {
        write_bytes(path, std::vector<unsigned char>(s.begin(), s.end()));
    }
};

}  // namespace mblz
