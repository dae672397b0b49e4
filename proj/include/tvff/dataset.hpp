#pragma once

#include <Eigen/Dense>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#ifdef _res
#undef _res  // glibc resolv.h; collides with Eigen parameter names
#endif
#include <openssl/evp.h>
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/french_csv.hpp"
#include "tvff/io.hpp"
#include "tvff/panel.hpp"
#include "tvff/zip.hpp"

namespace tvff {

enum class Region { US, Japan, Europe };
enum class DatasetKind { Factors3, Factors5, Momentum, Portfolios25 };

inline std::string to_string(Region r) {
    switch (r) {
        case Region::US: return "us";
        case Region::Japan: return "japan";
        case Region::Europe: return "europe";
    }
    return "?";
}

inline Region parse_region(std::string_view s) {
    if (s == "us") return Region::US;
    if (s == "japan") return Region::Japan;
    if (s == "europe") return Region::Europe;
    throw Error(ErrorCode::ConfigError, "unknown region '" + std::string(s) + "'");
}

inline std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::Factors3: return "factors3";
        case DatasetKind::Factors5: return "factors5";
        case DatasetKind::Momentum: return "momentum";
        case DatasetKind::Portfolios25: return "portfolios25";
    }
    return "?";
}

/// One file of the data library. Each id maps to one remote file name and one
/// cache directory.
struct DatasetId {
    Region region = Region::US;
    DatasetKind kind = DatasetKind::Factors3;

    [[nodiscard]] std::string slug() const { return to_string(region) + "-" + to_string(kind); }

    [[nodiscard]] std::string remote_name() const {
        if (region == Region::US) {
            switch (kind) {
                case DatasetKind::Factors3: return "F-F_Research_Data_Factors_CSV.zip";
                case DatasetKind::Factors5: return "F-F_Research_Data_5_Factors_2x3_CSV.zip";
                case DatasetKind::Momentum: return "F-F_Momentum_Factor_CSV.zip";
                case DatasetKind::Portfolios25: return "25_Portfolios_5x5_CSV.zip";
            }
        }
        const std::string prefix = region == Region::Japan ? "Japan" : "Europe";
        switch (kind) {
            case DatasetKind::Factors3: return prefix + "_3_Factors_CSV.zip";
            case DatasetKind::Factors5: return prefix + "_5_Factors_CSV.zip";
            case DatasetKind::Momentum: return prefix + "_Mom_Factor_CSV.zip";
            case DatasetKind::Portfolios25: return prefix + "_25_Portfolios_ME_BE-ME_CSV.zip";
        }
        return {};
    }

    [[nodiscard]] bool is_factor_file() const { return kind != DatasetKind::Portfolios25; }

    static DatasetId parse(std::string_view slug) {
        const auto dash = slug.find('-');
        if (dash == std::string_view::npos) throw Error(ErrorCode::ConfigError, "bad dataset id '" + std::string(slug) + "'");
        DatasetId id;
        id.region = parse_region(slug.substr(0, dash));
        const auto kind = slug.substr(dash + 1);
        if (kind == "factors3") id.kind = DatasetKind::Factors3;
        else if (kind == "factors5") id.kind = DatasetKind::Factors5;
        else if (kind == "momentum") id.kind = DatasetKind::Momentum;
        else if (kind == "portfolios25") id.kind = DatasetKind::Portfolios25;
        else throw Error(ErrorCode::ConfigError, "unknown dataset kind '" + std::string(kind) + "'");
        return id;
    }

    bool operator==(const DatasetId&) const = default;
};

inline std::vector<DatasetId> all_datasets() {
    std::vector<DatasetId> out;
    for (auto r : {Region::US, Region::Japan, Region::Europe})
        for (auto k : {DatasetKind::Factors3, DatasetKind::Factors5, DatasetKind::Momentum, DatasetKind::Portfolios25})
            out.push_back({r, k});
    return out;
}

inline const std::string kFrenchLibraryUrl = "https://mba.tuck.dartmouth.edu/pages/faculty/ken.french/ftp/";

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::CorruptDataset, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

/// Download date (UTC) used as the vintage tag, "YYYYMMDD".
inline std::string today_vintage() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[16];
    std::strftime(buf, sizeof buf, "%Y%m%d", &tm);
    return buf;
}

struct CachedFile {
    DatasetId id;
    std::string vintage;
    std::filesystem::path path;
};

/// Advisory lock on `<cache_dir>/.lock`, held for the object's lifetime.
class CacheLock {
public:
    explicit CacheLock(const std::filesystem::path& cache_dir) {
        std::filesystem::create_directories(cache_dir);
        fd_ = ::open((cache_dir / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) throw Error(ErrorCode::FetchFailed, "cannot lock cache " + cache_dir.string());
    }
    CacheLock(const CacheLock&) = delete;
    CacheLock& operator=(const CacheLock&) = delete;
    ~CacheLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }

private:
    int fd_ = -1;
};

/// Layout: `<root>/<dataset slug>/<vintage>/<remote file name>`. Files are
/// written once and never modified.
class DatasetCache {
public:
    explicit DatasetCache(std::filesystem::path root) : root_(std::move(root)) {}

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

    [[nodiscard]] std::filesystem::path path_for(const DatasetId& id, const std::string& vintage) const {
        return root_ / id.slug() / vintage / id.remote_name();
    }

    /// Vintages holding this dataset, oldest first.
    [[nodiscard]] std::vector<std::string> vintages(const DatasetId& id) const {
        std::vector<std::string> out;
        const auto dir = root_ / id.slug();
        std::error_code ec;
        if (!std::filesystem::is_directory(dir, ec)) return out;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const auto v = entry.path().filename().string();
            if (entry.is_directory() && std::filesystem::exists(path_for(id, v))) out.push_back(v);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    [[nodiscard]] std::optional<CachedFile> find(const DatasetId& id, const std::optional<std::string>& vintage = {}) const {
        if (vintage) {
            if (std::filesystem::exists(path_for(id, *vintage))) return CachedFile{id, *vintage, path_for(id, *vintage)};
            return std::nullopt;
        }
        const auto all = vintages(id);
        if (all.empty()) return std::nullopt;
        return CachedFile{id, all.back(), path_for(id, all.back())};
    }

    /// Stores raw bytes under a vintage. An existing file for that vintage is kept as is.
    CachedFile store(const DatasetId& id, const std::string& vintage, std::string_view bytes) const {
        CacheLock lock(root_);
        const auto path = path_for(id, vintage);
        if (!std::filesystem::exists(path)) write_file_atomic(path, bytes);
        return {id, vintage, path};
    }

private:
    std::filesystem::path root_;
};

using Downloader = std::function<std::string(const std::string& url)>;

/// HTTP(S) GET through cpp-httplib; follows redirects.
inline std::string http_get(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::FetchFailed, "bad url " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(20);
    client.set_read_timeout(120);
    auto res = client.Get(path);
    if (!res) throw Error(ErrorCode::FetchFailed, url + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(ErrorCode::FetchFailed, url + ": HTTP " + std::to_string(res->status));
    return res->body;
}

struct FetchOptions {
    bool offline = false;
    std::optional<std::string> vintage;  // offline: pin a vintage; online: tag to store under (default: today)
    std::string base_url = kFrenchLibraryUrl;
    Downloader downloader = http_get;
};

/// Parses a cached raw file into the panel of its first monthly table
/// (percent converted to decimal) and applies shape sanity checks.
inline ReturnPanel load_panel(const CachedFile& file) {
    const std::string raw = read_file(file.path, ErrorCode::FetchFailed);
    const std::string csv = unpack_single_csv(raw);
    const auto sections = parse_french_csv(csv);
    ReturnPanel panel;
    try {
        panel = to_panel(first_monthly_section(sections), true);
    } catch (const Error& e) {
        throw Error(ErrorCode::CorruptDataset, file.id.slug() + ": " + e.what());
    }
    if (panel.rows() < 12) throw Error(ErrorCode::CorruptDataset, file.id.slug() + ": fewer than 12 monthly rows");
    if (file.id.is_factor_file()) {
        const auto& v = panel.values();
        for (Eigen::Index t = 0; t < v.rows(); ++t)
            for (Eigen::Index j = 0; j < v.cols(); ++j)
                if (panel.present()(t, j) && std::abs(v(t, j)) > 1.0)
                    throw Error(ErrorCode::CorruptDataset, file.id.slug() + ": factor value outside [-1, 1] at " +
                                                               panel.date(static_cast<std::size_t>(t)).str());
    }
    return panel;
}

/// Returns the cached file for `id`, downloading it first unless offline.
/// Downloaded bytes are stored unmodified before anything parses them.
inline CachedFile fetch_file(const DatasetId& id, const std::filesystem::path& cache_dir, const FetchOptions& options = {}) {
    DatasetCache cache(cache_dir);
    if (options.offline) {
        if (auto hit = cache.find(id, options.vintage)) return *hit;
        throw Error(ErrorCode::FetchFailed, "offline and " + id.slug() + " is not cached under " + cache_dir.string() +
                                                (options.vintage ? " (vintage " + *options.vintage + ")" : ""));
    }
    const std::string vintage = options.vintage.value_or(today_vintage());
    if (auto hit = cache.find(id, vintage)) return *hit;
    std::string bytes;
    try {
        bytes = options.downloader(options.base_url + id.remote_name());
    } catch (const Error& e) {
        throw Error(ErrorCode::FetchFailed, e.detail() + " (cache miss for " + id.slug() + ")");
    }
    return cache.store(id, vintage, bytes);
}

/// Copies a user-supplied file into the cache under `vintage`.
inline CachedFile import_file(const DatasetId& id, const std::filesystem::path& cache_dir,
                              const std::filesystem::path& source, const std::string& vintage) {
    const std::string bytes = read_file(source, ErrorCode::FetchFailed);
    return DatasetCache(cache_dir).store(id, vintage, bytes);
}

inline ReturnPanel fetch(const DatasetId& id, const std::filesystem::path& cache_dir, bool offline) {
    FetchOptions options;
    options.offline = offline;
    return load_panel(fetch_file(id, cache_dir, options));
}

}  // namespace tvff
