#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "tvff/error.hpp"

namespace tvff {

inline std::string read_file(const std::filesystem::path& path, ErrorCode on_failure = ErrorCode::CorruptDataset) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(on_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write-temp-then-rename, so readers never observe a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::ConfigError, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "cannot rename onto " + path.string() + ": " + ec.message());
}

}  // namespace tvff
