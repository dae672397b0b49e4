#pragma once

#include <zlib.h>

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tvff/error.hpp"

namespace tvff {

struct ZipMember {
    std::string name;
    std::string data;
};

namespace detail {

inline std::uint32_t le32(std::string_view b, std::size_t at) {
    if (at + 4 > b.size()) throw Error(ErrorCode::CorruptDataset, "zip: truncated");
    return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

inline std::uint16_t le16(std::string_view b, std::size_t at) {
    if (at + 2 > b.size()) throw Error(ErrorCode::CorruptDataset, "zip: truncated");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                      static_cast<unsigned char>(b[at + 1]) << 8);
}

inline std::string inflate_raw(std::string_view compressed, std::size_t expected_size) {
    std::string out(expected_size, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error(ErrorCode::CorruptDataset, "zip: inflateInit failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    zs.avail_in = static_cast<uInt>(compressed.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected_size)
        throw Error(ErrorCode::CorruptDataset, "zip: deflate stream is damaged");
    return out;
}

}  // namespace detail

inline bool looks_like_zip(std::string_view bytes) {
    return bytes.size() >= 4 && bytes.substr(0, 4) == std::string_view("PK\x03\x04", 4);
}

/// Reads every member of a ZIP archive (stored or deflated entries only).
inline std::vector<ZipMember> unzip(std::string_view bytes) {
    using detail::le16;
    using detail::le32;
    constexpr std::uint32_t kEndSig = 0x06054b50;
    constexpr std::uint32_t kCentralSig = 0x02014b50;
    constexpr std::uint32_t kLocalSig = 0x04034b50;

    if (bytes.size() < 22) throw Error(ErrorCode::CorruptDataset, "zip: too short");
    std::size_t eocd = bytes.size() - 22;
    for (;;) {
        if (le32(bytes, eocd) == kEndSig) break;
        if (eocd == 0 || bytes.size() - eocd > 22 + 0xFFFF)
            throw Error(ErrorCode::CorruptDataset, "zip: end of central directory not found");
        --eocd;
    }
    const std::size_t entries = le16(bytes, eocd + 10);
    std::size_t pos = le32(bytes, eocd + 16);

    std::vector<ZipMember> members;
    for (std::size_t e = 0; e < entries; ++e) {
        if (le32(bytes, pos) != kCentralSig) throw Error(ErrorCode::CorruptDataset, "zip: bad central header");
        const auto method = le16(bytes, pos + 10);
        const std::size_t csize = le32(bytes, pos + 20);
        const std::size_t usize = le32(bytes, pos + 24);
        const std::size_t name_len = le16(bytes, pos + 28);
        const std::size_t extra_len = le16(bytes, pos + 30);
        const std::size_t comment_len = le16(bytes, pos + 32);
        const std::size_t local = le32(bytes, pos + 42);
        if (pos + 46 + name_len > bytes.size()) throw Error(ErrorCode::CorruptDataset, "zip: truncated name");
        std::string name(bytes.substr(pos + 46, name_len));
        pos += 46 + name_len + extra_len + comment_len;

        if (le32(bytes, local) != kLocalSig) throw Error(ErrorCode::CorruptDataset, "zip: bad local header");
        const std::size_t data_at = local + 30 + le16(bytes, local + 26) + le16(bytes, local + 28);
        if (data_at + csize > bytes.size()) throw Error(ErrorCode::CorruptDataset, "zip: truncated member");
        const auto payload = bytes.substr(data_at, csize);

        ZipMember m;
        m.name = std::move(name);
        if (method == 0)
            m.data = std::string(payload);
        else if (method == 8)
            m.data = detail::inflate_raw(payload, usize);
        else
            throw Error(ErrorCode::CorruptDataset, "zip: unsupported compression method " + std::to_string(method));
        if (!m.name.empty() && m.name.back() == '/') continue;
        members.push_back(std::move(m));
    }
    return members;
}

/// The single CSV inside a library ZIP, or the input unchanged when it is not a ZIP.
inline std::string unpack_single_csv(std::string_view bytes) {
    if (!looks_like_zip(bytes)) return std::string(bytes);
    auto members = unzip(bytes);
    std::vector<ZipMember*> csv;
    for (auto& m : members) {
        const auto dot = m.name.rfind('.');
        std::string ext = dot == std::string::npos ? "" : m.name.substr(dot);
        for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".csv") csv.push_back(&m);
    }
    if (csv.size() != 1)
        throw Error(ErrorCode::CorruptDataset, "zip: expected exactly one CSV member, found " + std::to_string(csv.size()));
    return std::move(csv.front()->data);
}

}  // namespace tvff
