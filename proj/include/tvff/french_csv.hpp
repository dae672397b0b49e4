#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/month.hpp"
#include "tvff/panel.hpp"

namespace tvff {

/// One table of a French data-library CSV. Missing cells (the -99.99 and -999
/// sentinels) are stored as NaN.
struct RawSection {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::string> keys;  // "YYYYMM" or "YYYY"
    std::vector<std::vector<double>> rows;

    [[nodiscard]] bool monthly() const { return !keys.empty() && keys.front().size() == 6; }

    bool operator==(const RawSection& o) const {
        if (title != o.title || header != o.header || keys != o.keys || rows.size() != o.rows.size()) return false;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != o.rows[r].size()) return false;
            for (std::size_t c = 0; c < rows[r].size(); ++c) {
                const double a = rows[r][c];
                const double b = o.rows[r][c];
                if (!(a == b || (std::isnan(a) && std::isnan(b)))) return false;
            }
        }
        return true;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline bool is_date_key(std::string_view s) {
    if (s.size() != 4 && s.size() != 6) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline bool is_missing_sentinel(double v) { return v == -99.99 || v == -999.0; }

inline double parse_cell(std::string_view cell, std::size_t line_no) {
    double v = 0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || p != cell.data() + cell.size())
        throw Error(ErrorCode::CorruptDataset,
                    "line " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
    return is_missing_sentinel(v) ? std::nan("") : v;
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "-99.99";
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace detail

/// Splits a French data-library CSV into its tables.
///
/// A table is: optional title lines, a header row whose first cell is empty,
/// then rows keyed by YYYYMM or YYYY. It ends at a blank line, a non-data line
/// or end of input. Free text outside tables is ignored. CRLF and LF are
/// treated alike.
inline std::vector<RawSection> parse_french_csv(std::istream& in) {
    std::vector<RawSection> sections;
    std::vector<std::string> pending_titles;
    RawSection* current = nullptr;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = detail::trim(line);
        if (text.empty()) {
            current = nullptr;
            pending_titles.clear();
            continue;
        }
        const auto cells = detail::split_cells(text);

        if (current != nullptr && detail::is_date_key(cells.front())) {
            if (cells.size() != current->header.size() + 1)
                throw Error(ErrorCode::RaggedRow, "line " + std::to_string(line_no) + ": expected " +
                                                      std::to_string(current->header.size()) + " values, got " +
                                                      std::to_string(cells.size() - 1));
            std::vector<double> row;
            row.reserve(cells.size() - 1);
            for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(detail::parse_cell(cells[c], line_no));
            current->keys.emplace_back(cells.front());
            current->rows.push_back(std::move(row));
            continue;
        }

        if (cells.size() >= 2 && cells.front().empty()) {
            RawSection s;
            for (std::size_t i = 0; i < pending_titles.size(); ++i) {
                if (i) s.title += ' ';
                s.title += pending_titles[i];
            }
            for (std::size_t c = 1; c < cells.size(); ++c) s.header.emplace_back(cells[c]);
            sections.push_back(std::move(s));
            current = &sections.back();
            pending_titles.clear();
            continue;
        }

        current = nullptr;
        pending_titles.emplace_back(text);
    }
    return sections;
}

inline std::vector<RawSection> parse_french_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_french_csv(in);
}

/// Writes sections in the library's layout; parse_french_csv reads it back exactly.
inline std::string serialize_french_csv(const std::vector<RawSection>& sections) {
    std::string out;
    for (const auto& s : sections) {
        if (!s.title.empty()) out += s.title + "\n";
        for (const auto& h : s.header) out += "," + h;
        out += "\n";
        for (std::size_t r = 0; r < s.rows.size(); ++r) {
            out += s.keys[r];
            for (double v : s.rows[r]) out += "," + detail::format_double(v);
            out += "\n";
        }
        out += "\n";
    }
    return out;
}

inline const RawSection& first_monthly_section(const std::vector<RawSection>& sections) {
    for (const auto& s : sections)
        if (s.monthly()) return s;
    throw Error(ErrorCode::NoMonthlySection, "no section keyed by YYYYMM");
}

/// Converts a monthly section to a panel, dividing by 100 when `percent` is set.
inline ReturnPanel to_panel(const RawSection& section, bool percent) {
    if (!section.monthly()) throw Error(ErrorCode::NoMonthlySection, "section '" + section.title + "' is not monthly");
    const auto T = static_cast<Eigen::Index>(section.rows.size());
    const auto n = static_cast<Eigen::Index>(section.header.size());
    const MonthStamp first = MonthStamp::parse(section.keys.front());
    Matrix values(T, n);
    BoolMatrix present(T, n);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& key = section.keys[static_cast<std::size_t>(t)];
        if (key.size() != 6 || MonthStamp::parse(key) != first + static_cast<int>(t))
            throw Error(ErrorCode::GapInSeries, "non-contiguous month key " + key);
        const auto& row = section.rows[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = row[static_cast<std::size_t>(j)];
            present(t, j) = !std::isnan(v);
            values(t, j) = percent ? v / 100.0 : v;
        }
    }
    return {first, section.header, std::move(values), std::move(present)};
}

}  // namespace tvff
