#pragma once

#include <charconv>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "tvff/error.hpp"

namespace tvff {

/// A Gregorian year-month. Month arithmetic is exact integer arithmetic on
/// the running month index year*12 + (month-1).
class MonthStamp {
public:
    constexpr MonthStamp() = default;
    constexpr MonthStamp(int year, int month) : index_(year * 12 + (month - 1)) {
        if (month < 1 || month > 12) throw Error(ErrorCode::ConfigError, "month out of range");
    }

    static constexpr MonthStamp from_index(int index) {
        MonthStamp m;
        m.index_ = index;
        return m;
    }

    /// Parses "YYYYMM" (French-library keys) or "YYYY-MM".
    static MonthStamp parse(std::string_view text) {
        auto to_int = [&](std::string_view s) {
            int v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size())
                throw Error(ErrorCode::ConfigError, "bad month stamp '" + std::string(text) + "'");
            return v;
        };
        if (text.size() == 6) return {to_int(text.substr(0, 4)), to_int(text.substr(4, 2))};
        if (text.size() == 7 && text[4] == '-') return {to_int(text.substr(0, 4)), to_int(text.substr(5, 2))};
        throw Error(ErrorCode::ConfigError, "bad month stamp '" + std::string(text) + "'");
    }

    [[nodiscard]] constexpr int year() const noexcept { return index_ >= 0 ? index_ / 12 : (index_ - 11) / 12; }
    [[nodiscard]] constexpr int month() const noexcept { return index_ - year() * 12 + 1; }
    [[nodiscard]] constexpr int index() const noexcept { return index_; }

    [[nodiscard]] constexpr MonthStamp next() const noexcept { return from_index(index_ + 1); }
    [[nodiscard]] constexpr MonthStamp prev() const noexcept { return from_index(index_ - 1); }
    [[nodiscard]] constexpr MonthStamp operator+(int months) const noexcept { return from_index(index_ + months); }
    [[nodiscard]] constexpr MonthStamp operator-(int months) const noexcept { return from_index(index_ - months); }
    /// Signed number of months from `other` to *this.
    [[nodiscard]] constexpr int operator-(MonthStamp other) const noexcept { return index_ - other.index_; }

    constexpr auto operator<=>(const MonthStamp&) const = default;

    /// "YYYY-MM"
    [[nodiscard]] std::string str() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02d", year(), month());
        return buf;
    }
    /// "YYYYMM"
    [[nodiscard]] std::string key() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d%02d", year(), month());
        return buf;
    }

private:
    int index_ = 0;
};

}  // namespace tvff
