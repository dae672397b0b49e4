#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "support/zip_writer.hpp"
#include "tvff/dataset.hpp"
#include "tvff/io.hpp"
#include "tvff/month.hpp"

namespace tvff::testing {

inline std::string pct(double decimal) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", decimal * 100.0);
    return std::string(buf) == "-0.00" ? "0.00" : buf;
}

inline std::vector<std::string> portfolio_labels() {
    std::vector<std::string> out;
    for (int s = 1; s <= 5; ++s)
        for (int b = 1; b <= 5; ++b) {
            if (s == 1 && b == 1) out.emplace_back("SMALL LoBM");
            else if (s == 1 && b == 5) out.emplace_back("SMALL HiBM");
            else if (s == 5 && b == 1) out.emplace_back("BIG LoBM");
            else if (s == 5 && b == 5) out.emplace_back("BIG HiBM");
            else out.push_back("ME" + std::to_string(s) + " BM" + std::to_string(b));
        }
    return out;
}

/// Synthetic stand-in for one region of the data library. All files are
/// drawn from one monthly factor history, so overlapping files agree.
struct SyntheticLibrary {
    Region region = Region::US;
    MonthStamp end{2022, 3};
    std::uint64_t seed = 1;
    bool capm_only = true;  // portfolio loadings: beta_Mkt = 1, all others 0
    double noise_sd = 0.015;
    bool crlf = false;

    // Mkt-RF, SMB, HML, RMW, CMA, WML, RF
    static constexpr int kSeries = 7;

    [[nodiscard]] MonthStamp origin() const { return region == Region::US ? MonthStamp{1926, 7} : MonthStamp{1990, 7}; }

    [[nodiscard]] MonthStamp start(DatasetKind kind) const {
        if (region == Region::US) {
            if (kind == DatasetKind::Factors5) return {1963, 7};
            if (kind == DatasetKind::Momentum) return {1927, 1};
            return {1926, 7};
        }
        if (kind == DatasetKind::Momentum) return {1990, 11};
        return {1990, 7};
    }

    [[nodiscard]] std::vector<std::array<double, kSeries>> factor_history() const {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n(0.0, 1.0);
        const int T = end - origin() + 1;
        std::vector<std::array<double, kSeries>> out(static_cast<std::size_t>(T));
        const std::array<double, 6> mu{0.006, 0.002, 0.003, 0.002, 0.002, 0.005};
        const std::array<double, 6> sd{0.05, 0.03, 0.03, 0.02, 0.02, 0.04};
        for (auto& row : out) {
            for (int j = 0; j < 6; ++j) row[static_cast<std::size_t>(j)] = mu[static_cast<std::size_t>(j)] + sd[static_cast<std::size_t>(j)] * n(rng);
            row[6] = 0.002 + 0.0005 * std::abs(n(rng));
        }
        for (auto& row : out)
            for (auto& v : row) v = std::round(v * 10000.0) / 10000.0;  // two decimals in percent
        return out;
    }

    [[nodiscard]] std::string csv(DatasetKind kind) const {
        const auto hist = factor_history();
        const std::string nl = crlf ? "\r\n" : "\n";
        const MonthStamp first = start(kind);
        std::string out = "This file was created by a synthetic generator for tests." + nl;
        out += "Values are percent returns." + nl + nl;

        std::vector<std::string> header;
        std::vector<std::vector<double>> rows;
        const int T = end - first + 1;
        const int offset = first - origin();
        if (kind == DatasetKind::Portfolios25) {
            header = portfolio_labels();
            std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
            std::normal_distribution<double> n(0.0, noise_sd);
            for (int t = 0; t < T; ++t) {
                const auto& f = hist[static_cast<std::size_t>(t + offset)];
                std::vector<double> row;
                for (int p = 0; p < 25; ++p) {
                    double r = f[6] + f[0];
                    if (!capm_only) {
                        const int size = p / 5;
                        const int value = p % 5;
                        r += (1.0 - 0.3 * size) * f[1] + (-0.4 + 0.25 * value) * f[2];
                    }
                    row.push_back(r + n(rng));
                }
                rows.push_back(std::move(row));
            }
        } else {
            std::vector<int> cols;
            if (kind == DatasetKind::Factors3) header = {"Mkt-RF", "SMB", "HML", "RF"}, cols = {0, 1, 2, 6};
            if (kind == DatasetKind::Factors5) header = {"Mkt-RF", "SMB", "HML", "RMW", "CMA", "RF"}, cols = {0, 1, 2, 3, 4, 6};
            if (kind == DatasetKind::Momentum) {
                header = {region == Region::US ? "Mom" : "WML"};
                cols = {5};
            }
            for (int t = 0; t < T; ++t) {
                std::vector<double> row;
                for (int c : cols) row.push_back(hist[static_cast<std::size_t>(t + offset)][static_cast<std::size_t>(c)]);
                rows.push_back(std::move(row));
            }
        }

        auto section = [&](const std::string& title, bool annual) {
            if (!title.empty()) out += title + nl;
            for (const auto& h : header) out += "," + h;
            out += nl;
            if (!annual) {
                for (int t = 0; t < T; ++t) {
                    out += (first + t).key();
                    for (double v : rows[static_cast<std::size_t>(t)]) out += "," + pct(v);
                    out += nl;
                }
            } else {
                for (int y = first.year() + 1; y <= end.year() - 1; ++y) {
                    out += std::to_string(y);
                    for (std::size_t c = 0; c < header.size(); ++c) out += ",1.00";
                    out += nl;
                }
            }
            out += nl;
        };
        section(kind == DatasetKind::Portfolios25 ? "  Average Value Weighted Returns -- Monthly" : "", false);
        if (kind == DatasetKind::Portfolios25) {
            section("  Average Equal Weighted Returns -- Monthly", false);
        }
        section(" Annual Factors: January-December ", true);
        out += "Copyright synthetic" + nl;
        return out;
    }

    [[nodiscard]] std::string zip(DatasetKind kind) const {
        auto name = DatasetId{region, kind}.remote_name();
        name = name.substr(0, name.size() - 8) + ".CSV";  // "_CSV.zip" -> ".CSV"
        return make_zip({{name, csv(kind), true}});
    }

    /// Writes all four files into `cache` under `vintage`.
    void install(const std::filesystem::path& cache, const std::string& vintage) const {
        DatasetCache c(cache);
        for (auto kind : {DatasetKind::Factors3, DatasetKind::Factors5, DatasetKind::Momentum, DatasetKind::Portfolios25})
            c.store({region, kind}, vintage, zip(kind));
    }
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("tvff_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace tvff::testing
