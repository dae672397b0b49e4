#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/panel.hpp"

namespace tvff {

enum class DfLevel { OnePercent, FivePercent, TenPercent };

inline DfLevel parse_df_level(double alpha) {
    if (std::abs(alpha - 0.01) < 1e-12) return DfLevel::OnePercent;
    if (std::abs(alpha - 0.05) < 1e-12) return DfLevel::FivePercent;
    if (std::abs(alpha - 0.10) < 1e-12) return DfLevel::TenPercent;
    throw Error(ErrorCode::ConfigError, "Dickey-Fuller critical values exist for 1%, 5% and 10% only");
}

/// Critical value of the Dickey-Fuller t-statistic, regression with a
/// constant and no trend.
///
/// Source: Fuller (1976), Table 8.5.2, as reprinted in Hamilton (1994),
/// Table B.6, case 2. Values are interpolated linearly in 1/n between the
/// tabulated sample sizes (n = infinity at 1/n = 0); n below 25 uses the
/// n = 25 row.
inline double df_critical_value(DfLevel level, std::size_t n_obs) {
    struct Row {
        double inv_n;
        std::array<double, 3> cv;  // 1%, 5%, 10%
    };
    static constexpr std::array<Row, 6> table{{
        {1.0 / 25, {-3.75, -3.00, -2.63}},
        {1.0 / 50, {-3.58, -2.93, -2.60}},
        {1.0 / 100, {-3.51, -2.89, -2.58}},
        {1.0 / 250, {-3.46, -2.88, -2.57}},
        {1.0 / 500, {-3.44, -2.87, -2.57}},
        {0.0, {-3.43, -2.86, -2.57}},
    }};
    const auto col = static_cast<std::size_t>(level);
    const double x = n_obs == 0 ? table[0].inv_n : std::min(1.0 / static_cast<double>(n_obs), table[0].inv_n);
    for (std::size_t r = 0; r + 1 < table.size(); ++r) {
        const auto& a = table[r];
        const auto& b = table[r + 1];
        if (x <= a.inv_n && x >= b.inv_n) {
            const double w = (a.inv_n - x) / (a.inv_n - b.inv_n);
            return a.cv[col] + w * (b.cv[col] - a.cv[col]);
        }
    }
    return table.back().cv[col];
}

inline double df_critical_value(double alpha, std::size_t n_obs) { return df_critical_value(parse_df_level(alpha), n_obs); }

/// Augmentation order search. With `fixed_lag` set no search is done.
struct LagSelection {
    std::optional<std::size_t> max_lag;  // default: floor(12 (T/100)^(1/4))
    std::optional<std::size_t> fixed_lag;

    [[nodiscard]] std::size_t resolved_max(std::size_t T) const {
        if (fixed_lag) return *fixed_lag;
        if (max_lag) return *max_lag;
        return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(T) / 100.0, 0.25)));
    }
};

struct AdfResult {
    double statistic = 0;  // t-ratio on the lagged level
    std::size_t lag = 0;
    std::size_t n_obs = 0;  // T - lag - 1
    double critical_1pct = 0;
    bool reject_1pct = false;
};

namespace detail {

struct OlsT {
    double rss = 0;
    double t_stat = 0;
};

/// OLS of dy_t on [1, y_{t-1}, dy_{t-1}, ..., dy_{t-lag}] for t in [first, T).
inline OlsT adf_regression(std::span<const double> y, std::size_t lag, std::size_t first) {
    const std::size_t T = y.size();
    const auto n = static_cast<Eigen::Index>(T - first);
    const auto K = static_cast<Eigen::Index>(2 + lag);
    Matrix X(n, K);
    Vector dy(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::size_t t = first + static_cast<std::size_t>(r);
        dy(r) = y[t] - y[t - 1];
        X(r, 0) = 1.0;
        X(r, 1) = y[t - 1];
        for (std::size_t j = 1; j <= lag; ++j) X(r, static_cast<Eigen::Index>(1 + j)) = y[t - j] - y[t - j - 1];
    }
    Eigen::HouseholderQR<Matrix> qr(X);
    const Matrix R = qr.matrixQR().topRows(K).triangularView<Eigen::Upper>();
    const double scale = R.diagonal().cwiseAbs().maxCoeff();
    if (!(R.diagonal().cwiseAbs().minCoeff() > 1e-12 * scale)) throw Error(ErrorCode::Singular, "ADF regression is singular");
    const Vector beta = qr.solve(dy);
    OlsT out;
    out.rss = (dy - X * beta).squaredNorm();
    // (X'X)^{-1}_{11} = |row 1 of R^{-1}|^2
    const Matrix Rinv = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(K, K));
    const double s2 = out.rss / static_cast<double>(n - K);
    out.t_stat = beta(1) / std::sqrt(s2 * Rinv.row(1).squaredNorm());
    return out;
}

}  // namespace detail

/// Augmented Dickey-Fuller test, constant and no trend:
///
///     dy_t = c + rho y_{t-1} + sum_{j=1..L} phi_j dy_{t-j} + e_t
///
/// L minimizes BIC = n log(RSS/n) + (L+2) log n over 0..max_lag, all
/// candidates fitted on the common sample that drops the first max_lag + 1
/// observations. The chosen order is then refitted on all T - L - 1 usable rows.
inline AdfResult adf_test(std::span<const double> series, const LagSelection& selection = {}) {
    const std::size_t T = series.size();
    const std::size_t max_lag = selection.resolved_max(T);
    if (T < max_lag + 10) throw Error(ErrorCode::TooShort, "series too short for the lag search");
    for (double v : series)
        if (!std::isfinite(v)) throw Error(ErrorCode::GapInSeries, "missing value in series");

    std::size_t lag = max_lag;
    if (!selection.fixed_lag) {
        const std::size_t first = max_lag + 1;
        const double n = static_cast<double>(T - first);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t L = 0; L <= max_lag; ++L) {
            const auto fit = detail::adf_regression(series, L, first);
            const double bic = n * std::log(fit.rss / n) + static_cast<double>(L + 2) * std::log(n);
            if (bic < best) {
                best = bic;
                lag = L;
            }
        }
    }
    AdfResult out;
    out.lag = lag;
    out.n_obs = T - lag - 1;
    out.statistic = detail::adf_regression(series, lag, lag + 1).t_stat;
    out.critical_1pct = df_critical_value(DfLevel::OnePercent, out.n_obs);
    out.reject_1pct = out.statistic < out.critical_1pct;
    return out;
}

inline AdfResult adf_test(const Vector& series, const LagSelection& selection = {}) {
    return adf_test(std::span<const double>(series.data(), static_cast<std::size_t>(series.size())), selection);
}

}  // namespace tvff
