#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/month.hpp"

namespace tvff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Date-indexed T x n matrix of decimal monthly returns.
///
/// Dates are contiguous and strictly increasing, so the panel stores only the
/// first month. `present(t, j)` is false for missing cells; missing values are
/// held as NaN in `values()`.
class ReturnPanel {
public:
    ReturnPanel() = default;

    ReturnPanel(MonthStamp first, std::vector<std::string> names, Matrix values)
        : ReturnPanel(first, std::move(names), values, values.array().isFinite()) {}

    ReturnPanel(MonthStamp first, std::vector<std::string> names, Matrix values, BoolMatrix present)
        : first_(first), names_(std::move(names)), values_(std::move(values)), present_(std::move(present)) {
        if (static_cast<std::size_t>(values_.cols()) != names_.size())
            throw Error(ErrorCode::ShapeError, "column count does not match label count");
        if (present_.rows() != values_.rows() || present_.cols() != values_.cols())
            throw Error(ErrorCode::ShapeError, "mask shape does not match values");
        for (Eigen::Index t = 0; t < values_.rows(); ++t)
            for (Eigen::Index j = 0; j < values_.cols(); ++j) {
                if (!present_(t, j))
                    values_(t, j) = std::nan("");
                else if (!std::isfinite(values_(t, j)))
                    throw Error(ErrorCode::ShapeError, "non-finite value in a present cell");
            }
    }

    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    [[nodiscard]] std::size_t cols() const noexcept { return names_.size(); }
    [[nodiscard]] bool empty() const noexcept { return rows() == 0; }

    [[nodiscard]] MonthStamp first() const noexcept { return first_; }
    [[nodiscard]] MonthStamp last() const noexcept { return first_ + static_cast<int>(rows()) - 1; }
    [[nodiscard]] MonthStamp date(std::size_t t) const noexcept { return first_ + static_cast<int>(t); }
    [[nodiscard]] std::vector<MonthStamp> dates() const {
        std::vector<MonthStamp> out;
        out.reserve(rows());
        for (std::size_t t = 0; t < rows(); ++t) out.push_back(date(t));
        return out;
    }

    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] const BoolMatrix& present() const noexcept { return present_; }
    [[nodiscard]] bool complete() const { return present_.all(); }

    [[nodiscard]] std::optional<std::size_t> find(const std::string& label) const {
        auto it = std::find(names_.begin(), names_.end(), label);
        if (it == names_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }

    [[nodiscard]] std::size_t index_of(const std::string& label) const {
        if (auto j = find(label)) return *j;
        throw Error(ErrorCode::MissingSeries, "series '" + label + "' not in panel");
    }

    [[nodiscard]] Vector column(const std::string& label) const { return values_.col(index_of(label)); }

    /// Rows [from, to] clipped to the panel's range; an empty result is allowed.
    [[nodiscard]] ReturnPanel slice(MonthStamp from, MonthStamp to) const {
        const MonthStamp lo = std::max(from, first_);
        const MonthStamp hi = std::min(to, last());
        if (empty() || hi < lo) return {lo, names_, Matrix(0, values_.cols()), BoolMatrix(0, values_.cols())};
        const auto r0 = lo - first_;
        const auto n = hi - lo + 1;
        return {lo, names_, values_.middleRows(r0, n), present_.middleRows(r0, n)};
    }

    [[nodiscard]] ReturnPanel select(const std::vector<std::string>& labels) const {
        Matrix v(values_.rows(), static_cast<Eigen::Index>(labels.size()));
        BoolMatrix p(values_.rows(), static_cast<Eigen::Index>(labels.size()));
        for (std::size_t j = 0; j < labels.size(); ++j) {
            const auto src = static_cast<Eigen::Index>(index_of(labels[j]));
            v.col(static_cast<Eigen::Index>(j)) = values_.col(src);
            p.col(static_cast<Eigen::Index>(j)) = present_.col(src);
        }
        return {first_, labels, std::move(v), std::move(p)};
    }

    [[nodiscard]] ReturnPanel renamed(const std::string& from, const std::string& to) const {
        auto names = names_;
        names[index_of(from)] = to;
        return {first_, std::move(names), values_, present_};
    }

    bool operator==(const ReturnPanel& o) const {
        if (first_ != o.first_ || names_ != o.names_ || rows() != o.rows()) return false;
        if ((present_ != o.present_).any()) return false;
        for (Eigen::Index t = 0; t < values_.rows(); ++t)
            for (Eigen::Index j = 0; j < values_.cols(); ++j)
                if (present_(t, j) && values_(t, j) != o.values_(t, j)) return false;
        return true;
    }

private:
    MonthStamp first_{};
    std::vector<std::string> names_;
    Matrix values_;
    BoolMatrix present_;
};

/// Intersects the date ranges of `panels` and concatenates their columns.
/// Leading and trailing rows with any missing cell are dropped; a missing cell
/// strictly inside the remaining range is a GapInSeries error.
inline ReturnPanel align(std::span<const ReturnPanel> panels) {
    if (panels.empty()) throw Error(ErrorCode::NoOverlap, "no panels to align");
    std::unordered_set<std::string> seen;
    MonthStamp lo = panels.front().first();
    MonthStamp hi = panels.front().last();
    for (const auto& p : panels) {
        if (p.empty()) throw Error(ErrorCode::NoOverlap, "empty panel");
        for (const auto& n : p.names())
            if (!seen.insert(n).second) throw Error(ErrorCode::ShapeError, "duplicate series label '" + n + "'");
        lo = std::max(lo, p.first());
        hi = std::min(hi, p.last());
    }
    if (hi < lo) throw Error(ErrorCode::NoOverlap, "date ranges do not intersect");

    const auto T = static_cast<Eigen::Index>(hi - lo + 1);
    Matrix values(T, static_cast<Eigen::Index>(seen.size()));
    BoolMatrix present(T, values.cols());
    std::vector<std::string> names;
    Eigen::Index c = 0;
    for (const auto& p : panels) {
        const auto r0 = lo - p.first();
        const auto n = static_cast<Eigen::Index>(p.cols());
        values.middleCols(c, n) = p.values().middleRows(r0, T);
        present.middleCols(c, n) = p.present().middleRows(r0, T);
        names.insert(names.end(), p.names().begin(), p.names().end());
        c += n;
    }

    Eigen::Index first = 0;
    Eigen::Index last = T - 1;
    while (first <= last && !present.row(first).all()) ++first;
    while (last >= first && !present.row(last).all()) --last;
    if (last < first) throw Error(ErrorCode::NoOverlap, "no complete row in the intersection");
    for (Eigen::Index t = first; t <= last; ++t)
        if (!present.row(t).all())
            throw Error(ErrorCode::GapInSeries, "missing cell at " + (lo + static_cast<int>(t)).str());

    const auto n = last - first + 1;
    return {lo + static_cast<int>(first), std::move(names), values.middleRows(first, n), present.middleRows(first, n)};
}

inline ReturnPanel align(std::initializer_list<ReturnPanel> panels) {
    return align(std::span<const ReturnPanel>(panels.begin(), panels.size()));
}

/// Subtracts the risk-free column from every other column and drops it.
inline ReturnPanel excess_returns(const ReturnPanel& panel, const std::string& riskfree_label) {
    const auto rf = static_cast<Eigen::Index>(panel.index_of(riskfree_label));
    std::vector<std::string> names;
    Matrix values(panel.values().rows(), panel.values().cols() - 1);
    BoolMatrix present(values.rows(), values.cols());
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < panel.values().cols(); ++j) {
        if (j == rf) continue;
        names.push_back(panel.names()[static_cast<std::size_t>(j)]);
        values.col(c) = panel.values().col(j) - panel.values().col(rf);
        present.col(c) = panel.present().col(j) && panel.present().col(rf);
        ++c;
    }
    return {panel.first(), std::move(names), std::move(values), std::move(present)};
}

struct SummaryStats {
    double mean = 0;
    double sd = 0;  // divisor n-1
    double min = 0;
    double max = 0;
    std::size_t n = 0;
};

inline SummaryStats describe(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 2) throw Error(ErrorCode::TooShort, "need at least two observations");
    SummaryStats s;
    s.n = n;
    s.min = series[0];
    s.max = series[0];
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = series[i];
        if (!std::isfinite(x)) throw Error(ErrorCode::GapInSeries, "missing value in series");
        // running mean
        mean += (x - mean) / static_cast<double>(i + 1);
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    double ss = 0;
    for (double x : series) ss += (x - mean) * (x - mean);
    s.mean = mean;
    s.sd = std::sqrt(ss / static_cast<double>(n - 1));
    return s;
}

inline SummaryStats describe(const Vector& series) {
    return describe(std::span<const double>(series.data(), static_cast<std::size_t>(series.size())));
}

}  // namespace tvff
