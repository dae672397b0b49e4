#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/panel.hpp"

namespace tvff {

enum class FactorModel { FF3, FF5, FF6 };

inline std::string to_string(FactorModel m) {
    switch (m) {
        case FactorModel::FF3: return "ff3";
        case FactorModel::FF5: return "ff5";
        case FactorModel::FF6: return "ff6";
    }
    return "?";
}

inline FactorModel parse_model(std::string_view s) {
    if (s == "ff3") return FactorModel::FF3;
    if (s == "ff5") return FactorModel::FF5;
    if (s == "ff6") return FactorModel::FF6;
    throw Error(ErrorCode::ConfigError, "unknown model '" + std::string(s) + "'");
}

/// Factor set of a Fama-French regression. Coefficients are ordered
/// intercept first, then the factors in `factor_labels` order.
struct ModelSpec {
    FactorModel model = FactorModel::FF3;
    std::vector<std::string> factor_labels;

    static ModelSpec make(FactorModel model) {
        ModelSpec s;
        s.model = model;
        s.factor_labels = {"Mkt-RF", "SMB", "HML"};
        if (model != FactorModel::FF3) {
            s.factor_labels.emplace_back("RMW");
            s.factor_labels.emplace_back("CMA");
        }
        if (model == FactorModel::FF6) s.factor_labels.emplace_back("WML");
        return s;
    }

    /// Arbitrary factor set, for simulations.
    static ModelSpec custom(std::vector<std::string> labels) {
        ModelSpec s;
        s.factor_labels = std::move(labels);
        return s;
    }

    [[nodiscard]] std::size_t p() const noexcept { return factor_labels.size(); }
    [[nodiscard]] std::size_t m() const noexcept { return p() + 1; }

    /// "alpha", "beta_Mkt", "beta_SMB", ...
    [[nodiscard]] std::vector<std::string> coefficient_names() const {
        std::vector<std::string> out{"alpha"};
        for (const auto& f : factor_labels) {
            const auto dash = f.find('-');
            out.push_back("beta_" + (dash == std::string::npos ? f : f.substr(0, dash)));
        }
        return out;
    }
};

/// [1, f_1, ..., f_p]
inline Vector regressor_row(const ModelSpec& spec, std::span<const double> factors_at_t) {
    if (factors_at_t.size() != spec.p())
        throw Error(ErrorCode::ShapeError, "expected " + std::to_string(spec.p()) + " factor values, got " +
                                               std::to_string(factors_at_t.size()));
    Vector row(static_cast<Eigen::Index>(spec.m()));
    row(0) = 1.0;
    for (std::size_t j = 0; j < factors_at_t.size(); ++j) row(static_cast<Eigen::Index>(j + 1)) = factors_at_t[j];
    return row;
}

/// T x m design matrix, one regressor_row per date.
inline Matrix design_matrix(const ModelSpec& spec, const ReturnPanel& factors) {
    const auto T = static_cast<Eigen::Index>(factors.rows());
    Matrix X(T, static_cast<Eigen::Index>(spec.m()));
    X.col(0).setOnes();
    for (std::size_t j = 0; j < spec.p(); ++j) X.col(static_cast<Eigen::Index>(j + 1)) = factors.column(spec.factor_labels[j]);
    if (!X.allFinite()) throw Error(ErrorCode::GapInSeries, "missing factor value");
    return X;
}

struct StaticFit {
    Matrix coef;       // k x m
    Matrix residuals;  // T x k
    Vector rss;        // k
};

/// Constant-coefficient least squares for every portfolio column of
/// `excess`, solved through one column-pivoted QR of the shared design.
inline StaticFit static_ols(const ModelSpec& spec, const ReturnPanel& excess, const ReturnPanel& factors) {
    if (excess.first() != factors.first() || excess.rows() != factors.rows())
        throw Error(ErrorCode::ShapeError, "portfolio and factor panels are not aligned");
    const Matrix X = design_matrix(spec, factors);
    const Matrix& Y = excess.values();
    if (!Y.allFinite()) throw Error(ErrorCode::GapInSeries, "missing portfolio value");
    if (X.rows() <= X.cols()) throw Error(ErrorCode::TooShort, "need more dates than coefficients");

    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < X.cols()) throw Error(ErrorCode::Singular, "regressor matrix is rank deficient");

    StaticFit fit;
    const Matrix B = qr.solve(Y);  // m x k
    fit.coef = B.transpose();
    fit.residuals = Y - X * B;
    fit.rss = fit.residuals.colwise().squaredNorm().transpose();
    return fit;
}

}  // namespace tvff
