#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/kalman.hpp"
#include "tvff/tv_estimator.hpp"

namespace tvff {

/// Log-spaced grid from 10^lo to 10^hi with `points` values.
inline std::vector<double> log_grid(double lo_exp, double hi_exp, std::size_t points) {
    if (points == 0) return {};
    if (points == 1) return {std::pow(10.0, lo_exp)};
    std::vector<double> g;
    g.reserve(points);
    for (std::size_t i = 0; i < points; ++i)
        g.push_back(std::pow(10.0, lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / static_cast<double>(points - 1)));
    return g;
}

/// 10^-2 ... 10^6 in half-decade steps.
inline std::vector<double> default_lambda_grid() { return log_grid(-2, 6, 17); }

struct LambdaSelection {
    double lambda = 0;
    std::vector<double> grid;
    std::vector<double> profile;  // profile log-likelihood per grid point; NaN where it failed
};

/// Picks the grid value with the largest profile log-likelihood (observation
/// variance concentrated out), computed by the Kalman filter.
inline LambdaSelection select_lambda(const Matrix& regressors, const Matrix& y, const Vector& gamma0,
                                     const std::vector<double>& grid, const Vector& weights = {}) {
    if (grid.empty()) throw Error(ErrorCode::ConfigError, "lambda grid is empty");
    for (double g : grid)
        if (!(g > 0) || !std::isfinite(g)) throw Error(ErrorCode::ConfigError, "lambda grid values must be positive");

    LambdaSelection out;
    out.grid = grid;
    out.profile.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        try {
            const auto problem = make_problem(regressors, y, gamma0, grid[g], weights);
            const double ll = kalman_loglik(problem).profile_loglik;
            out.profile[g] = ll;
            if (std::isfinite(ll) && (!found || ll > best)) {
                best = ll;
                out.lambda = grid[g];
                found = true;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Singular) throw;
        }
    }
    if (!found) throw Error(ErrorCode::SelectionFailed, "likelihood is not finite on any grid point");
    return out;
}

inline LambdaSelection select_lambda(const ModelSpec& spec, const ReturnPanel& excess, const ReturnPanel& factors,
                                     const Vector& gamma0, const std::vector<double>& grid, const Vector& weights = {}) {
    if (excess.first() != factors.first() || excess.rows() != factors.rows())
        throw Error(ErrorCode::ShapeError, "portfolio and factor panels are not aligned");
    return select_lambda(design_matrix(spec, factors), excess.values(), gamma0, grid, weights);
}

}  // namespace tvff
