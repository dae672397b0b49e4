#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/tv_estimator.hpp"

namespace tvff {

namespace detail {

struct FilterRun {
    Matrix smoothed;      // T x n, only when smoothing was requested
    double log_det_F = 0;  // sum_t log|F_t|
    double quad = 0;       // sum_t e_t' F_t^-1 e_t
};

/// Kalman filter (and optionally the Rauch-Tung-Striebel smoother) for the
/// random-walk state a_t = a_{t-1} + v_t, Var v = q I, a_0 fixed, with
/// observations y_t = Z_t a_t + e_t, Var e = diag(r).
template <typename ObsMatrix, typename ObsVector>
FilterRun kalman_run(Eigen::Index T, const Vector& a0, double q, const Vector& r, ObsMatrix&& Z, ObsVector&& y,
                     bool smooth) {
    const auto n = a0.size();
    FilterRun run;
    std::vector<Vector> a_filt;
    std::vector<Matrix> P_filt;
    std::vector<Matrix> P_pred;
    if (smooth) {
        a_filt.reserve(static_cast<std::size_t>(T));
        P_filt.reserve(static_cast<std::size_t>(T));
        P_pred.reserve(static_cast<std::size_t>(T));
    }

    Vector a = a0;
    Matrix P = q * Matrix::Identity(n, n);  // predicted covariance of a_1
    for (Eigen::Index t = 0; t < T; ++t) {
        const Matrix Zt = Z(t);
        const Vector e = y(t) - Zt * a;
        const Matrix PZ = P * Zt.transpose();
        Matrix F = Zt * PZ;
        F.diagonal() += r;
        Eigen::LLT<Matrix> llt(F);
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::Singular, "innovation covariance not positive definite");
        const Matrix Lf = llt.matrixL();
        run.log_det_F += 2 * Lf.diagonal().array().log().sum();
        const Vector Fe = llt.solve(e);
        run.quad += e.dot(Fe);

        if (smooth) P_pred.push_back(P);
        a += PZ * Fe;
        P -= PZ * llt.solve(PZ.transpose());
        P = 0.5 * (P + P.transpose());
        if (smooth) {
            a_filt.push_back(a);
            P_filt.push_back(P);
        }
        P.diagonal().array() += q;
    }
    if (!std::isfinite(run.quad) || !std::isfinite(run.log_det_F))
        throw Error(ErrorCode::Singular, "filter produced non-finite likelihood");

    if (smooth) {
        run.smoothed.resize(T, n);
        Vector as = a_filt.back();
        run.smoothed.row(T - 1) = as.transpose();
        for (Eigen::Index t = T - 2; t >= 0; --t) {
            const auto ti = static_cast<std::size_t>(t);
            // J_t = P_{t|t} P_{t+1|t}^{-1}; the predicted mean of a_{t+1} is a_{t|t}
            Eigen::LLT<Matrix> pl(P_pred[ti + 1]);
            const Matrix J = pl.solve(P_filt[ti]).transpose();
            as = a_filt[ti] + J * (as - a_filt[ti]);
            run.smoothed.row(t) = as.transpose();
        }
    }
    return run;
}

}  // namespace detail

/// Fixed-interval smoother of the full d-dimensional state-space form of a
/// TvProblem: observation variance 1/w_i, state variance 1/lambda, initial
/// mean gamma0 and initial variance 1/lambda. Independent of solve_tv; the
/// two coincide exactly.
inline TvSolution kalman_smoother(const TvProblem& p) {
    if (!(p.lambda > 0)) throw Error(ErrorCode::Singular, "lambda must be positive");
    const auto& L = p.layout;
    const auto T = static_cast<Eigen::Index>(L.T);
    const Vector r = p.weights.cwiseInverse();
    auto run = detail::kalman_run(
        T, p.gamma0, 1.0 / p.lambda, r, [&](Eigen::Index t) { return p.observation_matrix(static_cast<std::size_t>(t)); },
        [&](Eigen::Index t) { return Vector(p.y.row(t).transpose()); }, true);

    TvSolution s;
    s.gamma = std::move(run.smoothed);
    detail::fill_residuals(p, s);
    detail::set_loglik(s, static_cast<double>(L.T * L.k), run.log_det_F, run.quad);
    return s;
}

/// Likelihood of a TvProblem by prediction-error decomposition, filtering
/// each portfolio separately (state m, scalar observation). Portfolios are
/// independent given the shared regressors, so the sums match the full
/// d-dimensional filter.
inline TvSolution kalman_loglik(const TvProblem& p) {
    if (!(p.lambda > 0)) throw Error(ErrorCode::Singular, "lambda must be positive");
    const auto& L = p.layout;
    const auto T = static_cast<Eigen::Index>(L.T);
    const auto m = static_cast<Eigen::Index>(L.m);
    double log_det = 0;
    double quad = 0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(L.k); ++i) {
        const Vector r = Vector::Constant(1, 1.0 / p.weights(i));
        auto run = detail::kalman_run(
            T, p.gamma0.segment(i * m, m), 1.0 / p.lambda, r, [&](Eigen::Index t) { return Matrix(p.regressors.row(t)); },
            [&](Eigen::Index t) { return Vector::Constant(1, p.y(t, i)); }, false);
        log_det += run.log_det_F;
        quad += run.quad;
    }
    TvSolution s;
    s.lambda_used = p.lambda;
    detail::set_loglik(s, static_cast<double>(L.T * L.k), log_det, quad);
    return s;
}

}  // namespace tvff
