#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "tvff/block_tridiag.hpp"
#include "tvff/error.hpp"
#include "tvff/factor_model.hpp"
#include "tvff/panel.hpp"

namespace tvff {

/// Shape of the stacked state: k portfolios, m coefficients each, T dates.
/// Portfolio i's coefficient j lives at flat index i*m + j of gamma_t.
struct StateLayout {
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t T = 0;

    [[nodiscard]] std::size_t d() const noexcept { return k * m; }
    [[nodiscard]] std::size_t index(std::size_t portfolio, std::size_t coefficient) const noexcept {
        return portfolio * m + coefficient;
    }
};

/// Random-walk coefficient regression for k portfolios sharing one set of
/// regressors:
///
///     y_{t,i} = f_t' gamma_{t,i} + u_{t,i},      Var u = sigma^2 / w_i
///     gamma_t = gamma_{t-1} + v_t,               Var v = sigma^2 / lambda
///
/// with gamma_0 the fixed prior. The observation matrix X_t (k x d) is block
/// diagonal with f_t' in every block.
struct TvProblem {
    StateLayout layout;
    Matrix regressors;  // T x m, row t = regressor_row at t
    Matrix y;           // T x k
    Vector gamma0;      // d
    double lambda = 1;
    Vector weights;     // k; all ones unless per-portfolio rescaling is on

    [[nodiscard]] Matrix observation_matrix(std::size_t t) const {
        const auto m = static_cast<Eigen::Index>(layout.m);
        Matrix X = Matrix::Zero(static_cast<Eigen::Index>(layout.k), static_cast<Eigen::Index>(layout.d()));
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(layout.k); ++i)
            X.block(i, i * m, 1, m) = regressors.row(static_cast<Eigen::Index>(t));
        return X;
    }

    /// Coefficient path of one portfolio as a T x m matrix view into a T x d solution.
    [[nodiscard]] static auto portfolio_block(const Matrix& gamma, const StateLayout& layout, std::size_t i) {
        return gamma.middleCols(static_cast<Eigen::Index>(i * layout.m), static_cast<Eigen::Index>(layout.m));
    }
};

struct TvSolution {
    Matrix gamma;        // T x d
    Matrix obs_resid;    // T x k
    Matrix state_resid;  // T x d, gamma_t - gamma_{t-1} with gamma_0 the prior
    double objective = 0;       // penalized sum of squares at the optimum
    double loglik = 0;          // exact Gaussian log-likelihood with sigma^2 = 1
    double profile_loglik = 0;  // same, with sigma^2 concentrated out
    double sigma2 = 0;          // objective / (T k)
    double lambda_used = 0;
};

inline TvProblem make_problem(Matrix regressors, Matrix y, Vector gamma0, double lambda, Vector weights = {}) {
    TvProblem p;
    p.layout = {static_cast<std::size_t>(y.cols()), static_cast<std::size_t>(regressors.cols()),
                static_cast<std::size_t>(y.rows())};
    if (regressors.rows() != y.rows()) throw Error(ErrorCode::ShapeError, "regressors and returns differ in length");
    if (y.rows() == 0 || y.cols() == 0 || regressors.cols() == 0) throw Error(ErrorCode::ShapeError, "empty problem");
    if (static_cast<std::size_t>(gamma0.size()) != p.layout.d())
        throw Error(ErrorCode::ShapeError, "gamma0 has length " + std::to_string(gamma0.size()) + ", expected " +
                                               std::to_string(p.layout.d()));
    if (!(lambda > 0) || !std::isfinite(lambda)) throw Error(ErrorCode::Singular, "lambda must be positive");
    if (weights.size() == 0) weights = Vector::Ones(y.cols());
    if (weights.size() != y.cols() || !(weights.array() > 0).all())
        throw Error(ErrorCode::ShapeError, "weights must be k positive values");
    if (!regressors.allFinite() || !y.allFinite()) throw Error(ErrorCode::GapInSeries, "non-finite input");
    p.regressors = std::move(regressors);
    p.y = std::move(y);
    p.gamma0 = std::move(gamma0);
    p.lambda = lambda;
    p.weights = std::move(weights);
    return p;
}

/// Assembles the stacked problem from aligned excess-return and factor panels.
inline TvProblem build_problem(const ModelSpec& spec, const ReturnPanel& excess, const ReturnPanel& factors,
                               const Vector& gamma0, double lambda, Vector weights = {}) {
    if (excess.first() != factors.first() || excess.rows() != factors.rows())
        throw Error(ErrorCode::ShapeError, "portfolio and factor panels are not aligned");
    return make_problem(design_matrix(spec, factors), excess.values(), gamma0, lambda, std::move(weights));
}

/// Flattens a k x m coefficient matrix (e.g. StaticFit::coef) into a d-vector prior.
inline Vector flatten_coefficients(const Matrix& coef) {
    Vector g(coef.size());
    for (Eigen::Index i = 0; i < coef.rows(); ++i) g.segment(i * coef.cols(), coef.cols()) = coef.row(i).transpose();
    return g;
}

/// Factorized normal equations of one portfolio (they are identical for all
/// portfolios with the same weight):
///
///     D_t = w f_t f_t' + c_t lambda I,   c_t = 2 for t < T, 1 for t = T
///     S_t = -lambda I
class TvSystem {
public:
    TvSystem(const Matrix& regressors, double lambda, double weight = 1.0)
        : regressors_(regressors), lambda_(lambda), weight_(weight) {
        if (!(lambda > 0) || !std::isfinite(lambda)) throw Error(ErrorCode::Singular, "lambda must be positive");
        const auto T = regressors.rows();
        const auto m = regressors.cols();
        using Block = BlockTridiagonalCholesky<double>::Block;
        std::vector<Block> diag(static_cast<std::size_t>(T));
        std::vector<Block> sub(static_cast<std::size_t>(T > 0 ? T - 1 : 0), -lambda * Block::Identity(m, m));
        for (Eigen::Index t = 0; t < T; ++t) {
            const double c = t + 1 < T ? 2.0 : 1.0;
            diag[static_cast<std::size_t>(t)] = weight * regressors.row(t).transpose() * regressors.row(t);
            diag[static_cast<std::size_t>(t)].diagonal().array() += c * lambda;
        }
        chol_.factorize(std::move(diag), std::move(sub));
    }

    [[nodiscard]] double log_det() const noexcept { return chol_.log_det(); }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }

    /// Solves for r independent return series. `y` is T x r, `gamma0` is m x r.
    /// Returns (T m) x r with date t's coefficients in rows [t m, (t+1) m).
    [[nodiscard]] Matrix solve(const Matrix& y, const Matrix& gamma0) const {
        const auto T = regressors_.rows();
        const auto m = regressors_.cols();
        Matrix rhs(T * m, y.cols());
        for (Eigen::Index t = 0; t < T; ++t)
            rhs.middleRows(t * m, m).noalias() = weight_ * regressors_.row(t).transpose() * y.row(t);
        rhs.topRows(m) += lambda_ * gamma0;
        chol_.solve_in_place(rhs);
        return rhs;
    }

private:
    Matrix regressors_;
    double lambda_;
    double weight_;
    BlockTridiagonalCholesky<double> chol_;
};

/// Penalized objective sum_t sum_i w_i (y_ti - f_t' gamma_ti)^2
///   + lambda |gamma_1 - gamma_0|^2 + lambda sum_{t>=2} |gamma_t - gamma_{t-1}|^2.
inline double tv_objective(const TvProblem& p, const Matrix& gamma) {
    const auto& L = p.layout;
    double obs = 0;
    double state = 0;
    for (std::size_t t = 0; t < L.T; ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        for (std::size_t i = 0; i < L.k; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double r = p.y(ti, ii) - p.regressors.row(ti).dot(gamma.row(ti).segment(ii * L.m, L.m));
            obs += p.weights(ii) * r * r;
        }
        const Vector prev = t == 0 ? p.gamma0 : Vector(gamma.row(ti - 1).transpose());
        state += (gamma.row(ti).transpose() - prev).squaredNorm();
    }
    return obs + p.lambda * state;
}

/// Half the gradient of tv_objective; zero at the solution.
inline Matrix tv_gradient(const TvProblem& p, const Matrix& gamma) {
    const auto& L = p.layout;
    const auto T = static_cast<Eigen::Index>(L.T);
    const auto m = static_cast<Eigen::Index>(L.m);
    Matrix g = Matrix::Zero(T, static_cast<Eigen::Index>(L.d()));
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(L.k); ++i) {
            const double r = p.y(t, i) - p.regressors.row(t).dot(gamma.row(t).segment(i * m, m));
            g.row(t).segment(i * m, m) -= p.weights(i) * r * p.regressors.row(t);
        }
        const Eigen::RowVectorXd prev = t == 0 ? Eigen::RowVectorXd(p.gamma0.transpose()) : Eigen::RowVectorXd(gamma.row(t - 1));
        g.row(t) += p.lambda * (gamma.row(t) - prev);
        if (t + 1 < T) g.row(t) -= p.lambda * (gamma.row(t + 1) - gamma.row(t));
    }
    return g;
}

namespace detail {

inline void fill_residuals(const TvProblem& p, TvSolution& s) {
    const auto& L = p.layout;
    const auto T = static_cast<Eigen::Index>(L.T);
    const auto m = static_cast<Eigen::Index>(L.m);
    s.obs_resid.resize(T, static_cast<Eigen::Index>(L.k));
    s.state_resid.resize(T, static_cast<Eigen::Index>(L.d()));
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(L.k); ++i)
            s.obs_resid(t, i) = p.y(t, i) - p.regressors.row(t).dot(s.gamma.row(t).segment(i * m, m));
        s.state_resid.row(t) = s.gamma.row(t) - (t == 0 ? Eigen::RowVectorXd(p.gamma0.transpose()) : Eigen::RowVectorXd(s.gamma.row(t - 1)));
    }
    s.objective = tv_objective(p, s.gamma);
    s.lambda_used = p.lambda;
}

/// Log-likelihoods from the quantities of either solution route:
/// sum of log|F_t| (unit scale) and the quadratic form sum e' F^-1 e.
inline void set_loglik(TvSolution& s, double n_obs, double log_det_cov, double quad) {
    constexpr double log2pi = 1.8378770664093454836;
    s.loglik = -0.5 * (n_obs * log2pi + log_det_cov + quad);
    s.sigma2 = quad / n_obs;
    s.profile_loglik = -0.5 * (n_obs * log2pi + log_det_cov + n_obs * std::log(s.sigma2) + n_obs);
}

}  // namespace detail

/// Minimizes tv_objective through the block-tridiagonal normal equations.
///
/// The system is block diagonal across portfolios, so each distinct weight
/// needs one m-block factorization shared by all its portfolios. The exact
/// likelihood follows from the same factor: log|Cov y| = log|A| - T d log(lambda)
/// - T sum log w_i, and the quadratic form equals the minimized objective.
inline TvSolution solve_tv(const TvProblem& p) {
    const auto& L = p.layout;
    const auto T = static_cast<Eigen::Index>(L.T);
    const auto m = static_cast<Eigen::Index>(L.m);
    if (!(p.lambda > 0)) throw Error(ErrorCode::Singular, "lambda must be positive");

    TvSolution s;
    s.gamma.resize(T, static_cast<Eigen::Index>(L.d()));
    std::map<double, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(L.k); ++i) groups[p.weights(i)].push_back(i);

    double log_det_A = 0;
    for (const auto& [w, members] : groups) {
        TvSystem system(p.regressors, p.lambda, w);
        const auto r = static_cast<Eigen::Index>(members.size());
        Matrix y(T, r);
        Matrix g0(m, r);
        for (Eigen::Index c = 0; c < r; ++c) {
            y.col(c) = p.y.col(members[static_cast<std::size_t>(c)]);
            g0.col(c) = p.gamma0.segment(members[static_cast<std::size_t>(c)] * m, m);
        }
        const Matrix x = system.solve(y, g0);
        for (Eigen::Index c = 0; c < r; ++c) {
            const auto i = members[static_cast<std::size_t>(c)];
            for (Eigen::Index t = 0; t < T; ++t) s.gamma.row(t).segment(i * m, m) = x.col(c).segment(t * m, m).transpose();
        }
        log_det_A += static_cast<double>(r) * system.log_det();
    }
    if (!s.gamma.allFinite()) throw Error(ErrorCode::Singular, "solution is not finite");
    detail::fill_residuals(p, s);

    const double n_obs = static_cast<double>(L.T * L.k);
    const double log_det_cov = log_det_A - static_cast<double>(L.T * L.d()) * std::log(p.lambda) -
                               static_cast<double>(L.T) * p.weights.array().log().sum();
    detail::set_loglik(s, n_obs, log_det_cov, s.objective);
    return s;
}

}  // namespace tvff
