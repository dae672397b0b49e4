#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <thread>
#include <vector>

#include "tvff/error.hpp"
#include "tvff/factor_model.hpp"
#include "tvff/rng.hpp"
#include "tvff/tv_estimator.hpp"

namespace tvff {

struct BootstrapConfig {
    std::size_t n_reps = 500;
    double level = 0.95;
    std::uint64_t seed = 0;
    double lambda = 1;
    bool joint_resampling = true;  // resample whole cross-section rows
    bool ols_prior = false;        // replicate prior: static OLS of the resampled returns instead of zero
    unsigned threads = 0;          // 0: hardware concurrency
    Vector weights;                // per-portfolio observation weights; empty = all ones

    void validate() const {
        if (n_reps < 2) throw Error(ErrorCode::ConfigError, "bootstrap needs at least 2 replicates");
        if (!(level > 0 && level < 1)) throw Error(ErrorCode::ConfigError, "level must lie in (0, 1)");
        if (!(lambda > 0) || !std::isfinite(lambda)) throw Error(ErrorCode::ConfigError, "lambda must be positive");
        if (n_reps > 0xFFFFFFFFu) throw Error(ErrorCode::ConfigError, "too many replicates");
    }
};

struct BandSet {
    Matrix lower;  // T x d
    Matrix upper;  // T x d
    double level = 0;
    std::size_t n_reps = 0;
    BoolMatrix significant;  // T x d, filled by flag_significance
};

/// 1-based rank of the empirical q-quantile among N sorted values: ceil(q N),
/// clamped to [1, N]. A small tolerance keeps products such as 0.05 * 100 on
/// the exact integer.
inline std::size_t quantile_rank(double q, std::size_t N) {
    const double x = q * static_cast<double>(N);
    auto r = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
    return std::clamp<std::size_t>(r, 1, N);
}

/// Row indices t' (with replacement) forming replicate `rep`'s resample.
/// Joint resampling uses stream 0 for all portfolios; independent
/// resampling uses stream portfolio + 1.
inline std::vector<std::uint32_t> resample_indices(std::uint64_t seed, std::size_t rep, std::uint32_t stream, std::size_t T) {
    PhiloxStream rng(seed, static_cast<std::uint32_t>(rep), stream);
    std::vector<std::uint32_t> idx(T);
    for (auto& v : idx) v = rng.below(static_cast<std::uint32_t>(T));
    return idx;
}

namespace detail {

class ReplicateEngine {
public:
    ReplicateEngine(const Matrix& regressors, const Matrix& residuals, const BootstrapConfig& cfg)
        : regressors_(regressors), residuals_(residuals), cfg_(cfg) {
        cfg.validate();
        if (regressors.rows() != residuals.rows())
            throw Error(ErrorCode::ShapeError, "residuals and regressors differ in length");
        if (!residuals.allFinite()) throw Error(ErrorCode::ConfigError, "residual matrix has missing values");
        const auto k = residuals.cols();
        weights_ = cfg.weights.size() == 0 ? Vector(Vector::Ones(k)) : cfg.weights;
        if (weights_.size() != k) throw Error(ErrorCode::ShapeError, "weights must have one entry per portfolio");
        for (Eigen::Index i = 0; i < k; ++i)
            if (!systems_.count(weights_(i)))
                systems_.emplace(weights_(i), std::make_unique<TvSystem>(regressors, cfg.lambda, weights_(i)));
        if (cfg.ols_prior) qr_.compute(regressors);
        if (cfg.joint_resampling) {
            joint_.reserve(cfg.n_reps);
            for (std::size_t r = 0; r < cfg.n_reps; ++r)
                joint_.push_back(resample_indices(cfg.seed, r, 0, static_cast<std::size_t>(regressors.rows())));
        }
    }

    /// (T m) x N replicate coefficient paths for portfolio i.
    [[nodiscard]] Matrix replicates(Eigen::Index i) const {
        const auto T = regressors_.rows();
        const auto m = regressors_.cols();
        const auto N = static_cast<Eigen::Index>(cfg_.n_reps);
        Matrix y(T, N);
        for (Eigen::Index r = 0; r < N; ++r) {
            const auto idx = cfg_.joint_resampling
                                 ? joint_[static_cast<std::size_t>(r)]
                                 : resample_indices(cfg_.seed, static_cast<std::size_t>(r), static_cast<std::uint32_t>(i + 1),
                                                    static_cast<std::size_t>(T));
            for (Eigen::Index t = 0; t < T; ++t) y(t, r) = residuals_(idx[static_cast<std::size_t>(t)], i);
        }
        const Matrix prior = cfg_.ols_prior ? Matrix(qr_.solve(y)) : Matrix(Matrix::Zero(m, N));
        Matrix paths = systems_.at(weights_(i))->solve(y, prior);
        for (Eigen::Index r = 0; r < N; ++r)
            if (!paths.col(r).allFinite())
                throw Error(ErrorCode::ReplicateFailed, "replicate " + std::to_string(r) + " produced a non-finite path");
        return paths;
    }

private:
    const Matrix& regressors_;
    const Matrix& residuals_;
    const BootstrapConfig& cfg_;
    Vector weights_;
    std::map<double, std::unique_ptr<TvSystem>> systems_;
    std::vector<std::vector<std::uint32_t>> joint_;
    Eigen::ColPivHouseholderQR<Matrix> qr_;
};

}  // namespace detail

/// All replicate coefficient paths of portfolio `portfolio`, (T m) x N with
/// date t's coefficients in rows [t m, (t+1) m).
inline Matrix bootstrap_replicates(const Matrix& regressors, const Matrix& residuals, const BootstrapConfig& config,
                                   std::size_t portfolio) {
    detail::ReplicateEngine engine(regressors, residuals, config);
    return engine.replicates(static_cast<Eigen::Index>(portfolio));
}

/// Residual bootstrap bands under the all-zero null.
///
/// Each replicate draws T residual rows with replacement, uses them as the
/// returns, and re-solves the time-varying system with the same regressors,
/// the same lambda and a zero prior. With `ols_prior` the prior is instead the
/// static OLS fit of the resampled returns, matching an estimate anchored at
/// static OLS. Bands are the pointwise order-statistic quantiles at
/// (1-level)/2 and 1-(1-level)/2 over replicates. Portfolios are processed in
/// parallel; results do not depend on the thread count.
inline BandSet bootstrap_bands(const Matrix& regressors, const Matrix& residuals, const BootstrapConfig& config) {
    detail::ReplicateEngine engine(regressors, residuals, config);
    const auto T = regressors.rows();
    const auto m = regressors.cols();
    const auto k = residuals.cols();
    const std::size_t N = config.n_reps;
    const double tail = (1.0 - config.level) / 2.0;
    const std::size_t lo_rank = quantile_rank(tail, N);
    const std::size_t hi_rank = quantile_rank(1.0 - tail, N);

    BandSet bands;
    bands.level = config.level;
    bands.n_reps = N;
    bands.lower.resize(T, k * m);
    bands.upper.resize(T, k * m);
    bands.significant = BoolMatrix::Constant(T, k * m, false);

    auto work = [&](Eigen::Index i) {
        const Matrix paths = engine.replicates(i);
        std::vector<double> row(N);
        for (Eigen::Index t = 0; t < T; ++t)
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto src = paths.row(t * m + j);
                for (std::size_t r = 0; r < N; ++r) row[r] = src(static_cast<Eigen::Index>(r));
                std::sort(row.begin(), row.end());
                bands.lower(t, i * m + j) = row[lo_rank - 1];
                bands.upper(t, i * m + j) = row[hi_rank - 1];
            }
    };

    unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, k));
    if (threads <= 1) {
        for (Eigen::Index i = 0; i < k; ++i) work(i);
        return bands;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (Eigen::Index i = w; i < k; i += threads) work(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return bands;
}

inline BandSet bootstrap_bands(const ModelSpec& spec, const ReturnPanel& excess, const ReturnPanel& factors,
                               const StaticFit& fit, const BootstrapConfig& config) {
    if (excess.first() != factors.first() || excess.rows() != factors.rows())
        throw Error(ErrorCode::ShapeError, "portfolio and factor panels are not aligned");
    if (fit.residuals.rows() != static_cast<Eigen::Index>(excess.rows()) ||
        fit.residuals.cols() != static_cast<Eigen::Index>(excess.cols()))
        throw Error(ErrorCode::ShapeError, "static residuals do not match the panel");
    return bootstrap_bands(design_matrix(spec, factors), fit.residuals, config);
}

/// True where the estimate lies outside the closed band [lower, upper].
inline BoolMatrix flag_significance(const TvSolution& solution, const BandSet& bands) {
    const Matrix& g = solution.gamma;
    if (g.rows() != bands.lower.rows() || g.cols() != bands.lower.cols() || g.rows() != bands.upper.rows() ||
        g.cols() != bands.upper.cols())
        throw Error(ErrorCode::ShapeError, "estimate and band shapes differ");
    return (g.array() < bands.lower.array()) || (g.array() > bands.upper.array());
}

}  // namespace tvff
