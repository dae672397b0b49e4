#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "tvff/error.hpp"

namespace tvff {

/// Cholesky factorization of a symmetric positive-definite block-tridiagonal
/// matrix with n square blocks of size b:
///
///     | D_0  S_0^T              |
///     | S_0  D_1   S_1^T        |
///     |      S_1   D_2   ...    |
///
/// The factor is L = bidiag(L_t, C_t) with L_t lower triangular, so storage
/// and work stay O(n b^2) and O(n b^3). Never forms the dense matrix.
template <typename Scalar = double>
class BlockTridiagonalCholesky {
public:
    using Block = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    BlockTridiagonalCholesky() = default;

    /// `diag` has n blocks, `sub` has n-1 blocks (sub[t] sits at block row t+1, column t).
    BlockTridiagonalCholesky(std::vector<Block> diag, std::vector<Block> sub) { factorize(std::move(diag), std::move(sub)); }

    void factorize(std::vector<Block> diag, std::vector<Block> sub) {
        if (diag.empty() || sub.size() + 1 != diag.size())
            throw Error(ErrorCode::ShapeError, "block-tridiagonal: need n diagonal and n-1 sub-diagonal blocks");
        b_ = diag.front().rows();
        diag_ = std::move(diag);
        sub_ = std::move(sub);
        log_det_ = 0;
        for (std::size_t t = 0; t < diag_.size(); ++t) {
            if (diag_[t].rows() != b_ || diag_[t].cols() != b_ ||
                (t < sub_.size() && (sub_[t].rows() != b_ || sub_[t].cols() != b_)))
                throw Error(ErrorCode::ShapeError, "block-tridiagonal: inconsistent block sizes");
            if (t > 0) {
                // C_t = S_{t-1} L_{t-1}^{-T};  D_t -= C_t C_t^T
                diag_[t - 1].template triangularView<Eigen::Lower>().transpose().template solveInPlace<Eigen::OnTheRight>(
                    sub_[t - 1]);
                diag_[t].template selfadjointView<Eigen::Lower>().rankUpdate(sub_[t - 1], Scalar(-1));
            }
            Eigen::LLT<Eigen::Ref<Block>> llt(diag_[t]);
            if (llt.info() != Eigen::Success)
                throw Error(ErrorCode::Singular, "block-tridiagonal: matrix is not positive definite (block " +
                                                     std::to_string(t) + ")");
            for (Eigen::Index i = 0; i < b_; ++i) {
                const Scalar d = diag_[t](i, i);
                if (!(d > Scalar(0)) || !std::isfinite(static_cast<double>(d)))
                    throw Error(ErrorCode::Singular, "block-tridiagonal: non-positive pivot");
                log_det_ += 2 * std::log(d);
            }
        }
    }

    [[nodiscard]] Eigen::Index block_size() const noexcept { return b_; }
    [[nodiscard]] std::size_t blocks() const noexcept { return diag_.size(); }
    /// log |A|
    [[nodiscard]] Scalar log_det() const noexcept { return log_det_; }

    /// Solves A X = B in place for a (n b) x r right-hand side.
    template <typename Derived>
    void solve_in_place(Eigen::MatrixBase<Derived>& rhs) const {
        const auto n = static_cast<Eigen::Index>(diag_.size());
        if (rhs.rows() != n * b_) throw Error(ErrorCode::ShapeError, "block-tridiagonal: rhs has wrong row count");
        // forward: L z = rhs
        for (Eigen::Index t = 0; t < n; ++t) {
            auto zt = rhs.middleRows(t * b_, b_);
            if (t > 0) zt.noalias() -= sub_[static_cast<std::size_t>(t - 1)] * rhs.middleRows((t - 1) * b_, b_);
            diag_[static_cast<std::size_t>(t)].template triangularView<Eigen::Lower>().solveInPlace(zt);
        }
        // backward: L^T x = z
        for (Eigen::Index t = n - 1; t >= 0; --t) {
            auto xt = rhs.middleRows(t * b_, b_);
            if (t + 1 < n) xt.noalias() -= sub_[static_cast<std::size_t>(t)].transpose() * rhs.middleRows((t + 1) * b_, b_);
            diag_[static_cast<std::size_t>(t)].template triangularView<Eigen::Lower>().transpose().solveInPlace(xt);
        }
    }

    [[nodiscard]] Block solve(const Block& rhs) const {
        Block x = rhs;
        solve_in_place(x);
        return x;
    }

private:
    Eigen::Index b_ = 0;
    std::vector<Block> diag_;  // L_t after factorize
    std::vector<Block> sub_;   // C_t after factorize
    Scalar log_det_ = 0;
};

}  // namespace tvff
