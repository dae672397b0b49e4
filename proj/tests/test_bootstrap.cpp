#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "support/oracles.hpp"
#include "tvff/bootstrap.hpp"

using namespace tvff;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no tvff::Error thrown";
    return ErrorCode::ConfigError;
}

struct NullData {
    Matrix regressors;  // T x m
    Matrix residuals;   // T x k
};

NullData null_data(Eigen::Index T, Eigen::Index k, Eigen::Index p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    NullData d{Matrix(T, p + 1), Matrix(T, k)};
    d.regressors.col(0).setOnes();
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index j = 1; j <= p; ++j) d.regressors(t, j) = n(rng);
        const double common = n(rng);
        for (Eigen::Index i = 0; i < k; ++i) d.residuals(t, i) = 0.7 * common + 0.5 * n(rng);
    }
    return d;
}

BootstrapConfig config(std::size_t n_reps, std::uint64_t seed, double lambda = 10) {
    BootstrapConfig c;
    c.n_reps = n_reps;
    c.seed = seed;
    c.lambda = lambda;
    return c;
}

}  // namespace

TEST(Philox, KnownAnswerVectors) {
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(PhiloxStream, SubstreamsAreReproducibleAndDistinct) {
    PhiloxStream a(7, 3, 0), b(7, 3, 0), c(7, 4, 0), d(7, 3, 1), e(8, 3, 0);
    std::vector<std::uint32_t> va, vb, vc, vd, ve;
    for (int i = 0; i < 16; ++i) {
        va.push_back(a.next_u32());
        vb.push_back(b.next_u32());
        vc.push_back(c.next_u32());
        vd.push_back(d.next_u32());
        ve.push_back(e.next_u32());
    }
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
    EXPECT_NE(va, ve);
}

TEST(PhiloxStream, BoundedDrawsAreUniform) {
    PhiloxStream s(123, 0);
    const std::uint32_t n = 7;
    std::vector<int> counts(n, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) {
        const auto v = s.below(n);
        ASSERT_LT(v, n);
        ++counts[v];
    }
    double chi2 = 0;
    for (int c : counts) chi2 += (c - draws / 7.0) * (c - draws / 7.0) / (draws / 7.0);
    EXPECT_LT(chi2, 22.46);  // 6 df, p = 0.001

    double sum = 0;
    for (int i = 0; i < 20000; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(QuantileRank, OrderStatisticConvention) {
    EXPECT_EQ(quantile_rank(0.025, 500), 13u);
    EXPECT_EQ(quantile_rank(0.975, 500), 488u);
    EXPECT_EQ(quantile_rank(0.05, 100), 5u);
    EXPECT_EQ(quantile_rank(0.95, 100), 95u);
    EXPECT_EQ(quantile_rank(0.025, 2), 1u);
    EXPECT_EQ(quantile_rank(0.975, 2), 2u);
    EXPECT_EQ(quantile_rank(0.0, 10), 1u);
    EXPECT_EQ(quantile_rank(1.0, 10), 10u);
}

TEST(BootstrapConfig, Validation) {
    const auto d = null_data(20, 1, 1, 1);
    auto c = config(1, 1);
    EXPECT_EQ(code_of([&] { (void)bootstrap_bands(d.regressors, d.residuals, c); }), ErrorCode::ConfigError);
    c = config(10, 1);
    c.level = 1.0;
    EXPECT_EQ(code_of([&] { (void)bootstrap_bands(d.regressors, d.residuals, c); }), ErrorCode::ConfigError);
    c.level = 0.0;
    EXPECT_EQ(code_of([&] { (void)bootstrap_bands(d.regressors, d.residuals, c); }), ErrorCode::ConfigError);
}

TEST(BootstrapBands, TwoReplicatesGiveMinAndMax) {
    const auto d = null_data(15, 2, 2, 2);
    const auto c = config(2, 5);
    const auto bands = bootstrap_bands(d.regressors, d.residuals, c);
    for (std::size_t i = 0; i < 2; ++i) {
        const Matrix reps = bootstrap_replicates(d.regressors, d.residuals, c, i);
        for (Eigen::Index t = 0; t < 15; ++t)
            for (Eigen::Index j = 0; j < 3; ++j) {
                const double a = reps(t * 3 + j, 0);
                const double b = reps(t * 3 + j, 1);
                const auto col = static_cast<Eigen::Index>(i) * 3 + j;
                EXPECT_EQ(bands.lower(t, col), std::min(a, b));
                EXPECT_EQ(bands.upper(t, col), std::max(a, b));
            }
    }
}

TEST(BootstrapBands, OrderStatisticsOfStoredReplicates) {
    const auto d = null_data(30, 1, 3, 3);
    const auto c = config(25, 77);
    const auto bands = bootstrap_bands(d.regressors, d.residuals, c);
    const Matrix reps = bootstrap_replicates(d.regressors, d.residuals, c, 0);
    ASSERT_EQ(reps.rows(), 30 * 4);
    ASSERT_EQ(reps.cols(), 25);
    for (Eigen::Index r = 0; r < reps.rows(); ++r) {
        std::vector<double> v;
        for (Eigen::Index c2 = 0; c2 < 25; ++c2) v.push_back(reps(r, c2));
        std::sort(v.begin(), v.end());
        // ceil(0.025 * 25) = 1, ceil(0.975 * 25) = 25
        EXPECT_EQ(bands.lower(r / 4, r % 4), v[0]);
        EXPECT_EQ(bands.upper(r / 4, r % 4), v[24]);
    }
    auto c80 = c;
    c80.level = 0.80;
    const auto b80 = bootstrap_bands(d.regressors, d.residuals, c80);
    for (Eigen::Index r = 0; r < reps.rows(); ++r) {
        std::vector<double> v;
        for (Eigen::Index c2 = 0; c2 < 25; ++c2) v.push_back(reps(r, c2));
        std::sort(v.begin(), v.end());
        // ceil(0.1 * 25) = 3, ceil(0.9 * 25) = 23
        EXPECT_EQ(b80.lower(r / 4, r % 4), v[2]);
        EXPECT_EQ(b80.upper(r / 4, r % 4), v[22]);
    }
}

TEST(BootstrapBands, ReplicatesSolveTheNullProblem) {
    const auto d = null_data(12, 2, 1, 4);
    const auto c = config(3, 9, 4.0);
    const Matrix reps = bootstrap_replicates(d.regressors, d.residuals, c, 1);
    for (std::size_t r = 0; r < 3; ++r) {
        const auto idx = resample_indices(c.seed, r, 0, 12);
        Matrix y(12, 1);
        for (Eigen::Index t = 0; t < 12; ++t) y(t, 0) = d.residuals(idx[static_cast<std::size_t>(t)], 1);
        const auto p = make_problem(d.regressors, y, Vector::Zero(2), 4.0);
        const Matrix dense = tvff::testing::dense_stacked_solve(p);
        for (Eigen::Index t = 0; t < 12; ++t)
            for (Eigen::Index j = 0; j < 2; ++j)
                EXPECT_NEAR(reps(t * 2 + j, static_cast<Eigen::Index>(r)), dense(t, j), 1e-10);
    }
}

TEST(BootstrapBands, OlsPriorReplicatesAnchorAtResampledFit) {
    const auto d = null_data(15, 3, 2, 6);
    auto c = config(4, 2, 1e6);
    c.ols_prior = true;
    const Matrix reps = bootstrap_replicates(d.regressors, d.residuals, c, 2);
    for (std::size_t r = 0; r < 4; ++r) {
        const auto idx = resample_indices(c.seed, r, 0, 15);
        Matrix y(15, 1);
        for (Eigen::Index t = 0; t < 15; ++t) y(t, 0) = d.residuals(idx[static_cast<std::size_t>(t)], 2);
        // normal equations, independent of the QR used by the engine
        const Matrix& X = d.regressors;
        const Vector ols = (X.transpose() * X).ldlt().solve(X.transpose() * y.col(0));
        const Matrix dense = tvff::testing::dense_stacked_solve(make_problem(X, y, ols, 1e6));
        for (Eigen::Index t = 0; t < 15; ++t)
            for (Eigen::Index j = 0; j < 3; ++j) {
                EXPECT_NEAR(reps(t * 3 + j, static_cast<Eigen::Index>(r)), dense(t, j), 1e-8);
                // with a stiff path the replicate stays on its own OLS fit
                EXPECT_NEAR(reps(t * 3 + j, static_cast<Eigen::Index>(r)), ols(j), 1e-3);
            }
    }
    // a zero prior with the same stiffness collapses the band toward zero
    c.ols_prior = false;
    const auto zero = bootstrap_bands(d.regressors, d.residuals, config(50, 2, 1e6));
    c.n_reps = 50;
    c.ols_prior = true;
    const auto anchored = bootstrap_bands(d.regressors, d.residuals, c);
    EXPECT_GT((anchored.upper - anchored.lower).minCoeff(), 10 * (zero.upper - zero.lower).maxCoeff());
}

TEST(BootstrapBands, DeterministicAcrossRunsAndThreadCounts) {
    const auto d = null_data(40, 5, 2, 5);
    auto c = config(60, 31337);
    c.threads = 1;
    const auto a = bootstrap_bands(d.regressors, d.residuals, c);
    const auto b = bootstrap_bands(d.regressors, d.residuals, c);
    c.threads = 4;
    const auto e = bootstrap_bands(d.regressors, d.residuals, c);
    EXPECT_EQ(a.lower, b.lower);
    EXPECT_EQ(a.upper, b.upper);
    EXPECT_EQ(a.lower, e.lower);
    EXPECT_EQ(a.upper, e.upper);
    c.seed = 31338;
    EXPECT_NE(bootstrap_bands(d.regressors, d.residuals, c).lower, a.lower);
}

TEST(BootstrapBands, WiderLevelContainsNarrower) {
    const auto d = null_data(30, 3, 2, 6);
    auto c = config(200, 8);
    c.level = 0.90;
    const auto b90 = bootstrap_bands(d.regressors, d.residuals, c);
    c.level = 0.99;
    const auto b99 = bootstrap_bands(d.regressors, d.residuals, c);
    EXPECT_TRUE((b99.lower.array() <= b90.lower.array()).all());
    EXPECT_TRUE((b99.upper.array() >= b90.upper.array()).all());
    EXPECT_TRUE((b90.lower.array() <= b90.upper.array()).all());
}

TEST(BootstrapBands, JointResamplingKeepsRowsTogether) {
    auto d = null_data(25, 2, 1, 7);
    d.residuals.col(1) = d.residuals.col(0);
    auto c = config(20, 3);
    const Matrix r0 = bootstrap_replicates(d.regressors, d.residuals, c, 0);
    EXPECT_EQ(r0, bootstrap_replicates(d.regressors, d.residuals, c, 1));
    c.joint_resampling = false;
    EXPECT_NE(bootstrap_replicates(d.regressors, d.residuals, c, 0), bootstrap_replicates(d.regressors, d.residuals, c, 1));
}

TEST(BootstrapBands, ResamplingPreservesCrossSectionalCovariance) {
    const auto d = null_data(200, 3, 1, 8);
    auto cov = [](const Matrix& x) {
        const Matrix c = x.rowwise() - x.colwise().mean();
        return Matrix(c.transpose() * c / static_cast<double>(x.rows() - 1));
    };
    Matrix big(200 * 100, 3);
    for (std::size_t r = 0; r < 100; ++r) {
        const auto idx = resample_indices(42, r, 0, 200);
        for (Eigen::Index t = 0; t < 200; ++t)
            big.row(static_cast<Eigen::Index>(r) * 200 + t) = d.residuals.row(idx[static_cast<std::size_t>(t)]);
    }
    const Matrix c0 = cov(d.residuals);
    EXPECT_LE((cov(big) - c0).norm(), 0.10 * c0.norm());
}

TEST(BootstrapBands, NonFiniteReplicateFails) {
    Matrix X(10, 2);
    X.col(0).setOnes();
    X.col(1).setConstant(10.0);
    Matrix u = Matrix::Constant(10, 1, 1e308);
    try {
        (void)bootstrap_bands(X, u, config(5, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ReplicateFailed);
        EXPECT_NE(std::string(e.what()).find("replicate"), std::string::npos);
    }
}

TEST(BootstrapBands, PanelOverloadChecksShapes) {
    const std::vector<std::string> names{"Mkt-RF", "SMB", "HML"};
    const auto d = null_data(40, 2, 3, 9);
    const ReturnPanel factors(MonthStamp(2000, 1), names, d.regressors.rightCols(3));
    const ReturnPanel excess(MonthStamp(2000, 1), {"A", "B"}, d.residuals);
    const auto spec = ModelSpec::make(FactorModel::FF3);
    const auto fit = static_ols(spec, excess, factors);
    const auto bands = bootstrap_bands(spec, excess, factors, fit, config(10, 1));
    EXPECT_EQ(bands.lower.rows(), 40);
    EXPECT_EQ(bands.lower.cols(), 8);
    StaticFit bad = fit;
    bad.residuals = bad.residuals.leftCols(1);
    EXPECT_EQ(code_of([&] { (void)bootstrap_bands(spec, excess, factors, bad, config(10, 1)); }), ErrorCode::ShapeError);
}

TEST(FlagSignificance, ClosedIntervalAndInfiniteBands) {
    TvSolution s;
    s.gamma = (Matrix(2, 2) << 1.0, 2.0, 3.0, -1.0).finished();
    BandSet b;
    b.lower = (Matrix(2, 2) << 1.0, 2.5, 3.5, -2.0).finished();
    b.upper = (Matrix(2, 2) << 1.5, 3.0, 4.0, -1.0).finished();
    const BoolMatrix f = flag_significance(s, b);
    EXPECT_FALSE(f(0, 0));  // equal to lower
    EXPECT_TRUE(f(0, 1));
    EXPECT_TRUE(f(1, 0));
    EXPECT_FALSE(f(1, 1));  // equal to upper

    const double inf = std::numeric_limits<double>::infinity();
    b.lower.setConstant(-inf);
    b.upper.setConstant(inf);
    EXPECT_FALSE(flag_significance(s, b).any());

    b.lower.resize(1, 2);
    EXPECT_EQ(code_of([&] { (void)flag_significance(s, b); }), ErrorCode::ShapeError);
}

TEST(FlagSignificance, MatchesScalarLoop) {
    const auto sim = tvff::testing::simulate_tv(25, 2, 2, 10, 5, 10);
    const auto s = solve_tv(sim.problem);
    const auto d = null_data(25, 2, 2, 11);
    const auto bands = bootstrap_bands(sim.problem.regressors, d.residuals, config(50, 12, 5));
    const BoolMatrix f = flag_significance(s, bands);
    for (Eigen::Index t = 0; t < f.rows(); ++t)
        for (Eigen::Index j = 0; j < f.cols(); ++j) {
            const double g = s.gamma(t, j);
            const bool outside = g < bands.lower(t, j) || g > bands.upper(t, j);
            EXPECT_EQ(f(t, j), outside);
        }
}
