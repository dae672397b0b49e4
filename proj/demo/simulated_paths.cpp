// Simulates the random-walk coefficient model the estimator assumes (alpha and
// beta drift with variance noise^2 / lambda), then compares the time-varying
// estimate and its bootstrap band with the static fit.
//
//   simulated_paths [T] [seed]

#include <cstdio>
#include <cstdlib>
#include <random>

#include "tvff/tvff.hpp"

using namespace tvff;

int main(int argc, char** argv) {
    const Eigen::Index T = argc > 1 ? std::atoi(argv[1]) : 360;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;
    if (T < 24) {
        std::fprintf(stderr, "need at least 24 months\n");
        return 2;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    const double noise = 1.0;
    const double true_lambda = 400;
    const double step = noise / std::sqrt(true_lambda);

    // market factor in standard-deviation units; portfolio 0 drifts, portfolio 1 has alpha 0 and beta 1
    Matrix X(T, 2), Y(T, 2), truth(T, 4);
    double alpha = 0.0, beta = 1.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        alpha += step * n01(rng);
        beta += step * n01(rng);
        const double mkt = n01(rng);
        X.row(t) << 1.0, mkt;
        truth.row(t) << alpha, beta, 0.0, 1.0;
        Y(t, 0) = alpha + beta * mkt + noise * n01(rng);
        Y(t, 1) = mkt + noise * n01(rng);
    }

    const Matrix coef = X.colPivHouseholderQr().solve(Y);
    const Vector gamma0 = flatten_coefficients(coef.transpose());
    const auto sel = select_lambda(X, Y, gamma0, default_lambda_grid());
    const auto sol = solve_tv(make_problem(X, Y, gamma0, sel.lambda));

    BootstrapConfig bc;
    bc.n_reps = 500;
    bc.seed = seed;
    bc.lambda = sel.lambda;
    bc.ols_prior = true;
    auto bands = bootstrap_bands(X, Y - X * coef, bc);
    bands.significant = flag_significance(sol, bands);

    std::printf("T = %ld, true lambda = %g, selected lambda = %g\n", static_cast<long>(T), true_lambda, sel.lambda);
    std::printf("%-10s %10s %10s %10s\n", "portfolio", "static", "tv rmse", "static rmse");
    for (Eigen::Index i = 0; i < 2; ++i) {
        const auto est = sol.gamma.col(i * 2 + 1);
        const auto tru = truth.col(i * 2 + 1);
        const double tv_rmse = std::sqrt((est - tru).squaredNorm() / static_cast<double>(T));
        const double st_rmse = std::sqrt((tru.array() - coef(1, i)).square().mean());
        std::printf("%-10s %10.4f %10.4f %10.4f\n", i == 0 ? "drifting" : "fixed", coef(1, i), tv_rmse, st_rmse);
    }

    std::printf("\ndrifting beta path (every %ld months)\n", static_cast<long>(T / 12));
    std::printf("%6s %8s %8s %8s %8s %4s\n", "month", "true", "est", "lower", "upper", "sig");
    for (Eigen::Index t = 0; t < T; t += T / 12) {
        std::printf("%6ld %8.3f %8.3f %8.3f %8.3f %4s\n", static_cast<long>(t + 1), truth(t, 1), sol.gamma(t, 1), bands.lower(t, 1),
                    bands.upper(t, 1), bands.significant(t, 1) ? "*" : "");
    }

    const auto share = [&](Eigen::Index col) { return bands.significant.col(col).cast<double>().mean(); };
    std::printf("\nshare of months with alpha outside the null band: %.3f, %.3f\n", share(0), share(2));
    return 0;
}
