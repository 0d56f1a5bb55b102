#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "stochsrc/inverse.hpp"
#include "stochsrc/statest.hpp"

using namespace stochsrc;

namespace {

struct Problem {
    GridSpec g;
    std::vector<std::uint8_t> mask;
    FieldSample mu;
    MeasurementSet ms;
};

Problem disk_problem(double sigma_width = 0.2) {
    Problem p;
    p.g = GridSpec::centered(2, 32, 2.0);
    p.mask = ball_mask(p.g, {0, 0, 0}, 0.2);
    p.mu = FieldSample(p.g);
    for (std::size_t j = 0; j < p.mu.values.size(); ++j)
        if (p.mask[j]) {
            const double r = distance(p.g.center(j), {0, 0, 0}, 2);
            p.mu.values[j] = std::exp(-r * r / (2.0 * sigma_width * sigma_width));
        }
    p.ms.d = 2;
    p.ms.r0 = 0.04;
    p.ms.points = ring_points(2, {0, 0, 0}, 0.4, 64);
    return p;
}

Eigen::VectorXd limit_data(const Problem& p, double sigma) {
    const auto T = limit_functional(p.mu, sigma, p.ms, 2);
    return Eigen::Map<const Eigen::VectorXd>(T.values.data(), Eigen::Index(T.values.size()));
}

} // namespace

TEST(ForwardMap, MatchesLimitFunctional) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    EXPECT_EQ(fm.columns.size(), 32u);
    const auto data = limit_data(p, 1.0);
    EXPECT_LT((fm.apply(p.mu) - data).norm(), 1e-13 * data.norm());
}

TEST(ForwardMap, AdjointConsistency) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd x(fm.A.cols()), v(fm.A.rows());
        for (auto& e : x) e = nd(rng);
        for (auto& e : v) e = nd(rng);
        const double lhs = (fm.A * x).dot(v), rhs = x.dot(fm.A.transpose() * v);
        EXPECT_NEAR(lhs, rhs, 1e-13 * std::abs(lhs) + 1e-15);
    }
}

TEST(ForwardMap, ParallelAssemblyIsIdentical) {
    const auto p = disk_problem();
    const auto a = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2, 1);
    const auto b = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2, 4);
    EXPECT_TRUE(a.A == b.A);
    EXPECT_THROW(assemble_forward_map(p.g, p.mask, p.ms, 1.0, 3), ValidationError);
}

TEST(ForwardMap, RestrictExpandRoundTrip) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    EXPECT_EQ(fm.expand(fm.restrict(p.mu)).values, p.mu.values);
}

TEST(Tikhonov, ExactDataRoundTrip) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    const TikhonovSolver solver(fm.A);
    const auto r = reconstruct_tikhonov(fm, solver, limit_data(p, 1.0), 1e-16 * solver.norm_squared(), true);
    EXPECT_LT(relative_l2_error(r.mu.mu, p.mu), 0.15);
}

TEST(Tikhonov, ZeroDataGivesZero) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    const auto r = reconstruct_tikhonov(fm, Eigen::VectorXd::Zero(fm.A.rows()), 1e-10, true);
    for (double v : r.mu.mu.values) EXPECT_EQ(v, 0.0);
}

TEST(Tikhonov, MonotoneInLambda) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    const TikhonovSolver solver(fm.A);
    Eigen::VectorXd data = limit_data(p, 1.0);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    for (auto& e : data) e *= 1.0 + 0.05 * nd(rng);
    double last_res = -1.0, last_pen = 1e300;
    for (double rel = 1e-14; rel < 1.0; rel *= 10.0) {
        const auto r = reconstruct_tikhonov(fm, solver, data, rel * solver.norm_squared(), false);
        EXPECT_GE(r.residual_raw, last_res * (1 - 1e-12));
        EXPECT_LE(r.penalty, last_pen * (1 + 1e-12));
        last_res = r.residual_raw;
        last_pen = r.penalty;
    }
}

TEST(Tikhonov, ProjectionAndFlags) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    const TikhonovSolver solver(fm.A);
    Eigen::VectorXd data = -limit_data(p, 1.0);
    const auto r = reconstruct_tikhonov(fm, solver, data, 1e-6 * solver.norm_squared(), true);
    EXPECT_GE(r.projected.minCoeff(), 0.0);
    EXPECT_LT(r.raw.minCoeff(), 0.0);
    const auto tiny = reconstruct_tikhonov(fm, solver, data, 1e-20 * solver.norm_squared(), true);
    EXPECT_TRUE(tiny.ill_conditioned);
    EXPECT_FALSE(r.ill_conditioned);
    EXPECT_THROW(reconstruct_tikhonov(fm, solver, data, 0.0, true), ValidationError);
    EXPECT_THROW(reconstruct_tikhonov(fm, solver, Eigen::VectorXd::Zero(3), 1.0, true), ValidationError);
}

TEST(Tikhonov, DiscrepancyPrincipleMeetsTheBound) {
    const auto p = disk_problem();
    const auto fm = assemble_forward_map(p.g, p.mask, p.ms, 1.0, 2);
    const TikhonovSolver solver(fm.A);
    const Eigen::VectorXd clean = limit_data(p, 1.0);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    Eigen::VectorXd e(clean.size());
    for (auto& v : e) v = nd(rng);
    const double delta = 0.01 * clean.norm();
    const Eigen::VectorXd noisy = clean + e * (delta / e.norm());
    const double lam = discrepancy_lambda(solver, noisy, delta);
    EXPECT_LE(solver.residual(solver.solve(noisy, lam), noisy), delta);
    EXPECT_GT(solver.residual(solver.solve(noisy, lam * 1.2), noisy), 0.9 * delta);
    const auto r = reconstruct_tikhonov(fm, solver, noisy, lam, true);
    EXPECT_LT(relative_l2_error(r.mu.mu, p.mu), 0.25);
}

TEST(Interpolate, ExactForLinearFunctions) {
    const auto g = GridSpec::centered(3, 8, 2.0);
    FieldSample f(g);
    for (std::size_t j = 0; j < f.values.size(); ++j) {
        const auto c = g.center(j);
        f.values[j] = 1.0 + 2.0 * c[0] - c[1] + 0.5 * c[2];
    }
    const Point x{0.13, -0.41, 0.2};
    EXPECT_NEAR(interpolate(f, x), 1.0 + 0.26 + 0.41 + 0.1, 1e-14);
    EXPECT_EQ(interpolate(f, {5.0, 0.0, 0.0}), 0.0);
}

TEST(SphericalMeans, ConstantStrengthGivesSurfaceMeasure) {
    for (int d : {2, 3}) {
        const auto g = GridSpec::centered(d, d == 2 ? 64 : 24, 2.0);
        FieldSample one(g);
        for (std::size_t j = 0; j < one.values.size(); ++j)
            one.values[j] = distance(g.center(j), {0, 0, 0}, d) < 0.8 ? 1.0 : 0.0;
        const auto S = spherical_means(one, {0, 0, 0}, {0.3, 0.5});
        const double surf = d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
        for (std::size_t q = 0; q < 2; ++q)
            EXPECT_NEAR(S.values[q] / (surf * std::pow(S.radii[q], d - 1)), 1.0, 1e-12) << d;
    }
}

TEST(SphericalMeans, CoareaMatchesLimitFunctional) {
    const auto g = GridSpec::centered(3, 32, 2.0);
    const auto mu = gaussian_bump(g, {0, 0, 0}, 0.2, 1.0, 0.5);
    MeasurementSet ms;
    ms.d = 3;
    ms.r0 = 0.1;
    ms.points = {{0.8, 0.1, -0.2}};
    const auto T = limit_functional(mu, 0.5, ms, 3);
    const auto S = spherical_means(mu, ms.points[0], radii_for(mu, ms.points[0], 121));
    const double t = radial_integral(S, [](double r) { return limit_weight(3, 0.5, r); });
    EXPECT_NEAR(t / T.values[0], 1.0, 0.01);
}

TEST(Deconvolution, ZeroCutoffLimitKeepsOnlyTheMean) {
    const auto g = GridSpec::centered(2, 32, 12.0);
    const auto mu = gaussian_bump(g, {0, 0, 0}, 0.8, 1.0, 2.5);
    const auto conv = gaussian_convolve_grid(mu);
    const auto rec = gaussian_deconvolve(conv, 1e-9);
    double mean = 0.0;
    for (double v : mu.values) mean += v;
    mean /= double(mu.values.size());
    for (double v : rec.mu.values) EXPECT_NEAR(v, rec.mu.values[0], 1e-12);
    EXPECT_NEAR(rec.mu.values[0] / mean, 1.0, 1e-3);
    EXPECT_THROW(gaussian_deconvolve(conv, 0.0), ValidationError);
}

TEST(Deconvolution, RoundTripInTheBulk) {
    const auto g = GridSpec::centered(2, 64, 16.0);
    const auto mu = gaussian_bump(g, {0.3, -0.2, 0}, 0.6, 1.0, 2.0);
    const auto rec = gaussian_deconvolve(gaussian_convolve_grid(mu), default_deconvolution_cutoff());
    for (std::size_t j = 0; j < mu.values.size(); ++j)
        if (mu.values[j] > 0.1) EXPECT_NEAR(rec.mu.values[j] / mu.values[j], 1.0, 0.10);
}

TEST(Deconvolution, DefaultCutoff) {
    EXPECT_NEAR(std::exp(std::pow(default_deconvolution_cutoff(), 2) / 2.0), 1e6, 1e-6);
}

TEST(GaussianConvolution, MeansRouteMatchesDirect) {
    const auto g = GridSpec::centered(2, 96, 8.0);
    const auto mu = gaussian_bump(g, {0, 0, 0}, 0.7, 1.0, 2.0);
    const Point x{3.2, 0.5, 0.0};
    const auto S = spherical_means(mu, x, radii_for(mu, x, 257));
    EXPECT_NEAR(gaussian_convolve_means(S) / gaussian_convolve_direct(mu, x), 1.0, 0.01);
}
