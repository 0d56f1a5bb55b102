#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "stochsrc/oracle.hpp"
#include "stochsrc/randfield.hpp"

using namespace stochsrc;

TEST(Roughness, Range) {
    EXPECT_NO_THROW(validate_roughness(0.0, 2));
    EXPECT_NO_THROW(validate_roughness(1.99, 2));
    EXPECT_THROW(validate_roughness(2.0, 2), ValidationError);
    EXPECT_NO_THROW(validate_roughness(2.49, 3));
    EXPECT_THROW(validate_roughness(-0.1, 3), ValidationError);
    EXPECT_THROW(validate_roughness(NAN, 2), ValidationError);
}

TEST(KernelConstants, FrozenHighPrecisionValues) {
    const double inv2pi = 1.0 / (2.0 * std::numbers::pi);
    EXPECT_NEAR(kernel_constant_c1(0.5, 2), inv2pi, 1e-15);
    EXPECT_NEAR(kernel_constant_c1(1.5, 2), -inv2pi, 1e-15);
    EXPECT_NEAR(kernel_constant_c1(0.75, 3), 0.063493635934240969, 1e-15);
    EXPECT_NEAR(kernel_constant_c1(1.0, 3), 0.079577471545947673, 1e-15);
    EXPECT_NEAR(kernel_constant_c1(2.25, 3), -0.033863272498261848, 1e-15);
    EXPECT_NEAR(kernel_constant_c2(1.0, 2), -inv2pi, 1e-15);
    EXPECT_NEAR(kernel_constant_c2(2.0, 2), 0.039788735772973836, 1e-15);
    EXPECT_NEAR(kernel_constant_c2(1.5, 3), -0.050660591821168888, 1e-15);
    EXPECT_NEAR(kernel_constant_c2(2.5, 3), 0.0084434319701948146, 1e-15);
}

TEST(KernelConstants, AgreeWithOracleOnAGrid) {
    for (int d : {2, 3})
        for (int i = 1; i < 10 * (d + 2); ++i) {
            const double s = i / 20.0;
            if (kernel_is_logarithmic(s, d)) continue;
            EXPECT_NEAR(kernel_constant_c1(s, d) / oracle::kernel_c1(s, d), 1.0, 1e-12) << s << " " << d;
        }
}

TEST(KernelConstants, BranchSelection) {
    EXPECT_TRUE(kernel_is_logarithmic(1.0, 2));
    EXPECT_TRUE(kernel_is_logarithmic(2.5, 3));
    EXPECT_FALSE(kernel_is_logarithmic(0.5, 2));
    EXPECT_FALSE(kernel_is_logarithmic(1.0, 3));
    EXPECT_THROW(kernel_constant_c1(1.0, 2), DomainError);
    EXPECT_THROW(kernel_constant_c2(1.5, 2), DomainError);
}

TEST(Kernel, NewtonianPotentialIn3D) {
    for (double r : {0.1, 1.0, 7.0}) EXPECT_NEAR(kernel_fgf(1.0, 3, r), 1.0 / (4.0 * std::numbers::pi * r), 1e-15);
    EXPECT_NEAR(kernel_fgf(1.0, 2, 2.0), -std::log(2.0) / (2.0 * std::numbers::pi), 1e-15);
    EXPECT_THROW(kernel_fgf(0.0, 2, 1.0), DomainError);
    EXPECT_THROW(kernel_fgf(1.0, 2, 0.0), DomainError);
}

TEST(Sampler, DeterministicPerSeed) {
    const auto g = GridSpec::centered(2, 32, 1.0);
    const auto a = sample_fgf(g, 1.2, 42), b = sample_fgf(g, 1.2, 42), c = sample_fgf(g, 1.2, 43);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    FgfSampler reuse(g, 1.2);
    std::vector<double> out;
    reuse.sample(7, out);
    reuse.sample(42, out);
    EXPECT_EQ(out, a.values);
}

TEST(Sampler, ZeroModeRemoved) {
    for (int d : {2, 3}) {
        const auto g = GridSpec::centered(d, 16, 1.0);
        const auto h = sample_fgf(g, 0.7, 5);
        double sum = 0.0, sq = 0.0;
        for (double v : h.values) {
            sum += v;
            sq += v * v;
        }
        EXPECT_LT(std::abs(sum), 1e-10 * std::sqrt(sq * double(h.values.size())));
    }
}

TEST(Sampler, WhiteNoiseScale) {
    const auto g = GridSpec::centered(2, 128, 2.0);
    const auto w = sample_white_noise(g, 3);
    double sq = 0.0;
    for (double v : w.values) sq += v * v;
    const double var = sq / double(w.values.size());
    EXPECT_NEAR(var * g.cell_volume(), 1.0, 4.0 * std::sqrt(2.0 / double(w.values.size())));
}

TEST(Sampler, RoughnessZeroIsCenteredWhiteNoise) {
    const auto g = GridSpec::centered(2, 16, 1.0);
    const auto w = sample_white_noise(g, 9);
    const auto h = sample_fgf(g, 0.0, 9);
    double mean = 0.0;
    for (double v : w.values) mean += v;
    mean /= double(w.values.size());
    for (std::size_t j = 0; j < w.values.size(); ++j) EXPECT_NEAR(h.values[j], w.values[j] - mean, 1e-12);
}

TEST(SpectralPairing, HermitianAndPositive) {
    const auto g = GridSpec::centered(2, 32, 1.0);
    const auto p = gaussian_bump(g, {0.1, 0, 0}, 0.05, 1.0, 0.3);
    const auto q = gaussian_bump(g, {-0.1, 0.05, 0}, 0.08, 2.0, 0.3);
    for (double s : {0.3, 1.0, 1.7}) {
        EXPECT_NEAR(covariance_quadform(p, q, s), covariance_quadform(q, p, s), 1e-15);
        EXPECT_GT(covariance_quadform(p, p, s), 0.0);
        const double pq = covariance_quadform(p, q, s);
        EXPECT_LE(pq * pq, covariance_quadform(p, p, s) * covariance_quadform(q, q, s) * (1 + 1e-12));
    }
}

TEST(SpectralPairing, MatchesMonteCarlo) {
    const auto g = GridSpec::centered(2, 32, 1.0);
    const auto p = gaussian_bump(g, {0.1, 0, 0}, 0.05, 1.0, 0.3);
    const auto q = gaussian_bump(g, {-0.15, 0.05, 0}, 0.08, 1.0, 0.3);
    const double s = 0.8;
    FgfSampler sampler(g, s);
    std::vector<double> h, prod;
    const std::size_t M = 3000;
    for (std::size_t r = 0; r < M; ++r) {
        sampler.sample(1000 + r, h);
        prod.push_back(grid_pairing(h, p) * grid_pairing(h, q));
    }
    double mean = 0.0, var = 0.0;
    for (double v : prod) mean += v;
    mean /= double(M);
    for (double v : prod) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / double(M - 1) / double(M));
    EXPECT_LT(std::abs(mean - covariance_quadform(p, q, s)), 4.0 * se);
}

TEST(Source, RealizationIsAmplitudeTimesField) {
    SourceModel m;
    m.grid = GridSpec::centered(2, 32, 2.0);
    m.s = 1.0;
    m.seed = 11;
    m.amplitude = gaussian_bump(m.grid, {0, 0, 0}, 0.2, 1.5, 0.5);
    const auto r = build_source(m);
    EXPECT_EQ(r.hs.values, sample_fgf(m.grid, 1.0, 11).values);
    for (std::size_t j = 0; j < r.f.values.size(); ++j)
        EXPECT_EQ(r.f.values[j], m.amplitude.values[j] * r.hs.values[j]);
    const auto mu = strength_of(m);
    EXPECT_DOUBLE_EQ(mu.values[m.grid.flatten({16, 16, 0})], std::pow(m.amplitude.values[m.grid.flatten({16, 16, 0})], 2));
}

TEST(Source, ValidationErrors) {
    SourceModel m;
    m.grid = GridSpec::centered(2, 32, 2.0);
    m.amplitude = gaussian_bump(m.grid, {0, 0, 0}, 0.2, 1.0, 0.5);
    m.s = 2.0;
    EXPECT_THROW(validate_source_model(m), ValidationError);
    m.s = 1.0;
    m.amplitude.values[m.grid.flatten({16, 16, 0})] = -1.0;
    EXPECT_THROW(validate_source_model(m), ValidationError);
    m.amplitude = gaussian_bump(m.grid, {0.95, 0, 0}, 0.2, 1.0, 0.2);
    EXPECT_THROW(validate_source_model(m), ValidationError);
}
