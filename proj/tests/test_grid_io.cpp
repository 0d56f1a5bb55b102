#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "stochsrc/config.hpp"
#include "stochsrc/fft.hpp"
#include "stochsrc/grid.hpp"
#include "stochsrc/io.hpp"
#include "stochsrc/specfun.hpp"

using namespace stochsrc;

namespace {
std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "stochsrc_test_grid_io";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}
} // namespace

TEST(Grid, FlattenRoundTrip) {
    for (int d : {2, 3}) {
        const auto g = GridSpec::centered(d, 9, 3.0);
        for (std::size_t j = 0; j < g.size(); j += 7) EXPECT_EQ(g.flatten(g.unflatten(j)), j);
    }
}

TEST(Grid, CenteredBoxIsSymmetric) {
    const auto g = GridSpec::centered(2, 8, 2.0);
    EXPECT_DOUBLE_EQ(g.center(0)[0], -0.875);
    EXPECT_DOUBLE_EQ(g.center(g.size() - 1)[1], 0.875);
    EXPECT_DOUBLE_EQ(g.cell_volume(), 0.0625);
}

TEST(Grid, ValidationRejectsSmallOrBadGrids) {
    EXPECT_THROW(validate_grid(GridSpec::centered(2, 4, 1.0)), ValidationError);
    EXPECT_THROW(validate_grid(GridSpec::centered(4, 16, 1.0)), ValidationError);
    EXPECT_THROW(validate_grid(GridSpec::centered(2, 16, -1.0)), ValidationError);
    EXPECT_NO_THROW(validate_grid(GridSpec::centered(3, 8, 1.0)));
}

TEST(Grid, SupportBoxAndMargin) {
    const auto g = GridSpec::centered(2, 32, 2.0);
    const auto f = gaussian_bump(g, {0, 0, 0}, 0.2, 1.0, 0.3);
    const auto b = support_box(f);
    ASSERT_FALSE(b.empty);
    EXPECT_NEAR(b.hi[0], 0.3125, 1e-12);
    EXPECT_NEAR(b.distance_to({1.0, 0.0, 0.0}, 2), 1.0 - 0.3125, 1e-12);
    EXPECT_EQ(b.distance_to({0.1, 0.1, 0.0}, 2), 0.0);
    EXPECT_NO_THROW(check_support_margin(f));
    EXPECT_THROW(check_support_margin(gaussian_bump(g, {0.95, 0, 0}, 0.2, 1.0, 0.1)), ValidationError);
}

TEST(Fft, ForwardBackwardIsScaledIdentity) {
    const auto g = GridSpec::centered(3, 8, 1.0);
    GridFft fft(g);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<std::complex<double>> x(g.size());
    for (auto& v : x) v = {nd(rng), nd(rng)};
    std::copy(x.begin(), x.end(), fft.data());
    fft.forward();
    fft.backward();
    for (std::size_t j = 0; j < x.size(); ++j) EXPECT_LT(std::abs(fft.data()[j] / double(g.size()) - x[j]), 1e-13);
}

TEST(Fft, FrequencyModulusIsSymmetric) {
    const auto g = GridSpec::centered(2, 8, 2.0);
    const auto k = frequency_modulus(g);
    EXPECT_EQ(k[0], 0.0);
    EXPECT_DOUBLE_EQ(k[g.flatten({0, 1, 0})], std::numbers::pi);
    EXPECT_DOUBLE_EQ(k[g.flatten({0, 7, 0})], std::numbers::pi);
    EXPECT_DOUBLE_EQ(k[g.flatten({4, 0, 0})], 4.0 * std::numbers::pi);
}

TEST(GridFile, RealAndComplexRoundTrip) {
    auto g = GridSpec::centered(3, 8, 1.5);
    g.origin = {0.25, -1.0, 3.0};
    FieldSample f(g);
    ComplexField c(g);
    for (std::size_t j = 0; j < f.values.size(); ++j) {
        f.values[j] = std::sin(double(j)) * 1e-300 * double(j % 3 == 0) + double(j) / 7.0;
        c.values[j] = {double(j), -1.0 / (1.0 + double(j))};
    }
    write_grid(temp_path("r.hsgf"), f);
    write_grid(temp_path("c.hsgf"), c);
    const auto fr = read_grid(temp_path("r.hsgf"));
    const auto cr = read_complex_grid(temp_path("c.hsgf"));
    EXPECT_TRUE(fr.grid == g);
    EXPECT_EQ(fr.values, f.values);
    EXPECT_EQ(cr.values, c.values);
    EXPECT_THROW(read_grid(temp_path("c.hsgf")), IoError);
    const auto promoted = read_complex_grid(temp_path("r.hsgf"));
    for (std::size_t j = 0; j < f.values.size(); ++j) EXPECT_EQ(promoted.values[j], cplx(f.values[j], 0.0));
}

TEST(GridFile, Errors) {
    EXPECT_THROW(read_grid(temp_path("missing.hsgf")), IoError);
    write_text(temp_path("bad.hsgf"), "NOPE1234");
    EXPECT_THROW(read_grid(temp_path("bad.hsgf")), IoError);
    FieldSample f(GridSpec::centered(2, 8, 1.0));
    write_grid(temp_path("t.hsgf"), f);
    const auto full = read_text(temp_path("t.hsgf"));
    write_text(temp_path("t.hsgf"), full.substr(0, full.size() - 5));
    EXPECT_THROW(read_grid(temp_path("t.hsgf")), IoError);
}

TEST(KeyValues, ParseCommentsAndErrors) {
    std::istringstream is("# header\n a.b = 1 2 3 # trailing\n\nc = x\n");
    const auto kv = parse_key_values(is);
    EXPECT_EQ(kv.at("a.b"), "1 2 3");
    EXPECT_EQ(kv.at("c"), "x");
    std::istringstream bad("novalue\n");
    EXPECT_THROW(parse_key_values(bad), ValidationError);
}

TEST(Format, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(fmt(v)), v);
}

TEST(Config, SerializeParseRoundTripIsLossless) {
    ExperimentConfig c;
    c.dimension = 3;
    c.source_center = {0.1, -0.2, 0.3};
    c.k_list = {5, 7.5, 1.0 / 3.0};
    c.lambda = 3e-15;
    c.verify["c1.tol"] = "1e-9";
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    EXPECT_EQ(serialize_config(back), text);
    EXPECT_EQ(back.k_list, c.k_list);
    EXPECT_EQ(back.source_center, c.source_center);
    EXPECT_EQ(back.verify.at("c1.tol"), "1e-9");
}

TEST(Config, ErrorsNameTheField) {
    auto expect_field = [](const std::string& text, const std::string& field) {
        try {
            parse_config(text);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const ValidationError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    expect_field("source.s = 2.5\n", "source.s");
    expect_field("grid.n = 4\n", "grid.n");
    expect_field("medium.sigma = -1\n", "medium.sigma");
    expect_field("estimate.method = magic\n", "estimate.method");
    expect_field("nonsense.key = 1\n", "nonsense.key");
    expect_field("grid.L = abc\n", "grid.L");
}
