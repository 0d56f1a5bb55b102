#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "stochsrc/pipeline.hpp"

using namespace stochsrc;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "stochsrc_test_pipeline" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

ExperimentConfig small_config(const std::string& out) {
    return parse_config("grid.n = 32\n"
                        "forward.k = 4 8\n"
                        "measurement.count = 5\n"
                        "estimate.M = 30\n"
                        "estimate.K = 8\n"
                        "estimate.n_k = 16\n"
                        "run.out = " + out + "\n");
}

std::string file(const pipeline::Outputs& o, const std::string& name) {
    return read_text((fs::path(o.dir) / name).string());
}

int count_rows(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int rows = 0;
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#') ++rows;
    return rows;
}

std::ostringstream quiet;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(STOCHSRC_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Sample, WritesGridsAndManifestReproducibly) {
    const auto c = small_config(scratch("sample"));
    const auto a = pipeline::cmd_sample(c, quiet);
    EXPECT_EQ(a.files, (std::vector<std::string>{"manifest_sample.txt", "amplitude.hsgf", "hs.hsgf", "f.hsgf"}));
    const auto hs = file(a, "hs.hsgf"), f = file(a, "f.hsgf");
    const auto b = pipeline::cmd_sample(c, quiet);
    EXPECT_EQ(file(b, "hs.hsgf"), hs);
    EXPECT_EQ(file(b, "f.hsgf"), f);
    const auto rerun = load_config((fs::path(a.dir) / "manifest_sample.txt").string());
    EXPECT_EQ(serialize_config(rerun), serialize_config(c));
}

TEST(Sample, RoughnessOutOfRangeNamesField) {
    try {
        parse_config("source.s = 5\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("source.s"), std::string::npos);
    }
}

TEST(Forward, OneTablePerKWithOneRowPerPoint) {
    const auto c = small_config(scratch("forward"));
    pipeline::cmd_sample(c, quiet);
    const auto o = pipeline::cmd_forward(c, quiet);
    EXPECT_EQ(count_rows(file(o, "measurements_000.txt")), 5);
    EXPECT_EQ(count_rows(file(o, "measurements_001.txt")), 5);
}

TEST(Forward, ZeroSourceAndEmptySchedule) {
    auto c = small_config(scratch("forward_zero"));
    const auto zero_path = (fs::path(c.out_dir) / "zero.hsgf").string();
    write_grid(zero_path, FieldSample(pipeline::source_grid(c)));
    c.forward_source = zero_path;
    const auto o = pipeline::cmd_forward(c, quiet);
    std::istringstream is(file(o, "measurements_000.txt"));
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        double x, y, re, im;
        std::istringstream ls(line);
        ls >> x >> y >> re >> im;
        EXPECT_EQ(re, 0.0);
        EXPECT_EQ(im, 0.0);
    }
    c.k_list.clear();
    EXPECT_THROW(pipeline::cmd_forward(c, quiet), ValidationError);
    c.k_list = {4};
    c.forward_source = zero_path + ".missing";
    EXPECT_THROW(pipeline::cmd_forward(c, quiet), IoError);
}

TEST(Config, DefaultsSatisfyResolution) {
    const ExperimentConfig c;
    const GridSpec g = pipeline::source_grid(c);
    for (double k : c.k_list) EXPECT_LE(wavenumber_split(k, c.sigma).kappa_r * g.h(), c.max_kh) << "k = " << k;
}

TEST(Pipeline, CommandsShareAnOutputDirectory) {
    auto c = small_config(scratch("shared"));
    pipeline::cmd_sample(c, quiet);
    pipeline::cmd_forward(c, quiet);
    pipeline::cmd_estimate(c, quiet);
    pipeline::cmd_reconstruct(c, quiet);
    for (const char* name : {"manifest_sample.txt", "manifest_forward.txt", "manifest_estimate.txt",
                             "manifest_reconstruct.txt", "estimate_report.txt", "reconstruct_report.txt"})
        EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / name)) << name;
}

TEST(Estimate, ExactIsReproducible) {
    const auto c = small_config(scratch("estimate_exact"));
    const auto a = pipeline::cmd_estimate(c, quiet);
    const auto first = file(a, "estimate.txt");
    const auto b = pipeline::cmd_estimate(c, quiet);
    EXPECT_EQ(file(b, "estimate.txt"), first);
    EXPECT_EQ(file(b, "estimate_report.txt"), file(a, "estimate_report.txt"));
    EXPECT_EQ(count_rows(first), 10);
}

TEST(Estimate, MonteCarloReportsStandardErrors) {
    auto c = small_config(scratch("estimate_mc"));
    c.estimator = "mc";
    c.mc_M = 2;
    const auto o = pipeline::cmd_estimate(c, quiet);
    EXPECT_NE(file(o, "estimate.txt").find(" se "), std::string::npos);
}

TEST(Estimate, ErgodicRequiresNoAttenuation) {
    auto c = small_config(scratch("estimate_ergodic"));
    c.estimator = "ergodic";
    EXPECT_THROW(pipeline::cmd_estimate(c, quiet), ValidationError);
    c.sigma = 0.0;
    const auto o = pipeline::cmd_estimate(c, quiet);
    EXPECT_EQ(count_rows(file(o, "ergodic.txt")), 5);
}

TEST(Reconstruct, SyntheticExactDataIsAccurate) {
    auto c = small_config(scratch("reconstruct"));
    c.source_width = 0.2 * std::sqrt(2.0);  // mu = a^2 has width 0.2
    c.sigma = 1.0;
    const auto o = pipeline::cmd_reconstruct(c, quiet);
    std::istringstream is(file(o, "reconstruct_report.txt"));
    const auto report = parse_key_values(is);
    EXPECT_LT(std::stod(report.at("rel_l2_error")), 0.15);
    EXPECT_EQ(report.at("unknowns"), "32");
}

TEST(Reconstruct, ZeroDataGivesZeroStrength) {
    auto c = small_config(scratch("reconstruct_zero"));
    std::string table = "# x y value\n";
    for (const auto& p : ring_points(2, {0, 0, 0}, 0.4, 64)) table += fmt(p[0]) + " " + fmt(p[1]) + " 0\n";
    c.inverse_data = (fs::path(c.out_dir) / "zero.txt").string();
    write_text(c.inverse_data, table);
    const auto o = pipeline::cmd_reconstruct(c, quiet);
    for (double v : read_grid((fs::path(o.dir) / "mu_hat.hsgf").string()).values) EXPECT_EQ(v, 0.0);
}

TEST(Reconstruct, MissingDataFileIsIoError) {
    auto c = small_config(scratch("reconstruct_missing"));
    c.inverse_data = "/nonexistent/limit.txt";
    EXPECT_THROW(pipeline::cmd_reconstruct(c, quiet), IoError);
}

TEST(Reconstruct, DeconvolutionRoute) {
    auto c = parse_config("inverse.method = deconvolution\ninverse.n = 64\ninverse.L = 16\n"
                          "source.width = 0.85\nsource.radius = 2\nrun.out = " + scratch("deconv") + "\n");
    const auto o = pipeline::cmd_reconstruct(c, quiet);
    std::istringstream is(file(o, "reconstruct_report.txt"));
    EXPECT_LT(std::stod(parse_key_values(is).at("bulk_max_rel_error")), 0.10);
}

TEST(Verify, TamperedToleranceFails) {
    auto c = small_config(scratch("verify"));
    c.verify["checks"] = "hankel_oracle 3";
    auto v = pipeline::cmd_verify(c, quiet);
    EXPECT_TRUE(v.all_passed);
    EXPECT_EQ(v.results.size(), 2u);
    c.verify["c1.tol"] = "1e-30";
    v = pipeline::cmd_verify(c, quiet);
    EXPECT_FALSE(v.all_passed);
    EXPECT_NE(v.report.find("check.1.status = FAIL"), std::string::npos);
    c.verify["c1.tolerance"] = "1";
    EXPECT_THROW(pipeline::cmd_verify(c, quiet), ValidationError);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    EXPECT_EQ(run_cli("verify --list"), 0);
    write_text(dir + "/bad.conf", "source.s = 9\n");
    EXPECT_EQ(run_cli("sample --config " + dir + "/bad.conf --out " + dir), 2);
    EXPECT_EQ(run_cli("sample --config " + dir + "/missing.conf"), 4);
    write_text(dir + "/ok.conf", "grid.n = 32\nverify.checks = 1\nverify.c1.tol = 1e-30\n");
    EXPECT_EQ(run_cli("verify --config " + dir + "/ok.conf --out " + dir), 3);
    EXPECT_EQ(run_cli("sample --config " + dir + "/ok.conf --out " + dir + " --seed 4"), 0);
    EXPECT_TRUE(fs::exists(dir + "/f.hsgf"));
    EXPECT_EQ(run_cli("bogus"), 2);
}
