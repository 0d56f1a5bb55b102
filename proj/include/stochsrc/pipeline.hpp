#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "config.hpp"
#include "forward.hpp"
#include "inverse.hpp"
#include "io.hpp"
#include "randfield.hpp"
#include "statest.hpp"
#include "verify.hpp"

namespace stochsrc::pipeline {

/// Files written by a command, relative to the output directory, in write order.
struct Outputs {
    std::string dir;
    std::vector<std::string> files;
};

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void put_text(Outputs& o, const std::string& name, const std::string& text) {
    write_text(join(o.dir, name), text);
    o.files.push_back(name);
}

inline void put_grid(Outputs& o, const std::string& name, const FieldSample& f) {
    write_grid(join(o.dir, name), f);
    o.files.push_back(name);
}

inline Outputs begin(const ExperimentConfig& c, const std::string& command) {
    validate_config(c);
    Outputs o{c.out_dir, {}};
    ensure_dir(o.dir);
    const std::string manifest = "manifest_" + command + ".txt";
    put_text(o, manifest,
             "# stochsrc " + command + "\n# rerun: stochsrc " + command + " --config " + manifest + "\n" +
                 serialize_config(c));
    return o;
}

inline std::string index_name(const std::string& stem, std::size_t i, const std::string& ext) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return stem + "_" + buf + ext;
}

} // namespace detail

inline GridSpec source_grid(const ExperimentConfig& c) { return GridSpec::centered(c.dimension, c.grid_n, c.grid_L); }

inline FieldSample gaussian_amplitude(const ExperimentConfig& c, const GridSpec& g) {
    return gaussian_bump(g, c.source_center, c.source_width, c.source_height, c.source_radius);
}

inline SourceModel source_model(const ExperimentConfig& c) {
    SourceModel m;
    m.grid = source_grid(c);
    m.s = c.source_s;
    m.seed = c.seed;
    if (c.source_amplitude == "file") {
        m.amplitude = read_grid(c.source_file);
        if (!(m.amplitude.grid == m.grid))
            throw ValidationError("source.file grid does not match grid.n / grid.L / experiment.dimension");
    } else {
        m.amplitude = gaussian_amplitude(c, m.grid);
    }
    validate_source_model(m);
    return m;
}

inline MeasurementSet measurement_set(const ExperimentConfig& c) {
    MeasurementSet m;
    m.d = c.dimension;
    m.r0 = c.measurement_r0;
    m.points = ring_points(c.dimension, c.measurement_center, c.measurement_radius, c.measurement_count);
    return m;
}

inline ForwardOptions forward_options(const ExperimentConfig& c, std::vector<std::string>* warnings) {
    ForwardOptions opt;
    opt.max_kh = c.max_kh;
    opt.resolution_is_error = c.resolution_is_error;
    opt.threads = c.threads;
    opt.warnings = warnings;
    return opt;
}

/// Writes the fractional Gaussian field, the source f = a h^s and its amplitude.
inline Outputs cmd_sample(const ExperimentConfig& c, std::ostream& log) {
    auto o = detail::begin(c, "sample");
    const auto model = source_model(c);
    const auto r = build_source(model);
    detail::put_grid(o, "amplitude.hsgf", model.amplitude);
    detail::put_grid(o, "hs.hsgf", r.hs);
    detail::put_grid(o, "f.hsgf", r.f);
    log << "sample: s = " << fmt(c.source_s) << " seed = " << c.seed << " grid " << c.grid_n << "^" << c.dimension
        << " -> " << o.dir << "\n";
    return o;
}

/// Solves the forward problem for each k of the schedule, one measurement table per k.
inline Outputs cmd_forward(const ExperimentConfig& c, std::ostream& log) {
    if (c.k_list.empty()) throw ValidationError("forward.k: empty k schedule");
    const std::string src = c.forward_source.empty() ? detail::join(c.out_dir, "f.hsgf") : c.forward_source;
    const FieldSample f = read_grid(src);
    if (f.grid.d != c.dimension) throw ValidationError("forward.source dimension does not match experiment.dimension");
    auto o = detail::begin(c, "forward");
    std::vector<std::string> warnings;
    const auto opt = forward_options(c, &warnings);
    const auto ms = measurement_set(c);
    for (std::size_t i = 0; i < c.k_list.size(); ++i) {
        const auto w = wavenumber_split(c.k_list[i], c.sigma);
        const auto u = solve_forward(f, w, ms, opt);
        detail::put_text(o, detail::index_name("measurements", i, ".txt"),
                         format_measurement_table(u, w, c.source_s, c.seed));
    }
    std::string wtext;
    for (const auto& w : warnings) {
        wtext += w + "\n";
        log << "warning: " << w << "\n";
    }
    if (!warnings.empty()) detail::put_text(o, "warnings.txt", wtext);
    log << "forward: " << c.k_list.size() << " wavenumbers, " << ms.points.size() << " points -> " << o.dir << "\n";
    return o;
}

/// Second-moment estimates scaled by k^p, the limit functional, and a convergence report.
inline Outputs cmd_estimate(const ExperimentConfig& c, std::ostream& log) {
    auto o = detail::begin(c, "estimate");
    const auto model = source_model(c);
    const auto ms = measurement_set(c);
    std::vector<std::string> warnings;
    const auto opt = forward_options(c, &warnings);
    const int d = c.dimension;
    const double p = scaling_exponent(d, c.source_s);
    const char* axes[3] = {" x", " y", " z"};
    KeyValues report;
    report["estimate.method"] = c.estimator;
    report["scaling_exponent"] = fmt(p);

    if (c.estimator == "ergodic") {
        const auto avg = ergodic_average(model, ms, c.ergodic_K, c.ergodic_n_k, c.sigma, opt);
        auto T = limit_functional(strength_of(model), 0.0, ms, d);
        T.s = c.source_s;
        detail::put_text(o, "limit.txt", format_limit_table(T, d));
        detail::put_text(o, "ergodic.txt", format_limit_table(avg, d));
        for (std::size_t i = 0; i < ms.points.size(); ++i)
            report["point." + std::to_string(i) + ".rel_deviation"] = fmt(avg.values[i] / T.values[i] - 1.0);
        report["estimate.K"] = fmt(c.ergodic_K);
        report["estimate.n_k"] = std::to_string(c.ergodic_n_k);
        report["run.seed"] = std::to_string(c.seed);
    } else {
        if (c.k_list.empty()) throw ValidationError("forward.k: empty k schedule");
        const bool mc = c.estimator == "mc";
        auto T = limit_functional(strength_of(model), c.sigma, ms, d);
        T.s = c.source_s;
        detail::put_text(o, "limit.txt", format_limit_table(T, d));
        std::string table = "# method = " + c.estimator + " s = " + fmt(c.source_s) + " sigma = " + fmt(c.sigma) +
                            " p = " + fmt(p) + (mc ? " M = " + std::to_string(c.mc_M) + " seed = " + std::to_string(c.seed) : "") +
                            "\n# point";
        for (int a = 0; a < d; ++a) table += axes[a];
        table += mc ? " k second_moment se scaled scaled_se limit deviation\n" : " k second_moment scaled limit deviation\n";
        std::vector<std::vector<double>> dev(ms.points.size());
        for (double k : c.k_list) {
            const auto w = wavenumber_split(k, c.sigma);
            std::vector<double> est, se;
            if (mc) {
                const auto e = mc_second_moment(model, w, ms, c.mc_M, c.seed, opt);
                est = e.estimates;
                se = e.standard_errors;
            } else {
                est = exact_second_moment(model, w, ms, opt);
            }
            const double scale = std::pow(k, p);
            for (std::size_t i = 0; i < ms.points.size(); ++i) {
                const double sc = est[i] * scale;
                const double dv = T.values[i] > 0.0 ? sc / T.values[i] - 1.0 : 0.0;
                dev[i].push_back(dv);
                table += std::to_string(i) + " ";
                for (int a = 0; a < d; ++a) table += fmt(ms.points[i][a]) + " ";
                table += fmt(k) + " " + fmt(est[i]) + " ";
                if (mc) table += fmt(se[i]) + " ";
                table += fmt(sc) + " ";
                if (mc) table += fmt(se[i] * scale) + " ";
                table += fmt(T.values[i]) + " " + fmt(dv) + "\n";
            }
        }
        detail::put_text(o, "estimate.txt", table);
        for (std::size_t i = 0; i < ms.points.size(); ++i) {
            const std::string key = "point." + std::to_string(i);
            report[key + ".final_deviation"] = fmt(dev[i].back());
            if (c.k_list.size() >= 2) {
                std::vector<double> ad;
                bool positive = true;
                for (double v : dev[i]) {
                    ad.push_back(std::abs(v));
                    positive = positive && std::abs(v) > 0.0;
                }
                if (positive) report[key + ".deviation_slope"] = fmt(loglog_slope(c.k_list, ad));
            }
        }
    }
    for (std::size_t i = 0; i < warnings.size(); ++i) report["warning." + std::to_string(i)] = warnings[i];
    detail::put_text(o, "estimate_report.txt", serialize_key_values(report));
    log << "estimate: " << c.estimator << ", " << ms.points.size() << " points -> " << o.dir << "\n";
    return o;
}

/// Points and values from a limit table ("x y [z] value [se]" rows, '#' comments).
inline LimitData read_limit_table(const std::string& path, int d) {
    std::istringstream is(read_text(path));
    LimitData L;
    L.kind = d == 2 ? LimitKind::T_2d : LimitKind::T_3d;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        std::vector<double> cols;
        double v = 0.0;
        while (ls >> v) cols.push_back(v);
        if (!ls.eof() || cols.size() < std::size_t(d + 1))
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(d) +
                                  " coordinates and a value");
        Point p{0, 0, 0};
        for (int a = 0; a < d; ++a) p[a] = cols[a];
        L.points.push_back(p);
        L.values.push_back(cols[d]);
    }
    if (L.points.empty()) throw ValidationError(path + ": no data rows");
    return L;
}

/// Ground-truth strength a^2 of the configured Gaussian amplitude on the inversion grid.
inline FieldSample synthetic_strength(const ExperimentConfig& c, const GridSpec& g) {
    if (c.source_amplitude != "gaussian")
        throw ValidationError("synthetic inversion data needs source.amplitude = gaussian; set inverse.data instead");
    FieldSample mu = gaussian_amplitude(c, g);
    for (auto& v : mu.values) v *= v;
    return mu;
}

/// Tikhonov inversion of limit data, or the constructive Gaussian deconvolution route.
inline Outputs cmd_reconstruct(const ExperimentConfig& c, std::ostream& log) {
    const int d = c.dimension;
    const GridSpec g = GridSpec::centered(d, c.inverse_n, c.inverse_L);
    validate_grid(g);
    KeyValues report;
    report["inverse.method"] = c.inverse_method;

    if (c.inverse_method == "deconvolution") {
        const FieldSample mu = synthetic_strength(c, g);
        auto o = detail::begin(c, "reconstruct");
        const FieldSample conv = gaussian_convolve_grid(mu, c.threads);
        const auto rec = gaussian_deconvolve(conv, c.inverse_cutoff);
        double peak = 0.0, worst = 0.0;
        for (double v : mu.values) peak = std::max(peak, v);
        for (std::size_t j = 0; j < mu.values.size(); ++j)
            if (mu.values[j] > 0.1 * peak) worst = std::max(worst, std::abs(rec.mu.values[j] / mu.values[j] - 1.0));
        detail::put_grid(o, "mu_true.hsgf", mu);
        detail::put_grid(o, "convolved.hsgf", conv);
        detail::put_grid(o, "mu_hat.hsgf", rec.mu);
        report["cutoff"] = fmt(c.inverse_cutoff);
        report["rel_l2_error"] = fmt(relative_l2_error(rec.mu, mu));
        report["bulk_max_rel_error"] = fmt(worst);
        detail::put_text(o, "reconstruct_report.txt", serialize_key_values(report));
        log << "reconstruct: deconvolution, bulk max relative error " << fmt(worst) << "\n";
        return o;
    }

    MeasurementSet ms;
    ms.d = d;
    ms.r0 = c.inverse_r0;
    Eigen::VectorXd data;
    FieldSample truth;
    const bool synthetic = c.inverse_data.empty();
    const auto mask = ball_mask(g, c.source_center, c.inverse_support_radius);
    if (synthetic) {
        ms.points = ring_points(d, c.source_center, c.inverse_ring, c.inverse_points);
        truth = synthetic_strength(c, g);
        for (std::size_t j = 0; j < truth.values.size(); ++j)
            if (!mask[j]) truth.values[j] = 0.0;
        const auto T = limit_functional(truth, c.sigma, ms, d);
        data = Eigen::Map<const Eigen::VectorXd>(T.values.data(), Eigen::Index(T.values.size()));
    } else {
        const auto L = read_limit_table(c.inverse_data, d);
        ms.points = L.points;
        data = Eigen::Map<const Eigen::VectorXd>(L.values.data(), Eigen::Index(L.values.size()));
    }
    auto o = detail::begin(c, "reconstruct");
    const double clean_norm = data.norm();
    if (synthetic && c.noise > 0.0 && clean_norm > 0.0) {
        auto rng = make_rng(c.seed);
        std::normal_distribution<double> nd;
        Eigen::VectorXd e(data.size());
        for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = nd(rng);
        data += e * (c.noise * clean_norm / e.norm());
    }
    const auto fm = assemble_forward_map(g, mask, ms, c.sigma, d, c.threads);
    if (fm.columns.empty()) throw ValidationError("inverse.support_radius selects no grid cells");
    const TikhonovSolver solver(fm.A);
    const double scale = solver.norm_squared();
    const double lambda = c.lambda_rule == "discrepancy" ? discrepancy_lambda(solver, data, c.noise * clean_norm)
                                                          : c.lambda * scale;
    const auto r = reconstruct_tikhonov(fm, solver, data, lambda, c.nonneg, c.condition_threshold);
    detail::put_grid(o, "mu_hat.hsgf", r.mu.mu);
    if (synthetic) detail::put_grid(o, "mu_true.hsgf", truth);
    report["unknowns"] = std::to_string(fm.columns.size());
    report["measurements"] = std::to_string(ms.points.size());
    report["lambda"] = fmt(r.lambda);
    report["lambda_relative"] = fmt(r.lambda / scale);
    report["lambda_rule"] = c.lambda_rule;
    report["residual_raw"] = fmt(r.residual_raw);
    report["residual_projected"] = fmt(r.residual_projected);
    report["penalty"] = fmt(r.penalty);
    report["condition_estimate"] = fmt(r.condition_estimate);
    report["ill_conditioned"] = r.ill_conditioned ? "true" : "false";
    report["noise"] = fmt(synthetic ? c.noise : 0.0);
    if (synthetic) report["rel_l2_error"] = fmt(relative_l2_error(r.mu.mu, truth));
    detail::put_text(o, "reconstruct_report.txt", serialize_key_values(report));
    if (r.ill_conditioned)
        log << "warning: condition estimate " << fmt(r.condition_estimate) << " exceeds "
            << fmt(c.condition_threshold) << "\n";
    log << "reconstruct: " << fm.columns.size() << " unknowns, " << ms.points.size() << " measurements -> " << o.dir
        << "\n";
    return o;
}

struct VerifyOutcome {
    Outputs outputs;
    std::vector<verify::CheckResult> results;
    std::string report;
    bool all_passed = false;
};

inline std::string format_table(const std::vector<verify::CheckResult>& results) {
    std::string t;
    for (const auto& r : results) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%-4s %2d  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str());
        t += buf;
    }
    return t;
}

/// Runs the acceptance checks; the report depends only on the configuration.
inline VerifyOutcome cmd_verify(const ExperimentConfig& c, std::ostream& log) {
    const verify::Settings st(c.verify);
    verify::check_settings(st);
    const auto ids = verify::selected_checks(st);
    VerifyOutcome v;
    v.outputs = detail::begin(c, "verify");
    for (int id : ids) {
        v.results.push_back(verify::run_check(id, st, c.seed, c.threads));
        const auto& r = v.results.back();
        log << (r.pass ? "PASS " : "FAIL ") << r.id << " " << r.name << "\n" << std::flush;
    }
    v.report = verify::format_report(v.results);
    detail::put_text(v.outputs, "verify_report.txt", v.report);
    v.all_passed = true;
    for (const auto& r : v.results) v.all_passed = v.all_passed && r.pass;
    return v;
}

} // namespace stochsrc::pipeline
