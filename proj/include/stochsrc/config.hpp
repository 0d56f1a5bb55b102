#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "io.hpp"

namespace stochsrc {

/// Experiment description, read from flat "section.key = value" text.
struct ExperimentConfig {
    int dimension = 2;

    std::size_t grid_n = 256;
    double grid_L = 2.0;

    double source_s = 1.0;
    std::string source_amplitude = "gaussian";  // gaussian | file
    Point source_center{0, 0, 0};
    double source_width = 0.15;
    double source_height = 1.0;
    double source_radius = 0.5;
    std::string source_file;

    double sigma = 0.5;

    std::string forward_source;  // f grid for `forward`; <out>/f.hsgf when empty
    std::vector<double> k_list{10, 20, 40, 80};
    double max_kh = std::numbers::pi / 5.0;
    bool resolution_is_error = true;

    Point measurement_center{0, 0, 0};
    double measurement_radius = 0.9;
    std::size_t measurement_count = 8;
    double measurement_r0 = 0.1;

    std::string estimator = "exact";  // exact | mc | ergodic
    std::size_t mc_M = 2000;
    double ergodic_K = 64.0;
    std::size_t ergodic_n_k = 64;

    std::string inverse_method = "tikhonov";  // tikhonov | deconvolution
    std::size_t inverse_n = 32;
    double inverse_L = 2.0;
    double inverse_support_radius = 0.2;
    double inverse_ring = 0.4;
    std::size_t inverse_points = 64;
    double inverse_r0 = 0.04;
    double inverse_cutoff = 5.256521769756932;  // |xi| where e^{|xi|^2/2} = 1e6
    std::string lambda_rule = "fixed";  // fixed | discrepancy
    double lambda = 1e-16;              // relative to |A|^2
    double noise = 0.0;                 // relative l2 noise on synthetic data
    bool nonneg = true;
    std::string inverse_data;           // optional limit table; synthetic when empty
    double condition_threshold = 1e12;

    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = "out";

    /// Keys under "verify." are passed to the verification suite untouched.
    KeyValues verify;
};

namespace detail {

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

inline std::string fmt_point(const Point& p, int d) {
    std::vector<double> v(p.begin(), p.begin() + d);
    return fmt_list(v);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (...) {
        throw ValidationError(key + ": expected a number, got '" + v + "'");
    }
    if (pos != v.size()) throw ValidationError(key + ": expected a number, got '" + v + "'");
    return x;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ValidationError(key + ": expected a nonnegative integer, got '" + v + "'");
    try {
        return std::stoull(v);
    } catch (...) {
        throw ValidationError(key + ": integer out of range");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::istringstream is(v);
    std::string tok;
    while (is >> tok) out.push_back(parse_double(key, tok));
    return out;
}

inline Point parse_point(const std::string& key, const std::string& v, int d) {
    const auto xs = parse_list(key, v);
    if (int(xs.size()) != d) throw ValidationError(key + ": expected " + std::to_string(d) + " coordinates");
    Point p{0, 0, 0};
    for (int a = 0; a < d; ++a) p[a] = xs[a];
    return p;
}

} // namespace detail

inline KeyValues to_key_values(const ExperimentConfig& c) {
    using detail::fmt_list;
    using detail::fmt_point;
    KeyValues kv;
    kv["experiment.dimension"] = std::to_string(c.dimension);
    kv["grid.n"] = std::to_string(c.grid_n);
    kv["grid.L"] = fmt(c.grid_L);
    kv["source.s"] = fmt(c.source_s);
    kv["source.amplitude"] = c.source_amplitude;
    kv["source.center"] = fmt_point(c.source_center, c.dimension);
    kv["source.width"] = fmt(c.source_width);
    kv["source.height"] = fmt(c.source_height);
    kv["source.radius"] = fmt(c.source_radius);
    if (!c.source_file.empty()) kv["source.file"] = c.source_file;
    kv["medium.sigma"] = fmt(c.sigma);
    if (!c.forward_source.empty()) kv["forward.source"] = c.forward_source;
    kv["forward.k"] = fmt_list(c.k_list);
    kv["forward.max_kh"] = fmt(c.max_kh);
    kv["forward.resolution"] = c.resolution_is_error ? "error" : "warn";
    kv["measurement.center"] = fmt_point(c.measurement_center, c.dimension);
    kv["measurement.radius"] = fmt(c.measurement_radius);
    kv["measurement.count"] = std::to_string(c.measurement_count);
    kv["measurement.r0"] = fmt(c.measurement_r0);
    kv["estimate.method"] = c.estimator;
    kv["estimate.M"] = std::to_string(c.mc_M);
    kv["estimate.K"] = fmt(c.ergodic_K);
    kv["estimate.n_k"] = std::to_string(c.ergodic_n_k);
    kv["inverse.method"] = c.inverse_method;
    kv["inverse.n"] = std::to_string(c.inverse_n);
    kv["inverse.L"] = fmt(c.inverse_L);
    kv["inverse.support_radius"] = fmt(c.inverse_support_radius);
    kv["inverse.ring"] = fmt(c.inverse_ring);
    kv["inverse.points"] = std::to_string(c.inverse_points);
    kv["inverse.r0"] = fmt(c.inverse_r0);
    kv["inverse.cutoff"] = fmt(c.inverse_cutoff);
    kv["inverse.lambda_rule"] = c.lambda_rule;
    kv["inverse.lambda"] = fmt(c.lambda);
    kv["inverse.noise"] = fmt(c.noise);
    kv["inverse.nonneg"] = c.nonneg ? "true" : "false";
    if (!c.inverse_data.empty()) kv["inverse.data"] = c.inverse_data;
    kv["inverse.condition_threshold"] = fmt(c.condition_threshold);
    kv["run.seed"] = std::to_string(c.seed);
    kv["run.threads"] = std::to_string(c.threads);
    kv["run.out"] = c.out_dir;
    for (const auto& [k, v] : c.verify) kv["verify." + k] = v;
    return kv;
}

inline void validate_config(const ExperimentConfig& c) {
    if (c.dimension != 2 && c.dimension != 3) throw ValidationError("experiment.dimension must be 2 or 3");
    if (c.grid_n < 8) throw ValidationError("grid.n must be at least 8");
    if (!(c.grid_L > 0.0)) throw ValidationError("grid.L must be positive");
    if (!std::isfinite(c.source_s) || c.source_s < 0.0 || c.source_s >= c.dimension / 2.0 + 1.0)
        throw ValidationError("source.s = " + fmt(c.source_s) + " outside [0, d/2+1)");
    if (c.source_amplitude != "gaussian" && c.source_amplitude != "file")
        throw ValidationError("source.amplitude must be 'gaussian' or 'file'");
    if (c.source_amplitude == "file" && c.source_file.empty())
        throw ValidationError("source.file is required when source.amplitude = file");
    if (c.source_amplitude == "gaussian") {
        if (!(c.source_width > 0.0)) throw ValidationError("source.width must be positive");
        if (!(c.source_radius > 0.0)) throw ValidationError("source.radius must be positive");
        if (!(c.source_height >= 0.0)) throw ValidationError("source.height must be nonnegative");
    }
    if (!(c.sigma >= 0.0)) throw ValidationError("medium.sigma must be nonnegative");
    for (double k : c.k_list)
        if (!(k > 0.0)) throw ValidationError("forward.k entries must be positive");
    if (!(c.max_kh > 0.0)) throw ValidationError("forward.max_kh must be positive");
    if (!(c.measurement_radius > 0.0)) throw ValidationError("measurement.radius must be positive");
    if (c.measurement_count < 1) throw ValidationError("measurement.count must be at least 1");
    if (!(c.measurement_r0 > 0.0)) throw ValidationError("measurement.r0 must be positive");
    if (c.estimator != "exact" && c.estimator != "mc" && c.estimator != "ergodic")
        throw ValidationError("estimate.method must be exact, mc or ergodic");
    if (c.mc_M < 2) throw ValidationError("estimate.M must be at least 2");
    if (!(c.ergodic_K > 1.0)) throw ValidationError("estimate.K must exceed 1");
    if (c.ergodic_n_k < 16) throw ValidationError("estimate.n_k must be at least 16");
    if (c.inverse_n < 8) throw ValidationError("inverse.n must be at least 8");
    if (!(c.inverse_L > 0.0)) throw ValidationError("inverse.L must be positive");
    if (!(c.inverse_support_radius > 0.0)) throw ValidationError("inverse.support_radius must be positive");
    if (c.inverse_method != "tikhonov" && c.inverse_method != "deconvolution")
        throw ValidationError("inverse.method must be tikhonov or deconvolution");
    if (!(c.inverse_ring > 0.0)) throw ValidationError("inverse.ring must be positive");
    if (c.inverse_points < 1) throw ValidationError("inverse.points must be at least 1");
    if (!(c.inverse_r0 > 0.0)) throw ValidationError("inverse.r0 must be positive");
    if (!(c.inverse_cutoff > 0.0)) throw ValidationError("inverse.cutoff must be positive");
    if (c.lambda_rule != "fixed" && c.lambda_rule != "discrepancy")
        throw ValidationError("inverse.lambda_rule must be fixed or discrepancy");
    if (!(c.lambda > 0.0)) throw ValidationError("inverse.lambda must be positive");
    if (!(c.noise >= 0.0)) throw ValidationError("inverse.noise must be nonnegative");
    if (c.lambda_rule == "discrepancy" && !(c.noise > 0.0))
        throw ValidationError("inverse.lambda_rule = discrepancy needs inverse.noise > 0");
    if (!(c.condition_threshold > 1.0)) throw ValidationError("inverse.condition_threshold must exceed 1");
    if (c.threads < 1) throw ValidationError("run.threads must be at least 1");
    if (c.out_dir.empty()) throw ValidationError("run.out must not be empty");
}

inline ExperimentConfig from_key_values(const KeyValues& kv) {
    using namespace detail;
    ExperimentConfig c;
    // dimension first: point-valued keys depend on it
    if (auto it = kv.find("experiment.dimension"); it != kv.end())
        c.dimension = int(parse_uint(it->first, it->second));
    if (c.dimension != 2 && c.dimension != 3) throw ValidationError("experiment.dimension must be 2 or 3");
    for (const auto& [key, v] : kv) {
        if (key == "experiment.dimension") continue;
        if (key.rfind("verify.", 0) == 0) {
            c.verify[key.substr(7)] = v;
        } else if (key == "grid.n") {
            c.grid_n = parse_uint(key, v);
        } else if (key == "grid.L") {
            c.grid_L = parse_double(key, v);
        } else if (key == "source.s") {
            c.source_s = parse_double(key, v);
        } else if (key == "source.amplitude") {
            c.source_amplitude = v;
        } else if (key == "source.center") {
            c.source_center = parse_point(key, v, c.dimension);
        } else if (key == "source.width") {
            c.source_width = parse_double(key, v);
        } else if (key == "source.height") {
            c.source_height = parse_double(key, v);
        } else if (key == "source.radius") {
            c.source_radius = parse_double(key, v);
        } else if (key == "source.file") {
            c.source_file = v;
        } else if (key == "medium.sigma") {
            c.sigma = parse_double(key, v);
        } else if (key == "forward.source") {
            c.forward_source = v;
        } else if (key == "forward.k") {
            c.k_list = parse_list(key, v);
        } else if (key == "forward.max_kh") {
            c.max_kh = parse_double(key, v);
        } else if (key == "forward.resolution") {
            if (v != "error" && v != "warn") throw ValidationError(key + ": expected error or warn");
            c.resolution_is_error = v == "error";
        } else if (key == "measurement.center") {
            c.measurement_center = parse_point(key, v, c.dimension);
        } else if (key == "measurement.radius") {
            c.measurement_radius = parse_double(key, v);
        } else if (key == "measurement.count") {
            c.measurement_count = parse_uint(key, v);
        } else if (key == "measurement.r0") {
            c.measurement_r0 = parse_double(key, v);
        } else if (key == "estimate.method") {
            c.estimator = v;
        } else if (key == "estimate.M") {
            c.mc_M = parse_uint(key, v);
        } else if (key == "estimate.K") {
            c.ergodic_K = parse_double(key, v);
        } else if (key == "estimate.n_k") {
            c.ergodic_n_k = parse_uint(key, v);
        } else if (key == "inverse.method") {
            c.inverse_method = v;
        } else if (key == "inverse.n") {
            c.inverse_n = parse_uint(key, v);
        } else if (key == "inverse.L") {
            c.inverse_L = parse_double(key, v);
        } else if (key == "inverse.support_radius") {
            c.inverse_support_radius = parse_double(key, v);
        } else if (key == "inverse.ring") {
            c.inverse_ring = parse_double(key, v);
        } else if (key == "inverse.points") {
            c.inverse_points = parse_uint(key, v);
        } else if (key == "inverse.r0") {
            c.inverse_r0 = parse_double(key, v);
        } else if (key == "inverse.cutoff") {
            c.inverse_cutoff = parse_double(key, v);
        } else if (key == "inverse.lambda_rule") {
            c.lambda_rule = v;
        } else if (key == "inverse.lambda") {
            c.lambda = parse_double(key, v);
        } else if (key == "inverse.noise") {
            c.noise = parse_double(key, v);
        } else if (key == "inverse.nonneg") {
            c.nonneg = parse_bool(key, v);
        } else if (key == "inverse.data") {
            c.inverse_data = v;
        } else if (key == "inverse.condition_threshold") {
            c.condition_threshold = parse_double(key, v);
        } else if (key == "run.seed") {
            c.seed = parse_uint(key, v);
        } else if (key == "run.threads") {
            c.threads = int(parse_uint(key, v));
        } else if (key == "run.out") {
            c.out_dir = v;
        } else {
            throw ValidationError("unknown configuration key '" + key + "'");
        }
    }
    validate_config(c);
    return c;
}

inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>") {
    std::istringstream is(text);
    return from_key_values(parse_key_values(is, source));
}

inline ExperimentConfig load_config(const std::string& path) { return from_key_values(read_key_values(path)); }

inline std::string serialize_config(const ExperimentConfig& c) { return serialize_key_values(to_key_values(c)); }

} // namespace stochsrc
