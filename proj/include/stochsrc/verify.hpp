#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "forward.hpp"
#include "inverse.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "randfield.hpp"
#include "specfun.hpp"
#include "statest.hpp"

namespace stochsrc::verify {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::vector<std::pair<std::string, std::string>> metrics;
};

/// Tolerances and sizes for the acceptance checks; every value can be overridden by "verify.<key>".
class Settings {
public:
    explicit Settings(KeyValues overrides = {}) : kv_(std::move(overrides)) {}

    double num(const std::string& key, double fallback) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos == it->second.size()) return v;
        } catch (...) {
        }
        throw ValidationError("verify." + key + ": expected a number");
    }
    std::size_t count(const std::string& key, std::size_t fallback) const {
        const double v = num(key, double(fallback));
        if (v < 0 || v != std::floor(v)) throw ValidationError("verify." + key + ": expected a nonnegative integer");
        return std::size_t(v);
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }
    const KeyValues& overrides() const { return kv_; }

private:
    KeyValues kv_;
};

inline const std::set<std::string>& known_settings() {
    static const std::set<std::string> keys{
        "c1.tol",
        "c1.wronskian_tol",
        "c2.slope_tol",
        "c3.tol",
        "c4.M",
        "c4.max_offset",
        "c4.n",
        "c4.pairs",
        "c4.se",
        "c4.width_cells",
        "c5.M",
        "c5.k",
        "c5.n",
        "c5.se",
        "c5.sigma",
        "c6.final_tol",
        "c6.n",
        "c6.n3",
        "c6.slope",
        "c6.slope_tol",
        "c7.k",
        "c7.n",
        "c7.tol",
        "c8.K",
        "c8.moments",
        "c8.multi_tol",
        "c8.n",
        "c8.n_k",
        "c8.seeds",
        "c8.single_tol",
        "c9.exact_tol",
        "c9.lambda",
        "c9.noise",
        "c9.noisy_tol",
        "c10.coarea_tol",
        "c10.n",
        "c10.roundtrip_tol",
        "checks"};
    return keys;
}

inline void check_settings(const Settings& st) {
    for (const auto& [k, v] : st.overrides())
        if (!known_settings().count(k)) throw ValidationError("unknown verification setting 'verify." + k + "'");
}

namespace detail {

inline std::string g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string status(bool b) { return b ? "PASS" : "FAIL"; }

/// E|v + Z| for Z ~ N(0, sg^2 I_2).
inline double rice_mean(double v, double sg) {
    const double y = v * v / (4.0 * sg * sg);
    if (y > 600.0) return v + sg * sg / (2.0 * v);
    const double i0e = std::exp(-y) * std::cyl_bessel_i(0.0, y);
    const double i1e = std::exp(-y) * std::cyl_bessel_i(1.0, y);
    return sg * std::sqrt(std::numbers::pi / 2.0) * ((1.0 + 2.0 * y) * i0e + 2.0 * y * i1e);
}

struct SparseTest {
    std::vector<std::size_t> idx;
    std::vector<double> w;
    double apply(const std::vector<double>& f, double hd) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i) acc += f[idx[i]] * w[i];
        return acc * hd;
    }
};

/// Unit-mass discrete Gaussian of width wc cells centred on a cell.
inline SparseTest cell_gaussian(const GridSpec& g, long ci, long cj, double wc) {
    SparseTest t;
    const long R = long(std::ceil(6.0 * wc));
    double mass = 0.0;
    for (long di = -R; di <= R; ++di)
        for (long dj = -R; dj <= R; ++dj) {
            const double v = std::exp(-double(di * di + dj * dj) / (2.0 * wc * wc));
            t.idx.push_back(g.flatten({std::size_t(ci + di), std::size_t(cj + dj), 0}));
            t.w.push_back(v);
            mass += v;
        }
    for (auto& v : t.w) v /= mass * g.cell_volume();
    return t;
}

inline FieldSample to_field(const GridSpec& g, const SparseTest& a, const SparseTest* b = nullptr) {
    FieldSample f(g);
    for (std::size_t i = 0; i < a.idx.size(); ++i) f.values[a.idx[i]] += a.w[i];
    if (b)
        for (std::size_t i = 0; i < b->idx.size(); ++i) f.values[b->idx[i]] -= b->w[i];
    return f;
}

struct Config2D {
    SourceModel model;
    MeasurementSet ms;
};

/// Desk-scale 2D source: Gaussian amplitude of width 0.15 truncated at 0.5, ring of points at radius 0.9.
inline Config2D desk_2d(std::size_t n, std::size_t points) {
    Config2D c;
    c.model.grid = GridSpec::centered(2, n, 2.0);
    c.model.s = 1.0;
    c.model.amplitude = gaussian_bump(c.model.grid, {0, 0, 0}, 0.15, 1.0, 0.5);
    c.ms.d = 2;
    c.ms.r0 = 0.1;
    c.ms.points = ring_points(2, {0, 0, 0}, 0.9, points, 0.1);
    return c;
}

} // namespace detail

inline CheckResult check_hankel(const Settings& st) {
    using detail::g6;
    CheckResult r{1, "hankel_oracle", false, {}};
    const double tol = st.num("c1.tol", 1e-10), wtol = st.num("c1.wronskian_tol", 1e-8);
    double worst = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 10; ++j) {
            const double rad = 0.1 * std::pow(1000.0, double(i) / 19.0);
            const double arg = std::numbers::pi / 2.0 * double(j) / 9.0;
            const cplx z = std::polar(rad, arg);
            const auto ref = oracle::hankel01_series(z);
            for (int nu = 0; nu < 2; ++nu) worst = std::max(worst, std::abs(hankel1(nu, z) / ref[nu] - 1.0));
            ++count;
        }
    double wworst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double x = 0.5 + 49.5 * double(i) / 99.0;
        const auto h = hankel1_01(cplx(x, 0.0));
        const double w = h[0].real() * h[1].imag() - h[1].real() * h[0].imag();
        const double ref = -2.0 / (std::numbers::pi * x);
        wworst = std::max(wworst, std::abs(w - ref) / std::abs(ref));
    }
    r.pass = worst <= tol && wworst <= wtol;
    r.metrics = {{"sample_points", std::to_string(count)},
                 {"max_rel_error", g6(worst)},
                 {"tolerance", g6(tol)},
                 {"wronskian_max_rel_error", g6(wworst)},
                 {"wronskian_tolerance", g6(wtol)}};
    return r;
}

inline CheckResult check_truncation(const Settings& st) {
    using detail::g6;
    CheckResult r{2, "truncation_order", true, {}};
    const double tol = st.num("c2.slope_tol", 0.2);
    std::vector<double> zs;
    for (double z = 25.0; z <= 800.0; z *= 2.0) zs.push_back(z);
    const Point x{0, 0, 0}, y{1, 0, 0};
    for (int N = 0; N <= 2; ++N) {
        std::vector<double> err;
        for (double z : zs) err.push_back(std::abs(green(2, cplx(z, 0.0), x, y) - green_truncated(N, cplx(z, 0.0), x, y)));
        const double slope = loglog_slope(zs, err);
        const double target = -(N + 1.5);
        const bool ok = std::abs(slope - target) <= tol;
        r.pass = r.pass && ok;
        r.metrics.push_back({"N" + std::to_string(N) + "_slope", g6(slope)});
        r.metrics.push_back({"N" + std::to_string(N) + "_target", g6(target)});
    }
    r.metrics.push_back({"slope_tolerance", g6(tol)});
    return r;
}

inline CheckResult check_kernel_constants(const Settings& st) {
    using detail::g6;
    CheckResult r{3, "kernel_constants", false, {}};
    const double tol = st.num("c3.tol", 1e-10);
    const double closed = -1.0 / (2.0 * std::numbers::pi);
    const double e1 = std::abs(kernel_constant_c1(1.5, 2) / closed - 1.0);
    const double e2 = std::abs(kernel_constant_c2(1.0, 2) / closed - 1.0);
    const std::vector<std::pair<double, int>> pairs{{0.25, 2}, {0.5, 2}, {0.75, 2}, {1.25, 2}, {1.75, 2},
                                                    {0.5, 3},  {1.0, 3}, {1.25, 3}, {2.0, 3},  {1.5, 3}};
    double worst = 0.0;
    for (auto [s, d] : pairs) {
        const bool lg = kernel_is_logarithmic(s, d);
        const double v = lg ? kernel_constant_c2(s, d) : kernel_constant_c1(s, d);
        const double ref = lg ? oracle::kernel_c2(s, d) : oracle::kernel_c1(s, d);
        worst = std::max(worst, std::abs(v / ref - 1.0));
    }
    r.pass = e1 <= tol && e2 <= tol && worst <= tol;
    r.metrics = {{"c1_s1.5_d2_rel_error", g6(e1)},
                 {"c2_s1_d2_rel_error", g6(e2)},
                 {"extra_pairs", std::to_string(pairs.size())},
                 {"extra_max_rel_error", g6(worst)},
                 {"tolerance", g6(tol)}};
    return r;
}

inline CheckResult check_sampler(const Settings& st, std::uint64_t seed) {
    using detail::g6;
    CheckResult r{4, "sampler_covariance", true, {}};
    const std::size_t M = st.count("c4.M", 5000);
    const double nse = st.num("c4.se", 3.0);
    const GridSpec g = GridSpec::centered(2, st.count("c4.n", 128), 1.0);
    const double hd = g.cell_volume(), h = g.h();
    const FieldSample phi = gaussian_bump(g, {0.1, -0.05, 0}, 0.05, 1.0, 0.3);
    const std::vector<double> svals{0.5, 1.0, 1.5};
    std::vector<double> hs;

    // increment functionals for s = 1.5
    const double wc = st.num("c4.width_cells", 1.5);
    const long maxoff = long(st.count("c4.max_offset", 10));
    const std::size_t npairs = st.count("c4.pairs", 12);
    const long c0 = long(g.n / 2);
    std::vector<std::array<long, 2>> offs;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    {
        auto rng = make_rng(seed + 77);
        std::uniform_int_distribution<long> ud(-maxoff, maxoff);
        auto index_of = [&](std::array<long, 2> a) {
            for (std::size_t i = 0; i < offs.size(); ++i)
                if (offs[i] == a) return i;
            offs.push_back(a);
            return offs.size() - 1;
        };
        while (pairs.size() < npairs) {
            std::array<long, 2> a{ud(rng), ud(rng)}, b{ud(rng), ud(rng)};
            if ((a[0] == 0 && a[1] == 0) || (b[0] == 0 && b[1] == 0)) continue;
            pairs.push_back({index_of(a), index_of(b)});
        }
    }
    const auto base = detail::cell_gaussian(g, c0, c0, wc);
    std::vector<detail::SparseTest> tests;
    for (auto a : offs) tests.push_back(detail::cell_gaussian(g, c0 + a[0], c0 + a[1], wc));

    for (std::size_t si = 0; si < svals.size(); ++si) {
        const double s = svals[si];
        FgfSampler sampler(g, s);
        const double q = covariance_quadform(phi, phi, s);
        std::vector<double> x2(M);
        std::vector<std::vector<double>> inc;
        const bool do_inc = s == 1.5;
        if (do_inc) inc.assign(offs.size(), std::vector<double>(M));
        for (std::size_t rep = 0; rep < M; ++rep) {
            sampler.sample(seed + 100000 * (si + 1) + rep, hs);
            const double x = grid_pairing(hs, phi);
            x2[rep] = x * x;
            if (do_inc) {
                const double b0 = base.apply(hs, hd);
                for (std::size_t t = 0; t < offs.size(); ++t) inc[t][rep] = tests[t].apply(hs, hd) - b0;
            }
        }
        const double mean = pairwise_sum(x2) / double(M);
        double ss = 0.0;
        for (double v : x2) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / double(M - 1) / double(M));
        const double z = (mean - q) / se;
        const bool ok = std::abs(z) <= nse;
        r.pass = r.pass && ok;
        const std::string tag = "s" + g6(s);
        r.metrics.push_back({tag + "_var_empirical", g6(mean)});
        r.metrics.push_back({tag + "_var_spectral", g6(q)});
        r.metrics.push_back({tag + "_z", g6(z)});

        if (do_inc) {
            const double sg = std::sqrt(2.0) * wc * h;
            const std::size_t P = pairs.size();
            std::vector<double> emp(P), se_p(P), m1(P), m2(P), exact(P);
            std::vector<double> prod(M);
            for (std::size_t p = 0; p < P; ++p) {
                const auto [ia, ib] = pairs[p];
                for (std::size_t rep = 0; rep < M; ++rep) prod[rep] = inc[ia][rep] * inc[ib][rep];
                const double mu = pairwise_sum(prod) / double(M);
                double v = 0.0;
                for (double e : prod) v += (e - mu) * (e - mu);
                emp[p] = mu;
                se_p[p] = std::sqrt(v / double(M - 1) / double(M));
                const auto a = offs[ia], b = offs[ib];
                const double la = std::hypot(double(a[0]), double(a[1])) * h;
                const double lb = std::hypot(double(b[0]), double(b[1])) * h;
                const double lab = std::hypot(double(a[0] - b[0]), double(a[1] - b[1])) * h;
                m1[p] = detail::rice_mean(lab, sg) - detail::rice_mean(la, sg) - detail::rice_mean(lb, sg) +
                        detail::rice_mean(0.0, sg);
                m2[p] = -2.0 * double(a[0] * b[0] + a[1] * b[1]) * h * h;
                exact[p] = covariance_quadform(detail::to_field(g, tests[ia], &base), detail::to_field(g, tests[ib], &base), s);
            }
            // weighted least squares for emp ~ C m1 + D m2
            auto fit = [&](const std::vector<double>& y, double& C, double& D) {
                Eigen::Matrix2d N = Eigen::Matrix2d::Zero();
                Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
                for (std::size_t p = 0; p < P; ++p) {
                    const double w = 1.0 / (se_p[p] * se_p[p]);
                    N(0, 0) += w * m1[p] * m1[p];
                    N(0, 1) += w * m1[p] * m2[p];
                    N(1, 1) += w * m2[p] * m2[p];
                    rhs(0) += w * m1[p] * y[p];
                    rhs(1) += w * m2[p] * y[p];
                }
                N(1, 0) = N(0, 1);
                const Eigen::Vector2d sol = N.ldlt().solve(rhs);
                C = sol(0);
                D = sol(1);
                double worst = 0.0;
                for (std::size_t p = 0; p < P; ++p) worst = std::max(worst, std::abs(y[p] - C * m1[p] - D * m2[p]) / se_p[p]);
                return worst;
            };
            double C = 0, D = 0, Ce = 0, De = 0;
            const double worst = fit(emp, C, D);
            const double worst_exact = fit(exact, Ce, De);
            const bool iok = worst <= nse;
            r.pass = r.pass && iok;
            const double c1 = kernel_constant_c1(1.5, 2);
            r.metrics.push_back({"increment_pairs", std::to_string(P)});
            r.metrics.push_back({"increment_fit_C", g6(C)});
            r.metrics.push_back({"increment_fit_periodization_D", g6(D)});
            r.metrics.push_back({"increment_C_over_C1", g6(C / c1)});
            r.metrics.push_back({"increment_max_resid_over_se", g6(worst)});
            r.metrics.push_back({"increment_spectral_fit_C", g6(Ce)});
            r.metrics.push_back({"increment_spectral_max_resid_over_se", g6(worst_exact)});
        }
    }
    r.metrics.push_back({"M", std::to_string(M)});
    r.metrics.push_back({"se_bound", g6(nse)});
    return r;
}

inline CheckResult check_mc_oracle(const Settings& st, std::uint64_t seed, int threads) {
    using detail::g6;
    CheckResult r{5, "mc_oracle_equivalence", true, {}};
    const std::size_t M = st.count("c5.M", 2000);
    const double nse = st.num("c5.se", 3.0);
    auto c = detail::desk_2d(st.count("c5.n", 128), 8);
    const auto w = wavenumber_split(st.num("c5.k", 20.0), st.num("c5.sigma", 0.5));
    ForwardOptions opt;
    opt.threads = threads;
    const auto mc = mc_second_moment(c.model, w, c.ms, M, seed, opt);
    const auto ex = exact_second_moment(c.model, w, c.ms, opt);
    double worst = 0.0;
    for (std::size_t i = 0; i < ex.size(); ++i) worst = std::max(worst, std::abs(mc.estimates[i] - ex[i]) / mc.standard_errors[i]);
    r.pass = worst <= nse;
    r.metrics = {{"points", std::to_string(ex.size())},
                 {"M", std::to_string(M)},
                 {"max_abs_z", g6(worst)},
                 {"mean_rel_se", g6(mc.standard_errors[0] / mc.estimates[0])},
                 {"se_bound", g6(nse)}};
    return r;
}

inline CheckResult check_high_frequency(const Settings& st, int threads) {
    using detail::g6;
    CheckResult r{6, "high_frequency_limit", true, {}};
    const double ftol = st.num("c6.final_tol", 0.10);
    const double starget = st.num("c6.slope", -1.0), stol = st.num("c6.slope_tol", 0.3);
    const std::vector<double> ks{10, 20, 40, 80};
    ForwardOptions opt;
    opt.threads = threads;

    auto c = detail::desk_2d(st.count("c6.n", 256), 8);
    const auto curve = scaled_moment_curve(c.model, 0.5, c.ms, ks, opt);
    double final_dev = 0.0, slope_lo = 1e9, slope_hi = -1e9, first_dev = 0.0;
    for (std::size_t i = 0; i < c.ms.points.size(); ++i) {
        std::vector<double> dev;
        for (std::size_t k = 0; k < ks.size(); ++k) dev.push_back(std::abs(curve.deviation[k][i]));
        final_dev = std::max(final_dev, dev.back());
        first_dev = std::max(first_dev, dev.front());
        const double sl = loglog_slope(ks, dev);
        slope_lo = std::min(slope_lo, sl);
        slope_hi = std::max(slope_hi, sl);
    }
    const bool f2 = final_dev < ftol;
    const bool s2 = std::abs(slope_lo - starget) <= stol && std::abs(slope_hi - starget) <= stol;
    for (std::size_t k = 0; k < ks.size(); ++k)
        r.metrics.push_back({"d2_k" + g6(ks[k]) + "_deviation_pt0", g6(curve.deviation[k][0])});
    r.metrics.push_back({"d2_final_max_abs_deviation", g6(final_dev)});
    r.metrics.push_back({"d2_final_status", detail::status(f2)});
    r.metrics.push_back({"d2_slope_min", g6(slope_lo)});
    r.metrics.push_back({"d2_slope_max", g6(slope_hi)});
    r.metrics.push_back({"d2_slope_target", g6(starget) + " +- " + g6(stol)});
    r.metrics.push_back({"d2_slope_status", detail::status(s2)});
    r.metrics.push_back({"d2_final_below_initial", detail::status(final_dev < first_dev)});

    SourceModel m3;
    m3.grid = GridSpec::centered(3, st.count("c6.n3", 64), 0.5);
    m3.s = 1.0;
    m3.amplitude = gaussian_bump(m3.grid, {0, 0, 0}, 0.05, 1.0, 0.2);
    MeasurementSet ms3;
    ms3.d = 3;
    ms3.r0 = 0.04;
    ms3.points = {{0.26, 0, 0}, {-0.26, 0, 0}, {0, 0.26, 0}, {0, -0.26, 0}, {0, 0, 0.26}, {0, 0, -0.26}};
    const auto c3 = scaled_moment_curve(m3, 0.5, ms3, ks, opt);
    double final3 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < ms3.points.size(); ++i) final3 = std::max(final3, std::abs(c3.deviation.back()[i]));
    {
        std::vector<double> dev;
        for (std::size_t k = 0; k < ks.size(); ++k) dev.push_back(std::abs(c3.deviation[k][0]));
        s3 = loglog_slope(ks, dev);
    }
    const bool f3 = final3 < ftol;
    for (std::size_t k = 0; k < ks.size(); ++k)
        r.metrics.push_back({"d3_k" + g6(ks[k]) + "_deviation_pt0", g6(c3.deviation[k][0])});
    r.metrics.push_back({"d3_final_max_abs_deviation", g6(final3)});
    r.metrics.push_back({"d3_final_status", detail::status(f3)});
    r.metrics.push_back({"d3_slope_informational", g6(s3)});
    r.metrics.push_back({"final_tolerance", g6(ftol)});
    r.pass = f2 && s2 && f3;
    return r;
}

inline CheckResult check_finite_k(const Settings& st, int threads) {
    using detail::g6;
    CheckResult r{7, "finite_k_prediction", false, {}};
    const double tol = st.num("c7.tol", 0.10);
    auto c = detail::desk_2d(st.count("c7.n", 256), 8);
    const auto w = wavenumber_split(st.num("c7.k", 40.0), 0.5);
    ForwardOptions opt;
    opt.threads = threads;
    const auto e = exact_second_moment(c.model, w, c.ms, opt);
    const auto p = finite_k_prediction(strength_of(c.model), c.model.s, w, c.ms);
    double worst = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(e[i] / p[i] - 1.0));
    r.pass = worst <= tol;
    r.metrics = {{"points", std::to_string(e.size())}, {"max_rel_deviation", g6(worst)}, {"tolerance", g6(tol)}};
    return r;
}

inline CheckResult check_ergodic(const Settings& st, std::uint64_t seed, int threads) {
    using detail::g6;
    CheckResult r{8, "ergodic_average", false, {}};
    const double tol1 = st.num("c8.single_tol", 0.15), tolm = st.num("c8.multi_tol", 0.05);
    const std::size_t nseeds = st.count("c8.seeds", 10);
    const double K = st.num("c8.K", 64.0);
    const std::size_t n_k = st.count("c8.n_k", 64);
    SourceModel m;
    m.grid = GridSpec::centered(2, st.count("c8.n", 1024), 10.0);
    m.s = 1.0;
    m.amplitude = gaussian_bump(m.grid, {0, 0, 0}, 3.0, 1.0, 4.5);
    m.seed = seed;
    MeasurementSet ms;
    ms.d = 2;
    ms.r0 = 1.0;
    ms.points = {{9.0, 0.0, 0.0}};
    ForwardOptions opt;
    opt.threads = threads;
    const double T = limit_functional(strength_of(m), 0.0, ms, 2).values[0];
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < nseeds; ++i) seeds.push_back(seed + i);
    const auto avgs = ergodic_average_seeds(m, seeds, ms, K, n_k, 0.0, opt);
    const double single = avgs.front().values[0] / T - 1.0;
    double mean = 0.0;
    for (const auto& a : avgs) mean += a.values[0];
    mean /= double(avgs.size());
    const double multi = mean / T - 1.0;
    const bool ok1 = std::abs(single) <= tol1, okm = std::abs(multi) <= tolm;
    r.pass = ok1 && okm;
    r.metrics = {{"T", g6(T)},
                 {"single_seed", std::to_string(seed)},
                 {"single_rel_deviation", g6(single)},
                 {"single_status", detail::status(ok1)},
                 {"seeds", std::to_string(nseeds)},
                 {"multi_rel_deviation", g6(multi)},
                 {"multi_status", detail::status(okm)}};
    if (st.num("c8.moments", 1.0) != 0.0) {
        const auto mo = ergodic_average_moments(m, ms.points[0], K, n_k, opt);
        const double sd1 = mo.sd / T, sdm = sd1 / std::sqrt(double(nseeds));
        r.metrics.push_back({"predicted_bias", g6(mo.mean / T - 1.0)});
        r.metrics.push_back({"predicted_single_sd", g6(sd1)});
        r.metrics.push_back({"single_z", g6((avgs.front().values[0] - mo.mean) / mo.sd)});
        r.metrics.push_back({"predicted_multi_sd", g6(sdm)});
        r.metrics.push_back({"multi_z", g6((mean - mo.mean) / (mo.sd / std::sqrt(double(nseeds))))});
    }
    return r;
}

namespace detail {
struct InversionOutcome {
    double exact_error = 0.0, noisy_error = 0.0, lambda_rel = 0.0, condition = 0.0;
    std::size_t unknowns = 0;
};

inline InversionOutcome run_inversion(int d, std::size_t n, double support, double ring, double sigma, double width,
                                      double r0, double exact_lambda_rel, double noise, std::uint64_t seed) {
    InversionOutcome o;
    const GridSpec g = GridSpec::centered(d, n, 2.0);
    const auto mask = ball_mask(g, {0, 0, 0}, support);
    FieldSample mu(g);
    for (std::size_t j = 0; j < mu.values.size(); ++j)
        if (mask[j]) {
            const double rr = distance(g.center(j), {0, 0, 0}, d);
            mu.values[j] = std::exp(-rr * rr / (2.0 * width * width));
        }
    MeasurementSet ms;
    ms.d = d;
    ms.r0 = r0;
    ms.points = ring_points(d, {0, 0, 0}, ring, 64);
    const auto fm = assemble_forward_map(g, mask, ms, sigma, d);
    const auto T = limit_functional(mu, sigma, ms, d);
    const Eigen::VectorXd data = Eigen::Map<const Eigen::VectorXd>(T.values.data(), Eigen::Index(T.values.size()));
    const TikhonovSolver solver(fm.A);
    const auto ex = reconstruct_tikhonov(fm, solver, data, exact_lambda_rel * solver.norm_squared(), true);
    o.exact_error = relative_l2_error(ex.mu.mu, mu);
    o.condition = ex.condition_estimate;
    o.unknowns = fm.columns.size();
    auto rng = make_rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd e(data.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = nd(rng);
    e *= noise * data.norm() / e.norm();
    const Eigen::VectorXd noisy = data + e;
    const double lam = discrepancy_lambda(solver, noisy, noise * data.norm());
    const auto nr = reconstruct_tikhonov(fm, solver, noisy, lam, true);
    o.noisy_error = relative_l2_error(nr.mu.mu, mu);
    o.lambda_rel = lam / solver.norm_squared();
    return o;
}
} // namespace detail

inline CheckResult check_inversion(const Settings& st, std::uint64_t seed) {
    using detail::g6;
    CheckResult r{9, "inversion", false, {}};
    const double etol = st.num("c9.exact_tol", 0.15), ntol = st.num("c9.noisy_tol", 0.25);
    const double lam = st.num("c9.lambda", 1e-16), noise = st.num("c9.noise", 0.01);
    const auto o2 = detail::run_inversion(2, 32, 0.2, 0.4, 1.0, 0.2, 0.04, lam, noise, seed);
    const auto o3 = detail::run_inversion(3, 16, 0.25, 0.7, 1.0, 0.3, 0.1, lam, noise, seed);
    r.pass = o2.exact_error < etol && o2.noisy_error < ntol && o3.exact_error < etol && o3.noisy_error < ntol;
    r.metrics = {{"d2_unknowns", std::to_string(o2.unknowns)},
                 {"d2_exact_rel_error", g6(o2.exact_error)},
                 {"d2_noisy_rel_error", g6(o2.noisy_error)},
                 {"d2_discrepancy_lambda_rel", g6(o2.lambda_rel)},
                 {"d3_unknowns", std::to_string(o3.unknowns)},
                 {"d3_exact_rel_error", g6(o3.exact_error)},
                 {"d3_noisy_rel_error", g6(o3.noisy_error)},
                 {"d3_discrepancy_lambda_rel", g6(o3.lambda_rel)},
                 {"exact_tolerance", g6(etol)},
                 {"noisy_tolerance", g6(ntol)}};
    return r;
}

inline CheckResult check_constructive(const Settings& st, std::uint64_t seed, int threads) {
    using detail::g6;
    CheckResult r{10, "constructive_pipeline", false, {}};
    const double ctol = st.num("c10.coarea_tol", 0.01), rtol = st.num("c10.roundtrip_tol", 0.10);
    const GridSpec g = GridSpec::centered(2, st.count("c10.n", 128), 16.0);
    const FieldSample mu = gaussian_bump(g, {0.3, -0.2, 0}, 0.6, 1.0, 2.0);
    const double sigma = 0.5;
    auto rng = make_rng(seed + 5);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    MeasurementSet ms;
    ms.d = 2;
    ms.r0 = 0.2;
    for (int i = 0; i < 3; ++i) {
        const double t = ang(rng);
        ms.points.push_back({0.3 + 3.0 * std::cos(t), -0.2 + 3.0 * std::sin(t), 0.0});
    }
    const auto T = limit_functional(mu, sigma, ms, 2);
    double coarea = 0.0, convm = 0.0;
    for (std::size_t i = 0; i < ms.points.size(); ++i) {
        const auto radii = radii_for(mu, ms.points[i], 1 + std::size_t(std::ceil(16.0 / g.h())));
        const auto S = spherical_means(mu, ms.points[i], radii);
        const double t = radial_integral(S, [&](double rr) { return limit_weight(2, sigma, rr); });
        coarea = std::max(coarea, std::abs(t / T.values[i] - 1.0));
        const double cd = gaussian_convolve_direct(mu, ms.points[i]);
        convm = std::max(convm, std::abs(gaussian_convolve_means(S) / cd - 1.0));
    }
    const FieldSample conv = gaussian_convolve_grid(mu, threads);
    const auto rec = gaussian_deconvolve(conv, default_deconvolution_cutoff());
    double peak = 0.0;
    for (double v : mu.values) peak = std::max(peak, v);
    double worst = 0.0;
    for (std::size_t j = 0; j < mu.values.size(); ++j)
        if (mu.values[j] > 0.1 * peak) worst = std::max(worst, std::abs(rec.mu.values[j] / mu.values[j] - 1.0));
    r.pass = coarea <= ctol && convm <= ctol && worst <= rtol;
    r.metrics = {{"coarea_max_rel_error", g6(coarea)},
                 {"means_convolution_max_rel_error", g6(convm)},
                 {"coarea_tolerance", g6(ctol)},
                 {"deconvolution_cutoff", g6(default_deconvolution_cutoff())},
                 {"roundtrip_bulk_max_rel_error", g6(worst)},
                 {"roundtrip_tolerance", g6(rtol)}};
    return r;
}

struct CheckInfo {
    int id;
    const char* name;
};

inline const std::vector<CheckInfo>& check_list() {
    static const std::vector<CheckInfo> list{{1, "hankel_oracle"},        {2, "truncation_order"},
                                             {3, "kernel_constants"},     {4, "sampler_covariance"},
                                             {5, "mc_oracle_equivalence"}, {6, "high_frequency_limit"},
                                             {7, "finite_k_prediction"},  {8, "ergodic_average"},
                                             {9, "inversion"},            {10, "constructive_pipeline"}};
    return list;
}

/// Runs one check; failures by exception are reported as FAIL with the message.
inline CheckResult run_check(int id, const Settings& st, std::uint64_t seed, int threads) {
    try {
        switch (id) {
            case 1: return check_hankel(st);
            case 2: return check_truncation(st);
            case 3: return check_kernel_constants(st);
            case 4: return check_sampler(st, seed);
            case 5: return check_mc_oracle(st, seed, threads);
            case 6: return check_high_frequency(st, threads);
            case 7: return check_finite_k(st, threads);
            case 8: return check_ergodic(st, seed, threads);
            case 9: return check_inversion(st, seed);
            case 10: return check_constructive(st, seed, threads);
        }
    } catch (const std::exception& e) {
        CheckResult r{id, check_list()[std::size_t(id - 1)].name, false, {{"error", e.what()}}};
        return r;
    }
    throw ValidationError("unknown check id " + std::to_string(id));
}

/// Selected ids from "checks" (space-separated ids or names), default all.
inline std::vector<int> selected_checks(const Settings& st) {
    const std::string sel = st.text("checks", "all");
    std::vector<int> ids;
    if (sel == "all") {
        for (const auto& c : check_list()) ids.push_back(c.id);
        return ids;
    }
    std::istringstream is(sel);
    std::string tok;
    while (is >> tok) {
        int found = 0;
        for (const auto& c : check_list())
            if (tok == c.name || tok == std::to_string(c.id)) found = c.id;
        if (!found) throw ValidationError("verify.checks: unknown check '" + tok + "'");
        ids.push_back(found);
    }
    return ids;
}

inline std::string format_report(const std::vector<CheckResult>& results) {
    std::string out = "# verification report\n";
    std::size_t passed = 0;
    for (const auto& r : results) {
        const std::string p = "check." + std::to_string(r.id) + ".";
        out += p + "name = " + r.name + "\n";
        out += p + "status = " + detail::status(r.pass) + "\n";
        for (const auto& [k, v] : r.metrics) out += p + k + " = " + v + "\n";
        passed += r.pass;
    }
    out += "summary.passed = " + std::to_string(passed) + "\n";
    out += "summary.failed = " + std::to_string(results.size() - passed) + "\n";
    return out;
}

} // namespace stochsrc::verify
