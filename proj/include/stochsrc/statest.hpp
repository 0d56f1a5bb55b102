#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "forward.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "randfield.hpp"

namespace stochsrc {

enum class LimitKind { T_2d, T_3d, T_kappa };

inline const char* limit_kind_name(LimitKind k) {
    switch (k) {
        case LimitKind::T_2d: return "T_2d";
        case LimitKind::T_3d: return "T_3d";
        case LimitKind::T_kappa: return "T_kappa";
    }
    return "?";
}

struct LimitData {
    std::vector<Point> points;
    std::vector<double> values;
    LimitKind kind = LimitKind::T_2d;
    double s = 0.0;
    double sigma = 0.0;
    double k = 0.0;  // wavenumber for T_kappa, upper band edge K for ergodic averages
};

struct MomentEstimate {
    std::vector<double> estimates;
    std::vector<double> standard_errors;
};

/// Exponent p such that k^p E|u|^2 has a finite high-frequency limit.
inline double scaling_exponent(int d, double s) { return d == 2 ? 2.0 * s + 1.0 : 2.0 * s; }

/// e^{-decay r}/(8 pi r) in 2D, e^{-decay r}/(16 pi^2 r^2) in 3D.
inline double limit_weight(int d, double decay, double r) {
    if (d == 2) return std::exp(-decay * r) / (8.0 * std::numbers::pi * r);
    return std::exp(-decay * r) / (16.0 * std::numbers::pi * std::numbers::pi * r * r);
}

inline void check_model_measurements(const SourceModel& model, const MeasurementSet& m) {
    validate_source_model(model);
    check_separation(model.amplitude, m);
}

inline MomentEstimate mc_second_moment(const SourceModel& model, const WavenumberState& w, const MeasurementSet& m,
                                       std::size_t M, std::uint64_t seed, const ForwardOptions& opt = {}) {
    if (M < 2) throw ValidationError("mc_second_moment: M must be at least 2");
    check_model_measurements(model, m);
    check_resolution(model.grid, w, opt);
    const std::size_t P = m.points.size();
    MomentEstimate out{std::vector<double>(P, 0.0), std::vector<double>(P, 0.0)};
    const auto cells = support_indices(model.amplitude);
    if (cells.empty() || P == 0) return out;
    const KernelRows kr = build_kernel_rows(model.grid, cells, w.kappa(), m.points, -1, opt.threads);

    std::vector<double> samples(M * P);
    const std::size_t nw = worker_count(M, opt.threads);
    std::vector<std::unique_ptr<FgfSampler>> samplers;
    for (std::size_t i = 0; i < nw; ++i) samplers.push_back(std::make_unique<FgfSampler>(model.grid, model.s));
    std::vector<std::vector<double>> hs(nw), f(nw);
    parallel_for(M, opt.threads, [&](std::size_t wk, std::size_t r) {
        realize_source(*samplers[wk], model.amplitude, seed + r, hs[wk], f[wk]);
        for (std::size_t i = 0; i < P; ++i) samples[r * P + i] = std::norm(kr.apply(i, f[wk]));
    });

    std::vector<double> col(M);
    for (std::size_t i = 0; i < P; ++i) {
        for (std::size_t r = 0; r < M; ++r) col[r] = samples[r * P + i];
        const double mean = pairwise_sum(col) / double(M);
        for (auto& v : col) v = (v - mean) * (v - mean);
        const double var = pairwise_sum(col) / double(M - 1);
        out.estimates[i] = mean;
        out.standard_errors[i] = std::sqrt(var / double(M));
    }
    return out;
}

namespace detail {

/// Fills fft buffer with a * Phi(x, .) on the grid and transforms it.
inline void weighted_green_spectrum(GridFft& fft, const SourceModel& model, const std::vector<std::size_t>& cells,
                                    const std::vector<Point>& centers, cplx kappa, const Point& x) {
    auto* b = fft.data();
    std::fill(b, b + fft.size(), cplx(0.0, 0.0));
    for (std::size_t c = 0; c < cells.size(); ++c)
        b[cells[c]] = model.amplitude.values[cells[c]] * green_r(model.grid.d, kappa, distance(x, centers[c], model.grid.d));
    fft.forward();
}

} // namespace detail

/// E|u(x;k)|^2 = (h^d/N) sum_{m != 0} |xi_m|^{-2s} |DFT(a Phi(x,.))_m|^2, exact for the discrete model.
inline std::vector<double> exact_second_moment(const SourceModel& model, const WavenumberState& w,
                                               const MeasurementSet& m, const ForwardOptions& opt = {}) {
    check_model_measurements(model, m);
    check_resolution(model.grid, w, opt);
    const std::size_t P = m.points.size();
    std::vector<double> out(P, 0.0);
    const auto cells = support_indices(model.amplitude);
    if (cells.empty()) return out;
    std::vector<Point> centers(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) centers[c] = model.grid.center(cells[c]);
    auto mult = fgf_multiplier(model.grid, model.s);
    for (auto& v : mult) v *= v;
    const std::size_t nw = worker_count(P, opt.threads);
    std::vector<std::unique_ptr<GridFft>> ffts;
    for (std::size_t i = 0; i < nw; ++i) ffts.push_back(std::make_unique<GridFft>(model.grid));
    const double scale = model.grid.cell_volume() / double(model.grid.size());
    parallel_for(P, opt.threads, [&](std::size_t wk, std::size_t i) {
        auto& fft = *ffts[wk];
        detail::weighted_green_spectrum(fft, model, cells, centers, w.kappa(), m.points[i]);
        std::vector<double> terms(fft.size());
        for (std::size_t j = 0; j < fft.size(); ++j) terms[j] = mult[j] * std::norm(fft.data()[j]);
        out[i] = pairwise_sum(terms) * scale;
    });
    return out;
}

namespace detail {
inline LimitData limit_functional_impl(const FieldSample& mu, double decay, const MeasurementSet& m, LimitKind kind) {
    validate_grid(mu.grid);
    for (double v : mu.values)
        if (!(v >= 0.0)) throw ValidationError("limit_functional: strength must be nonnegative");
    check_separation(mu, m);
    LimitData out;
    out.points = m.points;
    out.kind = kind;
    out.values.assign(m.points.size(), 0.0);
    const auto cells = support_indices(mu);
    const double hd = mu.grid.cell_volume();
    std::vector<double> terms(cells.size());
    for (std::size_t i = 0; i < m.points.size(); ++i) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double r = distance(m.points[i], mu.grid.center(cells[c]), mu.grid.d);
            terms[c] = limit_weight(mu.grid.d, decay, r) * mu.values[cells[c]];
        }
        out.values[i] = pairwise_sum(terms) * hd;
    }
    return out;
}
} // namespace detail

/// T (d = 2) or the 3D analogue by midpoint quadrature of the weighted integral of mu.
inline LimitData limit_functional(const FieldSample& mu, double sigma, const MeasurementSet& m, int d) {
    if (d != mu.grid.d) throw ValidationError("limit_functional: dimension mismatch");
    if (!(sigma >= 0.0)) throw ValidationError("limit_functional: sigma must be nonnegative");
    auto out = detail::limit_functional_impl(mu, sigma, m, d == 2 ? LimitKind::T_2d : LimitKind::T_3d);
    out.sigma = sigma;
    return out;
}

/// Finite-k variant: the decay rate is 2 kappa_i instead of sigma.
inline LimitData limit_functional_kappa(const FieldSample& mu, const WavenumberState& w, const MeasurementSet& m) {
    auto out = detail::limit_functional_impl(mu, 2.0 * w.kappa_i, m, LimitKind::T_kappa);
    out.sigma = w.sigma;
    out.k = w.k;
    return out;
}

/// Leading-order prediction T_kappa(x) |kappa|^{-1} kappa_r^{-2s} for E|u|^2 in 2D.
inline std::vector<double> finite_k_prediction(const FieldSample& mu, double s, const WavenumberState& w,
                                               const MeasurementSet& m) {
    const auto tk = limit_functional_kappa(mu, w, m);
    std::vector<double> out(tk.values.size());
    const double f = 1.0 / (std::abs(w.kappa()) * std::pow(w.kappa_r, 2.0 * s));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = tk.values[i] * f;
    return out;
}

struct MomentCurve {
    std::vector<double> k_list;
    std::vector<std::vector<double>> scaled;     // [k][point]
    std::vector<std::vector<double>> deviation;  // scaled / T - 1
    LimitData limit;
};

inline MomentCurve scaled_moment_curve(const SourceModel& model, double sigma, const MeasurementSet& m,
                                       const std::vector<double>& k_list, const ForwardOptions& opt = {}) {
    if (k_list.empty()) throw ValidationError("scaled_moment_curve: empty k schedule");
    for (std::size_t i = 1; i < k_list.size(); ++i)
        if (!(k_list[i] > k_list[i - 1])) throw ValidationError("scaled_moment_curve: k schedule must increase");
    check_resolution(model.grid, wavenumber_split(k_list.back(), sigma), opt);
    MomentCurve c;
    c.k_list = k_list;
    c.limit = limit_functional(strength_of(model), sigma, m, model.grid.d);
    c.limit.s = model.s;
    const double p = scaling_exponent(model.grid.d, model.s);
    for (double k : k_list) {
        auto e = exact_second_moment(model, wavenumber_split(k, sigma), m, opt);
        std::vector<double> dev(e.size(), 0.0);
        for (std::size_t i = 0; i < e.size(); ++i) {
            e[i] *= std::pow(k, p);
            dev[i] = c.limit.values[i] > 0.0 ? e[i] / c.limit.values[i] - 1.0 : 0.0;
        }
        c.scaled.push_back(e);
        c.deviation.push_back(dev);
    }
    return c;
}

/// Least-squares slope of log|y| against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope: need at least two pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Midpoint nodes on [1, K].
inline std::vector<double> ergodic_nodes(double K, std::size_t n_k) {
    std::vector<double> k(n_k);
    for (std::size_t j = 0; j < n_k; ++j) k[j] = 1.0 + (K - 1.0) * (double(j) + 0.5) / double(n_k);
    return k;
}

inline void check_ergodic_args(double sigma, double K, std::size_t n_k) {
    if (sigma != 0.0) throw ValidationError("ergodic averaging requires sigma = 0");
    if (!(K > 1.0)) throw ValidationError("ergodic averaging requires K > 1");
    if (n_k < 16) throw ValidationError("ergodic averaging requires at least 16 frequency nodes");
}

/// Frequency averages (K-1)^{-1} int_1^K k^p |u(x;k)|^2 dk for several fixed realizations, one per seed.
/// Green rows are built once per node and shared by all realizations.
inline std::vector<LimitData> ergodic_average_seeds(const SourceModel& model, const std::vector<std::uint64_t>& seeds,
                                                    const MeasurementSet& m, double K, std::size_t n_k,
                                                    double sigma = 0.0, const ForwardOptions& opt = {}) {
    check_ergodic_args(sigma, K, n_k);
    check_model_measurements(model, m);
    check_resolution(model.grid, wavenumber_split(K, 0.0), opt);
    const std::size_t P = m.points.size(), S = seeds.size();
    std::vector<LimitData> out(S);
    for (auto& o : out) {
        o.points = m.points;
        o.values.assign(P, 0.0);
        o.kind = model.grid.d == 2 ? LimitKind::T_2d : LimitKind::T_3d;
        o.s = model.s;
        o.k = K;
    }
    const auto cells = support_indices(model.amplitude);
    if (cells.empty()) return out;

    std::vector<std::vector<double>> fields(S);
    {
        FgfSampler sampler(model.grid, model.s);
        std::vector<double> hs;
        for (std::size_t q = 0; q < S; ++q) realize_source(sampler, model.amplitude, seeds[q], hs, fields[q]);
    }
    const auto nodes = ergodic_nodes(K, n_k);
    const double p = scaling_exponent(model.grid.d, model.s);
    std::vector<double> contrib(n_k * S * P);
    parallel_for(n_k, opt.threads, [&](std::size_t, std::size_t j) {
        const double k = nodes[j];
        const KernelRows kr = build_kernel_rows(model.grid, cells, cplx(k, 0.0), m.points, -1, 1);
        const double kp = std::pow(k, p);
        for (std::size_t q = 0; q < S; ++q)
            for (std::size_t i = 0; i < P; ++i) contrib[(j * S + q) * P + i] = kp * std::norm(kr.apply(i, fields[q]));
    });
    std::vector<double> col(n_k);
    for (std::size_t q = 0; q < S; ++q)
        for (std::size_t i = 0; i < P; ++i) {
            for (std::size_t j = 0; j < n_k; ++j) col[j] = contrib[(j * S + q) * P + i];
            out[q].values[i] = pairwise_sum(col) / double(n_k);
        }
    return out;
}

/// Single realization with the model's own seed.
inline LimitData ergodic_average(const SourceModel& model, const MeasurementSet& m, double K, std::size_t n_k,
                                 double sigma = 0.0, const ForwardOptions& opt = {}) {
    return ergodic_average_seeds(model, {model.seed}, m, K, n_k, sigma, opt).front();
}

struct ErgodicMoments {
    double mean = 0.0;  // E of the frequency average
    double sd = 0.0;    // standard deviation of a single-realization frequency average
};

/// Exact mean and spread of the discrete frequency average at one point, from the Gaussian fourth-moment
/// identity Cov(|u1|^2, |u2|^2) = |E u1 conj(u2)|^2 + |E u1 u2|^2.
inline ErgodicMoments ergodic_average_moments(const SourceModel& model, const Point& x, double K, std::size_t n_k,
                                              const ForwardOptions& opt = {}) {
    check_ergodic_args(0.0, K, n_k);
    validate_source_model(model);
    const auto& g = model.grid;
    const std::size_t N = g.size();
    const auto cells = support_indices(model.amplitude);
    ErgodicMoments res;
    if (cells.empty()) return res;
    std::vector<Point> centers(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) centers[c] = g.center(cells[c]);
    auto mult = fgf_multiplier(g, model.s);
    for (auto& v : mult) v *= v;
    // index of -m for every m
    std::vector<std::size_t> neg(N);
    for (std::size_t j = 0; j < N; ++j) {
        auto ijk = g.unflatten(j);
        for (int a = 0; a < g.d; ++a) ijk[a] = (g.n - ijk[a]) % g.n;
        neg[j] = g.flatten(ijk);
    }
    const auto nodes = ergodic_nodes(K, n_k);
    const double p = scaling_exponent(g.d, model.s);
    const double scale = g.cell_volume() / double(N);
    std::vector<std::vector<std::complex<float>>> spec(n_k);
    const std::size_t nw = worker_count(n_k, opt.threads);
    std::vector<std::unique_ptr<GridFft>> ffts;
    for (std::size_t i = 0; i < nw; ++i) ffts.push_back(std::make_unique<GridFft>(g));
    parallel_for(n_k, opt.threads, [&](std::size_t wk, std::size_t j) {
        detail::weighted_green_spectrum(*ffts[wk], model, cells, centers, cplx(nodes[j], 0.0), x);
        spec[j].assign(ffts[wk]->data(), ffts[wk]->data() + N);
    });
    std::vector<double> cov(n_k * n_k, 0.0), zp(n_k);
    for (std::size_t j = 0; j < n_k; ++j) zp[j] = std::pow(nodes[j], p);
    parallel_for(n_k, opt.threads, [&](std::size_t, std::size_t a) {
        for (std::size_t b = a; b < n_k; ++b) {
            std::complex<double> e1 = 0.0, e2 = 0.0;
            const auto& A = spec[a];
            const auto& B = spec[b];
            for (std::size_t j = 0; j < N; ++j) {
                if (mult[j] == 0.0) continue;
                const std::complex<double> fa(A[j]), fb(B[j]), fan(A[neg[j]]);
                e1 += mult[j] * fa * std::conj(fb);
                e2 += mult[j] * fan * fb;
            }
            e1 *= scale;
            e2 *= scale;
            cov[a * n_k + b] = (std::norm(e1) + std::norm(e2)) * zp[a] * zp[b];
        }
    });
    double mean = 0.0, var = 0.0;
    for (std::size_t a = 0; a < n_k; ++a) {
        // E|u_a|^2 = E[u_a conj(u_a)] and Var|u_a|^2 = (E|u_a|^2)^2 + |E u_a^2|^2
        std::complex<double> e1 = 0.0;
        for (std::size_t j = 0; j < N; ++j) e1 += mult[j] * std::norm(std::complex<double>(spec[a][j]));
        mean += std::real(e1) * scale * zp[a];
        for (std::size_t b = 0; b < n_k; ++b) var += a <= b ? cov[a * n_k + b] : cov[b * n_k + a];
    }
    res.mean = mean / double(n_k);
    res.sd = std::sqrt(var) / double(n_k);
    return res;
}

/// Column table: point coordinates, value, and SE when given.
inline std::string format_limit_table(const LimitData& L, int d, const std::vector<double>* se = nullptr) {
    std::string out = "# kind = " + std::string(limit_kind_name(L.kind)) + " s = " + fmt(L.s) +
                      " sigma = " + fmt(L.sigma) + " k = " + fmt(L.k) + "\n#";
    const char* axes[3] = {" x", " y", " z"};
    for (int a = 0; a < d; ++a) out += axes[a];
    out += se ? " value se\n" : " value\n";
    for (std::size_t i = 0; i < L.points.size(); ++i) {
        for (int a = 0; a < d; ++a) out += fmt(L.points[i][a]) + " ";
        out += fmt(L.values[i]);
        if (se) out += " " + fmt((*se)[i]);
        out += "\n";
    }
    return out;
}

} // namespace stochsrc
