#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "randfield.hpp"
#include "specfun.hpp"

namespace stochsrc {

struct WavenumberState {
    double k = 1.0;
    double sigma = 0.0;
    double kappa_r = 1.0;
    double kappa_i = 0.0;
    cplx kappa() const { return {kappa_r, kappa_i}; }
};

/// kappa^2 = k^2 + i k sigma with kappa_r, kappa_i >= 0.
inline WavenumberState wavenumber_split(double k, double sigma) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("wavenumber k must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("attenuation sigma must be nonnegative");
    WavenumberState w;
    w.k = k;
    w.sigma = sigma;
    const double k2 = k * k;
    const double q = std::sqrt(k2 * k2 + k2 * sigma * sigma);
    w.kappa_r = std::sqrt((q + k2) / 2.0);
    // (q - k^2)/2 = k^2 sigma^2 / (2 (q + k^2)) avoids cancellation at large k
    w.kappa_i = std::sqrt(k2 * sigma * sigma / (2.0 * (q + k2)));
    return w;
}

struct MeasurementSet {
    int d = 2;
    std::vector<Point> points;
    double r0 = 0.0;
    std::vector<cplx> values;
};

/// Fundamental solution of Delta + kappa^2: (i/4) H0(kappa r) in 2D, e^{i kappa r}/(4 pi r) in 3D.
inline cplx green_r(int d, cplx kappa, double r) {
    if (!(r > 0.0)) throw DomainError("green: x = y is a singularity");
    const cplx I(0.0, 1.0);
    if (d == 2) return I / 4.0 * hankel1(0, kappa * r);
    if (d == 3) return std::exp(I * kappa * r) / (4.0 * std::numbers::pi * r);
    throw ValidationError("green: d must be 2 or 3");
}

inline cplx green(int d, cplx kappa, const Point& x, const Point& y) { return green_r(d, kappa, distance(x, y, d)); }

inline cplx green_truncated_r(int N, cplx kappa, double r) {
    if (!(r > 0.0)) throw DomainError("green_truncated: x = y is a singularity");
    return cplx(0.0, 0.25) * hankel1_truncated(N, kappa * r);
}

/// 2D only: (i/4) H_{0,N}(kappa |x - y|).
inline cplx green_truncated(int N, cplx kappa, const Point& x, const Point& y) {
    return green_truncated_r(N, kappa, distance(x, y, 2));
}

struct ForwardOptions {
    /// Largest admissible kappa_r h; pi/5 is ten points per wavelength.
    double max_kh = std::numbers::pi / 5.0;
    /// When false a resolution violation is reported through `warnings` instead of thrown.
    bool resolution_is_error = true;
    int threads = 1;
    std::vector<std::string>* warnings = nullptr;
};

inline void check_resolution(const GridSpec& g, const WavenumberState& w, const ForwardOptions& opt) {
    const double kh = w.kappa_r * g.h();
    if (kh > opt.max_kh * (1.0 + 1e-12)) {
        const std::string msg = "resolution violation: kappa_r*h = " + fmt(kh) + " exceeds " + fmt(opt.max_kh) +
                                " (k = " + fmt(w.k) + ", h = " + fmt(g.h()) + ")";
        if (opt.resolution_is_error) throw ValidationError(msg);
        if (opt.warnings) opt.warnings->push_back(msg);
    }
}

/// Every point must be at distance >= r0 > 0 from the bounding box of the support.
inline void check_separation(const FieldSample& support_field, const MeasurementSet& m) {
    if (m.d != support_field.grid.d) throw ValidationError("measurement dimension does not match the grid");
    if (!(m.r0 > 0.0)) throw ValidationError("measurement.r0 must be positive");
    const Box b = support_box(support_field);
    if (b.empty) return;
    for (std::size_t i = 0; i < m.points.size(); ++i) {
        const double dist = b.distance_to(m.points[i], m.d);
        if (dist < m.r0)
            throw ValidationError("separation violation: point " + std::to_string(i) + " is at distance " +
                                  fmt(dist) + " from the source support, below r0 = " + fmt(m.r0));
    }
}

/// Green-function rows Phi(x_i, y_j) for the support cells y_j, reusable across realizations.
struct KernelRows {
    std::vector<std::size_t> cells;
    std::vector<std::vector<cplx>> rows;  // [point][cell]
    double cell_volume = 0.0;

    /// u(x_i) = -sum_j Phi(x_i, y_j) f_j h^d
    cplx apply(std::size_t i, const std::vector<double>& f) const {
        const auto& row = rows[i];
        double re = 0.0, im = 0.0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double v = f[cells[c]];
            re += row[c].real() * v;
            im += row[c].imag() * v;
        }
        return -cell_volume * cplx(re, im);
    }
};

/// truncation < 0 selects the full Green function; 0..2 the truncated 2D expansion.
inline KernelRows build_kernel_rows(const GridSpec& g, std::vector<std::size_t> cells, cplx kappa,
                                    const std::vector<Point>& points, int truncation = -1, int threads = 1) {
    if (truncation >= 0 && g.d != 2) throw ValidationError("truncated Green functions are 2D only");
    KernelRows kr;
    kr.cells = std::move(cells);
    kr.cell_volume = g.cell_volume();
    kr.rows.resize(points.size());
    std::vector<Point> centers(kr.cells.size());
    for (std::size_t c = 0; c < kr.cells.size(); ++c) centers[c] = g.center(kr.cells[c]);
    parallel_for(points.size(), threads, [&](std::size_t, std::size_t i) {
        auto& row = kr.rows[i];
        row.resize(kr.cells.size());
        for (std::size_t c = 0; c < kr.cells.size(); ++c) {
            const double r = distance(points[i], centers[c], g.d);
            row[c] = truncation < 0 ? green_r(g.d, kappa, r) : green_truncated_r(truncation, kappa, r);
        }
    });
    return kr;
}

namespace detail {
inline MeasurementSet solve_forward_impl(const FieldSample& f, const WavenumberState& w, const MeasurementSet& m,
                                         int truncation, const ForwardOptions& opt) {
    validate_grid(f.grid);
    check_separation(f, m);
    check_resolution(f.grid, w, opt);
    MeasurementSet out = m;
    out.values.assign(m.points.size(), cplx(0.0, 0.0));
    const auto cells = support_indices(f);
    if (cells.empty()) return out;
    const KernelRows kr = build_kernel_rows(f.grid, cells, w.kappa(), m.points, truncation, opt.threads);
    for (std::size_t i = 0; i < m.points.size(); ++i) out.values[i] = kr.apply(i, f.values);
    return out;
}
} // namespace detail

inline MeasurementSet solve_forward(const FieldSample& f, const WavenumberState& w, const MeasurementSet& m,
                                    const ForwardOptions& opt = {}) {
    return detail::solve_forward_impl(f, w, m, -1, opt);
}

inline MeasurementSet solve_forward(const SourceRealization& f, const WavenumberState& w, const MeasurementSet& m,
                                    const ForwardOptions& opt = {}) {
    return solve_forward(f.f, w, m, opt);
}

inline MeasurementSet solve_forward_truncated(int N, const FieldSample& f, const WavenumberState& w,
                                              const MeasurementSet& m, const ForwardOptions& opt = {}) {
    if (N < 0 || N > 2) throw ValidationError("truncation order must be in 0..2");
    return detail::solve_forward_impl(f, w, m, N, opt);
}

/// Column table: coordinates, Re u, Im u; header names k, sigma, s, seed.
inline std::string format_measurement_table(const MeasurementSet& m, const WavenumberState& w, double s,
                                            std::uint64_t seed) {
    std::string out = "# k = " + fmt(w.k) + " sigma = " + fmt(w.sigma) + " s = " + fmt(s) +
                      " seed = " + std::to_string(seed) + "\n#";
    const char* axes[3] = {" x", " y", " z"};
    for (int a = 0; a < m.d; ++a) out += axes[a];
    out += " re_u im_u\n";
    for (std::size_t i = 0; i < m.points.size(); ++i) {
        for (int a = 0; a < m.d; ++a) out += fmt(m.points[i][a]) + " ";
        const cplx v = i < m.values.size() ? m.values[i] : cplx(0.0, 0.0);
        out += fmt(v.real()) + " " + fmt(v.imag()) + "\n";
    }
    return out;
}

/// Points on a circle (d = 2) or a Fibonacci sphere (d = 3) of the given radius.
inline std::vector<Point> ring_points(int d, const Point& center, double radius, std::size_t count,
                                      double phase = 0.0) {
    std::vector<Point> pts(count);
    const double golden = std::numbers::pi * (1.0 + std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
        Point p = center;
        if (d == 2) {
            const double t = phase + 2.0 * std::numbers::pi * double(i) / double(count);
            p[0] += radius * std::cos(t);
            p[1] += radius * std::sin(t);
        } else {
            const double u = (double(i) + 0.5) / double(count);
            const double polar = std::acos(1.0 - 2.0 * u);
            const double az = golden * (double(i) + 0.5) + phase;
            p[0] += radius * std::cos(az) * std::sin(polar);
            p[1] += radius * std::sin(az) * std::sin(polar);
            p[2] += radius * std::cos(polar);
        }
        pts[i] = p;
    }
    return pts;
}

} // namespace stochsrc
