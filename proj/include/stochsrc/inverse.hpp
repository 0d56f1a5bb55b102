#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "fft.hpp"
#include "forward.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "statest.hpp"

namespace stochsrc {

/// Strength mu on a grid together with the mask of cells where it may be nonzero.
struct StrengthFunction {
    FieldSample mu;
    std::vector<std::uint8_t> mask;
};

inline std::vector<std::uint8_t> mask_from_support(const FieldSample& f) {
    std::vector<std::uint8_t> m(f.values.size(), 0);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = f.values[j] != 0.0;
    return m;
}

/// Cells whose centres lie in the ball |x - c| < radius.
inline std::vector<std::uint8_t> ball_mask(const GridSpec& g, const Point& c, double radius) {
    std::vector<std::uint8_t> m(g.size(), 0);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = distance(g.center(j), c, g.d) < radius;
    return m;
}

/// Dense map from mask cells to limit data: A_ij = weight(|x_i - y_j|) h^d.
struct ForwardMap {
    GridSpec grid;
    std::vector<std::size_t> columns;
    Eigen::MatrixXd A;

    Eigen::VectorXd restrict(const FieldSample& mu) const {
        Eigen::VectorXd v(columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) v[Eigen::Index(c)] = mu.values[columns[c]];
        return v;
    }
    FieldSample expand(const Eigen::VectorXd& v) const {
        FieldSample f(grid);
        for (std::size_t c = 0; c < columns.size(); ++c) f.values[columns[c]] = v[Eigen::Index(c)];
        return f;
    }
    Eigen::VectorXd apply(const FieldSample& mu) const { return A * restrict(mu); }
};

inline ForwardMap assemble_forward_map(const GridSpec& g, const std::vector<std::uint8_t>& mask,
                                       const MeasurementSet& m, double sigma, int d, int threads = 1) {
    validate_grid(g);
    if (d != g.d) throw ValidationError("assemble_forward_map: dimension mismatch");
    if (mask.size() != g.size()) throw ValidationError("assemble_forward_map: mask size does not match grid");
    if (!(sigma >= 0.0)) throw ValidationError("assemble_forward_map: sigma must be nonnegative");
    FieldSample indicator(g);
    for (std::size_t j = 0; j < mask.size(); ++j) indicator.values[j] = mask[j] ? 1.0 : 0.0;
    check_separation(indicator, m);
    ForwardMap fm;
    fm.grid = g;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) fm.columns.push_back(j);
    fm.A.resize(Eigen::Index(m.points.size()), Eigen::Index(fm.columns.size()));
    const double hd = g.cell_volume();
    parallel_for(m.points.size(), threads, [&](std::size_t, std::size_t i) {
        for (std::size_t c = 0; c < fm.columns.size(); ++c) {
            const double r = distance(m.points[i], g.center(fm.columns[c]), d);
            fm.A(Eigen::Index(i), Eigen::Index(c)) = limit_weight(d, sigma, r) * hd;
        }
    });
    return fm;
}

/// Tikhonov solves through the SVD, so many regularization parameters cost one factorization.
class TikhonovSolver {
public:
    explicit TikhonovSolver(const Eigen::MatrixXd& A) : A_(A), svd_(A, Eigen::ComputeThinU | Eigen::ComputeThinV) {}

    const Eigen::VectorXd& singular_values() const { return svd_.singularValues(); }
    double norm_squared() const {
        const auto& s = svd_.singularValues();
        return s.size() ? s[0] * s[0] : 0.0;
    }

    /// argmin |A x - b|^2 + lambda |x|^2
    Eigen::VectorXd solve(const Eigen::VectorXd& b, double lambda) const {
        const auto& s = svd_.singularValues();
        const Eigen::VectorXd c = svd_.matrixU().transpose() * b;
        Eigen::VectorXd f(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) f[i] = s[i] / (s[i] * s[i] + lambda) * c[i];
        return svd_.matrixV() * f;
    }

    double residual(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const { return (A_ * x - b).norm(); }

    /// (s_max^2 + lambda) / (s_min^2 + lambda)
    double condition_estimate(double lambda) const {
        const auto& s = svd_.singularValues();
        if (s.size() == 0) return 1.0;
        const double smin = A_.rows() >= A_.cols() ? s[s.size() - 1] : 0.0;
        return (s[0] * s[0] + lambda) / (smin * smin + lambda);
    }

private:
    Eigen::MatrixXd A_;
    Eigen::BDCSVD<Eigen::MatrixXd> svd_;
};

struct TikhonovResult {
    StrengthFunction mu;
    Eigen::VectorXd raw;
    Eigen::VectorXd projected;
    double lambda = 0.0;
    double residual_raw = 0.0;
    double residual_projected = 0.0;
    double penalty = 0.0;  // |raw|
    double condition_estimate = 0.0;
    bool ill_conditioned = false;
};

inline constexpr double default_condition_threshold = 1e12;

inline TikhonovResult reconstruct_tikhonov(const ForwardMap& fm, const TikhonovSolver& solver,
                                           const Eigen::VectorXd& data, double lambda, bool nonneg,
                                           double cond_threshold = default_condition_threshold) {
    if (fm.A.rows() < 1) throw ValidationError("reconstruct_tikhonov: no data rows");
    if (data.size() != fm.A.rows()) throw ValidationError("reconstruct_tikhonov: data length does not match the map");
    if (!(lambda > 0.0)) throw ValidationError("reconstruct_tikhonov: lambda must be positive");
    TikhonovResult r;
    r.lambda = lambda;
    r.raw = solver.solve(data, lambda);
    r.projected = nonneg ? Eigen::VectorXd(r.raw.cwiseMax(0.0)) : r.raw;
    r.residual_raw = solver.residual(r.raw, data);
    r.residual_projected = solver.residual(r.projected, data);
    r.penalty = r.raw.norm();
    r.condition_estimate = solver.condition_estimate(lambda);
    r.ill_conditioned = r.condition_estimate > cond_threshold;
    r.mu.mu = fm.expand(r.projected);
    r.mu.mask.assign(fm.grid.size(), 0);
    for (auto c : fm.columns) r.mu.mask[c] = 1;
    return r;
}

inline TikhonovResult reconstruct_tikhonov(const ForwardMap& fm, const Eigen::VectorXd& data, double lambda,
                                           bool nonneg, double cond_threshold = default_condition_threshold) {
    const TikhonovSolver solver(fm.A);
    return reconstruct_tikhonov(fm, solver, data, lambda, nonneg, cond_threshold);
}

/// Largest lambda on a log grid spanning rel_lo..rel_hi times |A|^2 whose raw residual is <= tau * delta.
/// Falls back to the smallest grid value when none qualifies.
inline double discrepancy_lambda(const TikhonovSolver& solver, const Eigen::VectorXd& data, double delta,
                                 double tau = 1.0, double rel_lo = 1e-20, double rel_hi = 1.0,
                                 std::size_t count = 401) {
    if (!(delta >= 0.0)) throw ValidationError("discrepancy_lambda: delta must be nonnegative");
    const double scale = solver.norm_squared();
    if (!(scale > 0.0)) throw NumericalError("discrepancy_lambda: zero operator");
    const double llo = std::log10(rel_lo), lhi = std::log10(rel_hi);
    for (std::size_t i = 0; i < count; ++i) {
        const double lam = scale * std::pow(10.0, lhi - (lhi - llo) * double(i) / double(count - 1));
        if (solver.residual(solver.solve(data, lam), data) <= tau * delta) return lam;
    }
    return scale * rel_lo;
}

inline double relative_l2_error(const FieldSample& estimate, const FieldSample& truth) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < truth.values.size(); ++j) {
        const double e = estimate.values[j] - truth.values[j];
        num += e * e;
        den += truth.values[j] * truth.values[j];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Multilinear interpolation of cell-centred values; zero outside the grid.
inline double interpolate(const FieldSample& f, const Point& x) {
    const auto& g = f.grid;
    const double h = g.h();
    long base[3] = {0, 0, 0};
    double frac[3] = {0, 0, 0};
    for (int a = 0; a < g.d; ++a) {
        const double u = (x[a] - g.origin[a]) / h - 0.5;
        const double fl = std::floor(u);
        base[a] = long(fl);
        frac[a] = u - fl;
    }
    double acc = 0.0;
    const int corners = 1 << g.d;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::array<std::size_t, 3> ijk{0, 0, 0};
        bool inside = true;
        for (int a = 0; a < g.d; ++a) {
            const int bit = (c >> a) & 1;
            const long idx = base[a] + bit;
            if (idx < 0 || idx >= long(g.n)) {
                inside = false;
                break;
            }
            ijk[a] = std::size_t(idx);
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        if (inside && w != 0.0) acc += w * f.values[g.flatten(ijk)];
    }
    return acc;
}

struct SphericalMeans {
    Point center{0, 0, 0};
    int d = 2;
    std::vector<double> radii;
    std::vector<double> values;
    double r1 = 0.0, r2 = 0.0;  // distance range of the support from the centre
};

namespace detail {
/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * double(j) - 1.0) * z * p2 - (double(j) - 1.0) * p3) / double(j);
            }
            pp = double(n) * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}
} // namespace detail

/// S(x, r): integral of mu over the circle (2D) or sphere (3D) of radius r about x.
inline SphericalMeans spherical_means(const FieldSample& mu, const Point& x, const std::vector<double>& radii) {
    validate_grid(mu.grid);
    const auto& g = mu.grid;
    SphericalMeans S;
    S.center = x;
    S.d = g.d;
    S.radii = radii;
    S.values.assign(radii.size(), 0.0);
    const double h = g.h();
    const double half_diag = 0.5 * h * std::sqrt(double(g.d));
    bool first = true;
    for (std::size_t j = 0; j < mu.values.size(); ++j) {
        if (mu.values[j] == 0.0) continue;
        const double r = distance(g.center(j), x, g.d);
        const double lo = std::max(0.0, r - 2.0 * half_diag), hi = r + 2.0 * half_diag;
        S.r1 = first ? lo : std::min(S.r1, lo);
        S.r2 = first ? hi : std::max(S.r2, hi);
        first = false;
    }
    if (first) return S;
    for (std::size_t q = 0; q < radii.size(); ++q) {
        const double r = radii[q];
        if (!(r > 0.0)) throw ValidationError("spherical_means: radii must be positive");
        if (r < S.r1 || r > S.r2) continue;
        double acc = 0.0;
        if (g.d == 2) {
            const std::size_t nt = std::max<std::size_t>(64, std::size_t(std::ceil(8.0 * std::numbers::pi * r / h)));
            for (std::size_t t = 0; t < nt; ++t) {
                const double th = 2.0 * std::numbers::pi * double(t) / double(nt);
                acc += interpolate(mu, {x[0] + r * std::cos(th), x[1] + r * std::sin(th), 0.0});
            }
            acc *= 2.0 * std::numbers::pi * r / double(nt);
        } else {
            const std::size_t np = std::max<std::size_t>(32, std::size_t(std::ceil(2.0 * std::numbers::pi * r / h)));
            const std::size_t nt = 2 * np;
            std::vector<double> cx, cw;
            detail::gauss_legendre(np, cx, cw);
            for (std::size_t p = 0; p < np; ++p) {
                const double ct = cx[p], st = std::sqrt(1.0 - ct * ct);
                double ring = 0.0;
                for (std::size_t t = 0; t < nt; ++t) {
                    const double ph = 2.0 * std::numbers::pi * double(t) / double(nt);
                    ring += interpolate(mu, {x[0] + r * st * std::cos(ph), x[1] + r * st * std::sin(ph), x[2] + r * ct});
                }
                acc += cw[p] * ring * 2.0 * std::numbers::pi / double(nt);
            }
            acc *= r * r;
        }
        S.values[q] = acc;
    }
    return S;
}

/// Uniform radii covering [r1, r2] of the support seen from x.
inline std::vector<double> radii_for(const FieldSample& mu, const Point& x, std::size_t count) {
    const auto probe = spherical_means(mu, x, {});
    std::vector<double> r(count);
    const double lo = std::max(probe.r1, 1e-12);
    for (std::size_t i = 0; i < count; ++i) r[i] = lo + (probe.r2 - lo) * double(i) / double(count - 1);
    return r;
}

/// Trapezoidal integral of S(x, r) w(r) dr over the stored radii.
template <class Weight>
double radial_integral(const SphericalMeans& S, Weight&& w) {
    double acc = 0.0;
    for (std::size_t i = 1; i < S.radii.size(); ++i) {
        const double dr = S.radii[i] - S.radii[i - 1];
        acc += 0.5 * dr * (S.values[i] * w(S.radii[i]) + S.values[i - 1] * w(S.radii[i - 1]));
    }
    return acc;
}

/// (g * mu)(x) = int e^{-r^2/2} S(x, r) dr with g(x) = e^{-|x|^2/2}.
inline double gaussian_convolve_means(const SphericalMeans& S) {
    return radial_integral(S, [](double r) { return std::exp(-r * r / 2.0); });
}

/// Brute-force (g * mu)(x) by midpoint quadrature.
inline double gaussian_convolve_direct(const FieldSample& mu, const Point& x) {
    const auto& g = mu.grid;
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.values.size(); ++j) {
        if (mu.values[j] == 0.0) continue;
        const double r = distance(g.center(j), x, g.d);
        acc += std::exp(-r * r / 2.0) * mu.values[j];
    }
    return acc * g.cell_volume();
}

/// Brute-force g * mu at every cell centre.
inline FieldSample gaussian_convolve_grid(const FieldSample& mu, int threads = 1) {
    FieldSample out(mu.grid);
    parallel_for(out.values.size(), threads,
                 [&](std::size_t, std::size_t j) { out.values[j] = gaussian_convolve_direct(mu, mu.grid.center(j)); });
    return out;
}

/// Frequency radius where the Gaussian division factor e^{|xi|^2/2} reaches `factor`.
inline double default_deconvolution_cutoff(double factor = 1e6) { return std::sqrt(2.0 * std::log(factor)); }

/// Divides the DFT of g * mu by the DFT of the sampled, periodized kernel g, keeps |xi| <= cutoff,
/// transforms back and clips negatives.
inline StrengthFunction gaussian_deconvolve(const FieldSample& conv, double cutoff) {
    if (!(cutoff > 0.0)) throw ValidationError("gaussian_deconvolve: cutoff must be positive");
    const auto& g = conv.grid;
    validate_grid(g);
    const std::size_t N = g.size();
    GridFft fc(g), fk(g);
    const double h = g.h();
    for (std::size_t j = 0; j < N; ++j) {
        fc.data()[j] = conv.values[j];
        const auto ijk = g.unflatten(j);
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            const double off = (ijk[a] > g.n / 2 ? double(ijk[a]) - double(g.n) : double(ijk[a])) * h;
            r2 += off * off;
        }
        fk.data()[j] = std::exp(-r2 / 2.0) * g.cell_volume();
    }
    fc.forward();
    fk.forward();
    const auto xi = frequency_modulus(g);
    for (std::size_t j = 0; j < N; ++j) {
        const cplx gk = fk.data()[j];
        fc.data()[j] = (xi[j] <= cutoff && std::abs(gk) > 0.0) ? fc.data()[j] / gk : cplx(0.0, 0.0);
    }
    fc.backward();
    StrengthFunction out;
    out.mu = FieldSample(g);
    out.mask.assign(N, 1);
    for (std::size_t j = 0; j < N; ++j) out.mu.values[j] = std::max(0.0, fc.data()[j].real() / double(N));
    return out;
}

} // namespace stochsrc
