#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "specfun.hpp"

namespace stochsrc {

inline void validate_roughness(double s, int d) {
    if (!std::isfinite(s) || s < 0.0 || s >= d / 2.0 + 1.0)
        throw ValidationError("source.s = " + std::to_string(s) + " outside [0, d/2+1)");
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    std::seed_seq seq{std::uint32_t(seed & 0xffffffffu), std::uint32_t(seed >> 32)};
    return std::mt19937_64(seq);
}

/// |xi|^{-s} on the DFT lattice with the zero mode set to 0.
inline std::vector<double> fgf_multiplier(const GridSpec& g, double s) {
    auto m = frequency_modulus(g);
    for (auto& v : m) v = (v > 0.0) ? std::pow(v, -s) : 0.0;
    return m;
}

/// I.i.d. N(0, 1/h^d) per cell.
inline FieldSample sample_white_noise(const GridSpec& g, std::uint64_t seed) {
    validate_grid(g);
    FieldSample w(g);
    auto rng = make_rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(g.cell_volume()));
    for (auto& v : w.values) v = nd(rng);
    return w;
}

/// Reusable sampler for h^s = (-Delta)^{-s/2} W on one grid. Not thread-safe; use one per worker.
class FgfSampler {
public:
    FgfSampler(const GridSpec& g, double s) : grid_(g), s_(s), fft_(g) {
        validate_grid(g);
        validate_roughness(s, g.d);
        mult_ = fgf_multiplier(g, s);
    }

    const GridSpec& grid() const { return grid_; }
    double s() const { return s_; }

    void sample(std::uint64_t seed, std::vector<double>& out) {
        const std::size_t N = grid_.size();
        auto rng = make_rng(seed);
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(grid_.cell_volume()));
        auto* b = fft_.data();
        for (std::size_t j = 0; j < N; ++j) b[j] = {nd(rng), 0.0};
        fft_.forward();
        for (std::size_t j = 0; j < N; ++j) b[j] *= mult_[j];
        fft_.backward();
        out.resize(N);
        const double inv = 1.0 / double(N);
        for (std::size_t j = 0; j < N; ++j) out[j] = b[j].real() * inv;
    }

    FieldSample sample(std::uint64_t seed) {
        FieldSample f(grid_);
        sample(seed, f.values);
        return f;
    }

private:
    GridSpec grid_;
    double s_;
    GridFft fft_;
    std::vector<double> mult_;
};

inline FieldSample sample_fgf(const GridSpec& g, double s, std::uint64_t seed) {
    FgfSampler sampler(g, s);
    return sampler.sample(seed);
}

/// H = s - d/2 is a nonnegative integer: the kernel carries a logarithm.
inline bool kernel_is_logarithmic(double s, int d) {
    const double H = s - d / 2.0;
    return H >= 0.0 && H == std::nearbyint(H);
}

inline double kernel_constant_c1(double s, int d) {
    if (kernel_is_logarithmic(s, d)) throw DomainError("C1 undefined when s - d/2 is a nonnegative integer");
    if (!(s > 0.0)) throw DomainError("C1 requires s > 0");
    return std::pow(2.0, -2.0 * s) * std::pow(std::numbers::pi, -d / 2.0) * gamma_real(d / 2.0 - s) /
           gamma_real(s);
}

inline double kernel_constant_c2(double s, int d) {
    if (!kernel_is_logarithmic(s, d)) throw DomainError("C2 requires s - d/2 to be a nonnegative integer");
    const int H = int(std::nearbyint(s - d / 2.0));
    const double sign = (H % 2 == 0) ? -1.0 : 1.0;  // (-1)^{H+1}
    return sign * std::pow(2.0, -2.0 * s + 1.0) * std::pow(std::numbers::pi, -d / 2.0) /
           (std::tgamma(H + 1.0) * gamma_real(s));
}

/// Covariance kernel of h^s as a function of r = |x - y|.
inline double kernel_fgf(double s, int d, double r) {
    if (d != 2 && d != 3) throw ValidationError("kernel_fgf: d must be 2 or 3");
    if (s == 0.0) throw DomainError("kernel_fgf: s = 0 is the delta kernel");
    if (!(s > 0.0)) throw DomainError("kernel_fgf: s must be positive");
    if (!(r > 0.0)) throw DomainError("kernel_fgf: r must be positive");
    const double H = s - d / 2.0;
    if (kernel_is_logarithmic(s, d)) return kernel_constant_c2(s, d) * std::pow(r, 2.0 * H) * std::log(r);
    return kernel_constant_c1(s, d) * std::pow(r, 2.0 * H);
}

/// E[<h^s,phi> conj(<h^s,psi>)] for the sampler: (h^d/N) sum_{m != 0} |xi_m|^{-2s} phi^_m conj(psi^_m).
inline std::complex<double> spectral_pairing(const ComplexField& phi, const ComplexField& psi, double s) {
    if (!(phi.grid == psi.grid)) throw ValidationError("spectral_pairing: grid mismatch");
    const auto& g = phi.grid;
    validate_roughness(s, g.d);
    const std::size_t N = g.size();
    GridFft fa(g), fb(g);
    std::copy(phi.values.begin(), phi.values.end(), fa.data());
    std::copy(psi.values.begin(), psi.values.end(), fb.data());
    fa.forward();
    fb.forward();
    const auto m = fgf_multiplier(g, s);
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < N; ++j) acc += m[j] * m[j] * fa.data()[j] * std::conj(fb.data()[j]);
    return acc * (g.cell_volume() / double(N));
}

/// Exact covariance E[<h^s,phi><h^s,psi>] of the sampler for real test functions.
inline double covariance_quadform(const FieldSample& phi, const FieldSample& psi, double s) {
    if (!(phi.grid == psi.grid)) throw ValidationError("covariance_quadform: grid mismatch");
    ComplexField a(phi.grid), b(psi.grid);
    for (std::size_t j = 0; j < a.values.size(); ++j) {
        a.values[j] = phi.values[j];
        b.values[j] = psi.values[j];
    }
    return spectral_pairing(a, b, s).real();
}

/// <f, phi> = sum_j f_j phi_j h^d.
inline double grid_pairing(const std::vector<double>& f, const FieldSample& phi) {
    double acc = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) acc += f[j] * phi.values[j];
    return acc * phi.grid.cell_volume();
}

struct SourceModel {
    GridSpec grid;
    double s = 1.0;
    FieldSample amplitude;  // a >= 0; strength mu = a^2
    std::uint64_t seed = 0;
};

struct SourceRealization {
    GridSpec grid;
    double s = 1.0;
    std::uint64_t seed = 0;
    FieldSample hs;
    FieldSample f;
};

inline void validate_source_model(const SourceModel& m) {
    validate_grid(m.grid);
    validate_roughness(m.s, m.grid.d);
    if (!(m.amplitude.grid == m.grid)) throw ValidationError("source amplitude is not on the source grid");
    for (double v : m.amplitude.values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("source amplitude must be finite and nonnegative");
    check_support_margin(m.amplitude, 2);
}

inline FieldSample strength_of(const SourceModel& m) {
    FieldSample mu(m.grid);
    for (std::size_t j = 0; j < mu.values.size(); ++j) mu.values[j] = m.amplitude.values[j] * m.amplitude.values[j];
    return mu;
}

/// f = a h^s pointwise, reusing a sampler.
inline void realize_source(FgfSampler& sampler, const FieldSample& a, std::uint64_t seed, std::vector<double>& hs,
                           std::vector<double>& f) {
    sampler.sample(seed, hs);
    f.resize(hs.size());
    for (std::size_t j = 0; j < hs.size(); ++j) f[j] = a.values[j] * hs[j];
}

inline SourceRealization build_source(const SourceModel& m) {
    validate_source_model(m);
    FgfSampler sampler(m.grid, m.s);
    SourceRealization r;
    r.grid = m.grid;
    r.s = m.s;
    r.seed = m.seed;
    r.hs = FieldSample(m.grid);
    r.f = FieldSample(m.grid);
    realize_source(sampler, m.amplitude, m.seed, r.hs.values, r.f.values);
    return r;
}

} // namespace stochsrc
