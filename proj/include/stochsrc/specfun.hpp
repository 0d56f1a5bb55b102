#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"

namespace stochsrc {

using cplx = std::complex<double>;

namespace hankel_regions {
/// |z| below this uses the ascending power series.
inline constexpr double series_max = 2.5;
/// |z| at or above this uses the large-argument expansion; in between, Steed's
/// continued fraction for K_0, K_1 at w = -iz.
inline constexpr double asymptotic_min = 25.0;
/// Beyond this modulus the result is reported as unsupported.
inline constexpr double modulus_max = 1.0e7;
/// e^{iz} underflows beyond this imaginary part.
inline constexpr double imag_max = 700.0;
} // namespace hankel_regions

inline double gamma_real(double x) {
    if (!std::isfinite(x)) throw DomainError("gamma_real: non-finite argument");
    if (x <= 0.0 && x == std::nearbyint(x))
        throw DomainError("gamma_real: pole at nonpositive integer " + std::to_string(x));
    if (x < 0.5) {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        const double s = std::sin(std::numbers::pi * x);
        return std::numbers::pi / (s * std::tgamma(1.0 - x));
    }
    return std::tgamma(x);
}

namespace detail {

inline void check_hankel_arg(int nu, cplx z) {
    if (nu != 0 && nu != 1) throw DomainError("hankel1: only orders 0 and 1 are implemented");
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw NumericalError("hankel1: non-finite argument");
    if (z == cplx(0.0, 0.0)) throw DomainError("hankel1: z = 0");
    if (z.imag() < 0.0) throw DomainError("hankel1: Im z < 0 is outside the supported half plane");
    if (std::abs(z) > hankel_regions::modulus_max || z.imag() > hankel_regions::imag_max)
        throw NumericalError("hankel1: |z| or Im z outside the validated region");
}

// Ascending series for J0, J1, Y0, Y1.
inline std::array<cplx, 2> hankel_series(cplx z) {
    constexpr double euler = 0.57721566490153286060651209;
    const cplx q = -z * z / 4.0;
    cplx t0 = 1.0, t1 = 1.0;          // q^k/(k!)^2 and q^k/(k!(k+1)!)
    cplx j0 = 1.0, j1s = 1.0;
    cplx y0s = 0.0;
    double hk = 0.0;                  // harmonic number H_k
    cplx y1s = 1.0 - 2.0 * euler;     // psi(k+1)+psi(k+2) weighted sum
    for (int k = 1; k < 200; ++k) {
        t0 *= q / double(k * k);
        t1 *= q / double(k * (k + 1));
        hk += 1.0 / k;
        j0 += t0;
        j1s += t1;
        y0s += hk * t0;
        y1s += (-2.0 * euler + 2.0 * hk + 1.0 / (k + 1)) * t1;
        if (std::abs(t0) < 1e-18 * std::abs(j0) && std::abs(t1) < 1e-18 * std::abs(j1s) && k > 2) break;
    }
    const cplx half = z / 2.0;
    const cplx lg = std::log(half);
    const cplx j1 = half * j1s;
    constexpr double pi = std::numbers::pi;
    const cplx y0 = (2.0 / pi) * (lg + euler) * j0 - (2.0 / pi) * y0s;
    const cplx y1 = -2.0 / (pi * z) + (2.0 / pi) * lg * j1 - (1.0 / pi) * half * y1s;
    const cplx I(0.0, 1.0);
    return {j0 + I * y0, j1 + I * y1};
}

// Steed's CF2 with Temme's normalization for K_0(w), K_1(w), Re w >= 0, |w| >~ 2.
inline std::array<cplx, 2> bessel_k01_cf2(cplx x) {
    cplx b = 2.0 * (1.0 + x);
    cplx d = 1.0 / b;
    cplx h = d, delh = d;
    cplx q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;
    cplx q = a1, c = a1;
    double a = -a1;
    cplx s = 1.0 + q * delh;
    int i = 2;
    for (; i < 5000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / double(i);
        const cplx qn = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qn;
        q += c * qn;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const cplx dels = q * delh;
        s += dels;
        if (std::abs(dels) < 1e-17 * std::abs(s) && std::abs(delh) < 1e-17 * std::abs(h)) break;
    }
    if (i >= 5000) throw NumericalError("hankel1: continued fraction did not converge");
    h *= a1;
    const cplx k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    const cplx k1 = k0 * (x + 0.5 - h) / x;
    return {k0, k1};
}

inline cplx hankel_asymptotic(int nu, cplx z) {
    const double mu = 4.0 * nu * nu;
    const cplx I(0.0, 1.0);
    const cplx inv = 1.0 / z;
    cplx term = 1.0, sum = 1.0;
    double prev = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= I * (mu - odd * odd) / (8.0 * k) * inv;
        const double mag = std::abs(term);
        if (mag > prev) break;
        sum += term;
        prev = mag;
        if (mag < 1e-17) break;
    }
    const double phase = -(nu * 0.5 + 0.25) * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * z)) * std::exp(I * (z + phase)) * sum;
}

} // namespace detail

/// Hankel function of the first kind, orders 0 and 1, on the closed upper half plane.
inline cplx hankel1(int nu, cplx z) {
    detail::check_hankel_arg(nu, z);
    const double r = std::abs(z);
    if (r < hankel_regions::series_max) return detail::hankel_series(z)[nu];
    if (r >= hankel_regions::asymptotic_min) return detail::hankel_asymptotic(nu, z);
    const cplx I(0.0, 1.0);
    const auto k = detail::bessel_k01_cf2(-I * z);
    // H0 = (2/(i pi)) K0(-iz), H1 = -(2/pi) K1(-iz)
    if (nu == 0) return 2.0 / (I * std::numbers::pi) * k[0];
    return -2.0 / std::numbers::pi * k[1];
}

/// Both orders in one call; shares the expensive branch.
inline std::array<cplx, 2> hankel1_01(cplx z) {
    detail::check_hankel_arg(0, z);
    const double r = std::abs(z);
    if (r < hankel_regions::series_max) return detail::hankel_series(z);
    if (r >= hankel_regions::asymptotic_min)
        return {detail::hankel_asymptotic(0, z), detail::hankel_asymptotic(1, z)};
    const cplx I(0.0, 1.0);
    const auto k = detail::bessel_k01_cf2(-I * z);
    return {2.0 / (I * std::numbers::pi) * k[0], -2.0 / std::numbers::pi * k[1]};
}

struct HankelCoefficients {
    int order = 0;
    std::vector<cplx> coeffs;  // a_0..a_N
};

/// a_j = sqrt(2/pi) e^{-i pi/4} (-i/8)^j prod_{l<=j}(2l-1)^2 / j!
inline HankelCoefficients hankel_coefficients(int N) {
    if (N < 0) throw DomainError("hankel_coefficients: negative order");
    HankelCoefficients hc;
    hc.order = N;
    const cplx I(0.0, 1.0);
    cplx a = std::sqrt(2.0 / std::numbers::pi) * std::exp(-I * std::numbers::pi / 4.0);
    hc.coeffs.push_back(a);
    for (int j = 1; j <= N; ++j) {
        const double odd = 2.0 * j - 1.0;
        a *= -I / 8.0 * odd * odd / double(j);
        hc.coeffs.push_back(a);
    }
    return hc;
}

/// Partial sum sum_{j<=N} a_j z^{-(j+1/2)} e^{iz}, principal branch of the power.
inline cplx hankel1_truncated(int N, cplx z) {
    if (N < 0 || N > 2) throw DomainError("hankel1_truncated: N must be in 0..2");
    if (z == cplx(0.0, 0.0)) throw DomainError("hankel1_truncated: z = 0");
    const auto hc = hankel_coefficients(N);
    const cplx I(0.0, 1.0);
    const cplx e = std::exp(I * z);
    const cplx rs = 1.0 / std::sqrt(z);
    const cplx inv = 1.0 / z;
    cplx p = rs, sum = 0.0;
    for (int j = 0; j <= N; ++j) {
        sum += hc.coeffs[j] * p;
        p *= inv;
    }
    return sum * e;
}

} // namespace stochsrc
