#pragma once

// Independent high-precision reference values for verification. Requires Boost and MPFR.

#include <array>
#include <complex>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/mpfr.hpp>

namespace stochsrc::oracle {

using mp = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<160>,
                                         boost::multiprecision::et_off>;

struct mpc {
    mp re, im;
};

inline mpc operator+(const mpc& a, const mpc& b) { return {a.re + b.re, a.im + b.im}; }
inline mpc operator-(const mpc& a, const mpc& b) { return {a.re - b.re, a.im - b.im}; }
inline mpc operator*(const mpc& a, const mpc& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline mpc operator*(const mpc& a, const mp& s) { return {a.re * s, a.im * s}; }
inline mpc operator/(const mpc& a, const mpc& b) {
    const mp den = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}
inline mp magnitude(const mpc& a) { return sqrt(a.re * a.re + a.im * a.im); }
inline mpc log_principal(const mpc& a) { return {log(magnitude(a)), atan2(a.im, a.re)}; }

/// H0 and H1 of the first kind from the ascending series for J and Y, in 160-digit arithmetic.
inline std::array<std::complex<double>, 2> hankel01_series(std::complex<double> zd) {
    const mpc z{mp(zd.real()), mp(zd.imag())};
    const mp pi = boost::math::constants::pi<mp>();
    const mp euler = boost::math::constants::euler<mp>();
    const mpc q = (z * z) * mp(-0.25);
    mpc t0{1, 0}, t1{1, 0};
    mpc j0{1, 0}, j1s{1, 0}, y0s{0, 0};
    mpc y1s{mp(1) - 2 * euler, mp(0)};
    mp hk = 0;
    const mp tiny = mp("1e-150");
    mp peak = 1;
    for (int k = 1; k < 4000; ++k) {
        t0 = t0 * q * (mp(1) / (mp(k) * k));
        t1 = t1 * q * (mp(1) / (mp(k) * (k + 1)));
        hk += mp(1) / k;
        j0 = j0 + t0;
        j1s = j1s + t1;
        y0s = y0s + t0 * hk;
        y1s = y1s + t1 * (2 * hk + mp(1) / (k + 1) - 2 * euler);
        const mp m0 = magnitude(t0);
        if (m0 > peak) peak = m0;
        if (k > 4 && m0 < tiny * peak && magnitude(t1) < tiny * peak) break;
    }
    const mpc half = z * mp(0.5);
    const mpc lg = log_principal(half);
    const mpc j1 = half * j1s;
    const mpc y0 = (lg + mpc{euler, 0}) * j0 * (2 / pi) - y0s * (2 / pi);
    const mpc y1 = mpc{-2 / pi, 0} / z + lg * j1 * (2 / pi) - half * y1s * (1 / pi);
    const mpc h0{j0.re - y0.im, j0.im + y0.re};
    const mpc h1{j1.re - y1.im, j1.im + y1.re};
    return {std::complex<double>(double(h0.re), double(h0.im)), std::complex<double>(double(h1.re), double(h1.im))};
}

inline double gamma(double x) { return double(boost::math::tgamma(mp(x))); }

/// 2^{-2s} pi^{-d/2} Gamma(d/2 - s) / Gamma(s), with s and d exact as given.
inline double kernel_c1(double s, int d) {
    const mp pi = boost::math::constants::pi<mp>();
    const mp S(s);
    const mp half_d = mp(d) / 2;
    return double(pow(mp(2), -2 * S) * pow(pi, -half_d) * boost::math::tgamma(half_d - S) / boost::math::tgamma(S));
}

/// (-1)^{H+1} 2^{-2s+1} pi^{-d/2} / (H! Gamma(s)) for integer H = s - d/2 >= 0.
inline double kernel_c2(double s, int d) {
    const mp pi = boost::math::constants::pi<mp>();
    const mp S(s);
    const int H = int(s - d / 2.0 + 0.5);
    const mp sign = (H % 2 == 0) ? mp(-1) : mp(1);
    return double(sign * pow(mp(2), -2 * S + 1) * pow(pi, -mp(d) / 2) /
                  (boost::math::tgamma(mp(H + 1)) * boost::math::tgamma(S)));
}

} // namespace stochsrc::oracle
