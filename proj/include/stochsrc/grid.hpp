#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace stochsrc {

using Point = std::array<double, 3>;

/// Uniform cell-centred grid on [origin, origin + L]^d, row-major with axis 0 slowest.
struct GridSpec {
    int d = 2;
    std::size_t n = 64;
    double L = 1.0;
    Point origin{0.0, 0.0, 0.0};

    double h() const { return L / double(n); }
    double cell_volume() const { return std::pow(h(), d); }
    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < d; ++a) s *= n;
        return s;
    }
    std::array<std::size_t, 3> unflatten(std::size_t idx) const {
        std::array<std::size_t, 3> ijk{0, 0, 0};
        for (int a = d - 1; a >= 0; --a) {
            ijk[a] = idx % n;
            idx /= n;
        }
        return ijk;
    }
    std::size_t flatten(const std::array<std::size_t, 3>& ijk) const {
        std::size_t idx = 0;
        for (int a = 0; a < d; ++a) idx = idx * n + ijk[a];
        return idx;
    }
    Point center(std::size_t idx) const {
        const auto ijk = unflatten(idx);
        Point p{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) p[a] = origin[a] + (double(ijk[a]) + 0.5) * h();
        return p;
    }
    bool operator==(const GridSpec& o) const {
        return d == o.d && n == o.n && L == o.L && origin == o.origin;
    }

    /// Centred box [-L/2, L/2]^d.
    static GridSpec centered(int d, std::size_t n, double L) {
        GridSpec g;
        g.d = d;
        g.n = n;
        g.L = L;
        for (int a = 0; a < std::min(d, 3); ++a) g.origin[a] = -L / 2.0;
        return g;
    }
};

inline void validate_grid(const GridSpec& g) {
    if (g.d != 2 && g.d != 3) throw ValidationError("grid.d must be 2 or 3");
    if (g.n < 8) throw ValidationError("grid.n must be at least 8");
    if (!(g.L > 0.0) || !std::isfinite(g.L)) throw ValidationError("grid.L must be positive");
    for (int a = 0; a < g.d; ++a)
        if (!std::isfinite(g.origin[a])) throw ValidationError("grid.origin must be finite");
    if (g.d == 2 && g.origin[2] != 0.0) throw ValidationError("grid.origin[2] must be 0 for d = 2");
}

template <class T>
struct GridField {
    GridSpec grid;
    std::vector<T> values;

    GridField() = default;
    explicit GridField(const GridSpec& g) : grid(g), values(g.size(), T{}) {}
    GridField(const GridSpec& g, std::vector<T> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw ValidationError("field size does not match grid");
    }
};

using FieldSample = GridField<double>;
using ComplexField = GridField<std::complex<double>>;

inline double distance(const Point& a, const Point& b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Indices of cells with a nonzero value.
inline std::vector<std::size_t> support_indices(const FieldSample& f) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < f.values.size(); ++j)
        if (f.values[j] != 0.0) idx.push_back(j);
    return idx;
}

/// Axis-aligned box covering the closed cells of the support; empty if the support is empty.
struct Box {
    Point lo{0, 0, 0}, hi{0, 0, 0};
    bool empty = true;

    double distance_to(const Point& p, int d) const {
        double s = 0.0;
        for (int a = 0; a < d; ++a) {
            const double e = std::max({lo[a] - p[a], 0.0, p[a] - hi[a]});
            s += e * e;
        }
        return std::sqrt(s);
    }
};

inline Box support_box(const FieldSample& f) {
    Box b;
    const double hh = f.grid.h() / 2.0;
    for (std::size_t j = 0; j < f.values.size(); ++j) {
        if (f.values[j] == 0.0) continue;
        const Point c = f.grid.center(j);
        for (int a = 0; a < f.grid.d; ++a) {
            if (b.empty) {
                b.lo[a] = c[a] - hh;
                b.hi[a] = c[a] + hh;
            } else {
                b.lo[a] = std::min(b.lo[a], c[a] - hh);
                b.hi[a] = std::max(b.hi[a], c[a] + hh);
            }
        }
        b.empty = false;
    }
    return b;
}

/// Rejects fields whose support reaches within `margin` cells of the box boundary.
inline void check_support_margin(const FieldSample& f, std::size_t margin = 2) {
    const auto& g = f.grid;
    for (std::size_t j = 0; j < f.values.size(); ++j) {
        if (f.values[j] == 0.0) continue;
        const auto ijk = g.unflatten(j);
        for (int a = 0; a < g.d; ++a)
            if (ijk[a] < margin || ijk[a] + margin >= g.n)
                throw ValidationError("source support is closer than " + std::to_string(margin) +
                                      " cells to the grid boundary");
    }
}

/// Truncated Gaussian bump height*exp(-|x-c|^2/(2 w^2)) for |x-c| < radius.
inline FieldSample gaussian_bump(const GridSpec& g, const Point& c, double width, double height,
                                 double radius) {
    if (!(width > 0.0)) throw ValidationError("bump width must be positive");
    if (!(radius > 0.0)) throw ValidationError("bump radius must be positive");
    if (height < 0.0) throw ValidationError("bump height must be nonnegative");
    FieldSample f(g);
    for (std::size_t j = 0; j < f.values.size(); ++j) {
        const double r = distance(g.center(j), c, g.d);
        if (r < radius) f.values[j] = height * std::exp(-r * r / (2.0 * width * width));
    }
    return f;
}

} // namespace stochsrc
