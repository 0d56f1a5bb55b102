#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "grid.hpp"

namespace stochsrc {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// In-place unnormalized complex DFT over a full grid. Owns its buffer; one instance per thread.
/// Plans use FFTW_ESTIMATE so the chosen algorithm, and hence the rounding, is reproducible.
class GridFft {
public:
    explicit GridFft(const GridSpec& g) : n_(g.size()) {
        buf_ = fftw_alloc_complex(n_);
        int dims[3] = {int(g.n), int(g.n), int(g.n)};
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft(g.d, dims, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft(g.d, dims, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    GridFft(const GridFft&) = delete;
    GridFft& operator=(const GridFft&) = delete;
    ~GridFft() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }

    std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buf_); }
    std::size_t size() const { return n_; }
    void forward() { fftw_execute(fwd_); }
    /// Unnormalized inverse; divide by size() for the true inverse.
    void backward() { fftw_execute(bwd_); }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// |xi| on the DFT lattice: xi_a = 2 pi m_a / L, m_a in the symmetric range (m > n/2 maps to m - n).
inline std::vector<double> frequency_modulus(const GridSpec& g) {
    std::vector<double> k1(g.n);
    const double two_pi_over_L = 2.0 * std::numbers::pi / g.L;
    for (std::size_t i = 0; i < g.n; ++i) {
        const long m = (i > g.n / 2) ? long(i) - long(g.n) : long(i);
        k1[i] = two_pi_over_L * double(m);
    }
    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto ijk = g.unflatten(j);
        double s = 0.0;
        for (int a = 0; a < g.d; ++a) s += k1[ijk[a]] * k1[ijk[a]];
        out[j] = std::sqrt(s);
    }
    return out;
}

} // namespace stochsrc
