#ifndef LOSSLAB_TESTS_SUPPORT_HPP
#define LOSSLAB_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "losslab/cutoff.hpp"
#include "losslab/speeds.hpp"

namespace losslab::testing {

inline const CutoffFunction& shared_cutoff() {
    static const CutoffFunction theta;
    return theta;
}

/// Independent central finite difference, step scaled to the argument.
inline double central_diff(const std::function<double(double)>& f, double t,
                           double rel_step = 1e-6) {
    const double h = rel_step * t;
    return (f(t + h) - f(t - h)) / (2.0 * h);
}

/// Brute-force oracle for the class distances: evaluate the defining
/// expression on a dense grid, independent of the library's implementation.
inline double brute_force_ps1(const PropagationSpeed& c1,
                              const PropagationSpeed& c2,
                              const std::function<double(double)>& omega,
                              const std::vector<double>& grid) {
    double s0 = 0.0, s1 = 0.0;
    for (double t : grid) {
        s0 = std::max(s0, std::abs(c1.value(t) - c2.value(t)));
        s1 = std::max(s1, t * t / omega(t) * std::abs(c1.d1(t) - c2.d1(t)));
    }
    return s0 + s1;
}

inline std::vector<double> dense_log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) /
                                static_cast<double>(n - 1));
    }
    return g;
}

}  // namespace losslab::testing

#endif
