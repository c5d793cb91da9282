#ifndef LOSSLAB_QUADRATURE_HPP
#define LOSSLAB_QUADRATURE_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace losslab {

struct QuadResult {
    double value = 0.0;
    double abs_err_est = 0.0;
    bool converged = true;
    std::size_t evals = 0;
};

/// Adaptive Simpson quadrature of f on [a, b] to the given relative accuracy.
/// `breakpoints` are interior points where the integrand is known to be rough
/// (segment boundaries, |.| kinks); the interval is split there before any
/// adaptive refinement starts. Non-convergence is reported through the result,
/// not thrown.
QuadResult adaptive_quadrature(const std::function<double(double)>& f, double a,
                               double b, double rel_tol,
                               std::vector<double> breakpoints = {},
                               int max_depth = 40);

/// Fixed 7-point Gauss-Legendre rule on [a, b].
double gauss7(const std::function<double(double)>& f, double a, double b);

/// Composite Gauss-Legendre integration with panels of width at most
/// `max_panel`, with panel edges snapped to the given sorted breakpoints.
/// Meant for smooth oscillatory integrands whose period is known a priori.
double panel_integrate(const std::function<double(double)>& f, double a,
                       double b, double max_panel,
                       const std::vector<double>& breakpoints = {});

}  // namespace losslab

#endif
