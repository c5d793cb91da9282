#include "losslab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace losslab {
namespace {

struct SimpsonCtx {
    const std::function<double(double)>& f;
    double rel_tol;
    int max_depth;
    double scale;  // running magnitude estimate for the relative test
    std::size_t evals = 0;
    bool converged = true;
    double err = 0.0;
};

double simpson(double h, double fa, double fm, double fb) {
    return (fa + 4.0 * fm + fb) * (h / 6.0);
}

double simpson_rec(SimpsonCtx& ctx, double a, double b, double fa, double fm,
                   double fb, double whole, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = ctx.f(lm);
    const double frm = ctx.f(rm);
    ctx.evals += 2;
    const double left = simpson(m - a, fa, flm, fm);
    const double right = simpson(b - m, fm, frm, fb);
    const double err = (left + right - whole) / 15.0;
    const double tol =
        ctx.rel_tol * std::max(ctx.scale, std::abs(left + right));
    if (std::abs(err) <= tol || depth >= ctx.max_depth) {
        if (depth >= ctx.max_depth && std::abs(err) > tol) {
            ctx.converged = false;
        }
        ctx.err += std::abs(err);
        return left + right + err;
    }
    return simpson_rec(ctx, a, m, fa, flm, fm, left, depth + 1) +
           simpson_rec(ctx, m, b, fm, frm, fb, right, depth + 1);
}

// 7-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 7> kGl7X = {
    -0.9491079123427585245262, -0.7415311855993944398639,
    -0.4058451513773971669066, 0.0,
    0.4058451513773971669066,  0.7415311855993944398639,
    0.9491079123427585245262};
constexpr std::array<double, 7> kGl7W = {
    0.1294849661688696932706, 0.2797053914892766679015,
    0.3818300505051189449504, 0.4179591836734693877551,
    0.3818300505051189449504, 0.2797053914892766679015,
    0.1294849661688696932706};

}  // namespace

QuadResult adaptive_quadrature(const std::function<double(double)>& f, double a,
                               double b, double rel_tol,
                               std::vector<double> breakpoints, int max_depth) {
    QuadResult out;
    if (!(b > a)) return out;
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(
        std::remove_if(breakpoints.begin(), breakpoints.end(),
                       [&](double x) { return x < a || x > b; }),
        breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                      breakpoints.end());

    SimpsonCtx ctx{f, rel_tol, max_depth, 0.0};
    // First pass to seed the magnitude scale.
    double rough = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double lo = breakpoints[i];
        const double hi = breakpoints[i + 1];
        rough += std::abs(gauss7(f, lo, hi));
        ctx.evals += 7;
    }
    ctx.scale = rough;

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double lo = breakpoints[i];
        const double hi = breakpoints[i + 1];
        const double m = 0.5 * (lo + hi);
        const double fa = f(lo);
        const double fm = f(m);
        const double fb = f(hi);
        ctx.evals += 3;
        const double whole = simpson(hi - lo, fa, fm, fb);
        total += simpson_rec(ctx, lo, hi, fa, fm, fb, whole, 0);
    }
    out.value = total;
    out.abs_err_est = ctx.err;
    out.converged = ctx.converged;
    out.evals = ctx.evals;
    return out;
}

double gauss7(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 7; ++i) {
        s += kGl7W[i] * f(c + h * kGl7X[i]);
    }
    return s * h;
}

double panel_integrate(const std::function<double(double)>& f, double a,
                       double b, double max_panel,
                       const std::vector<double>& breakpoints) {
    if (!(b > a)) return 0.0;
    if (!(max_panel > 0.0)) {
        throw std::invalid_argument("panel_integrate: max_panel must be > 0");
    }
    std::vector<double> edges{a, b};
    for (double x : breakpoints) {
        if (x > a && x < b) edges.push_back(x);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double lo = edges[i];
        const double hi = edges[i + 1];
        const auto panels = static_cast<std::size_t>(
            std::max(1.0, std::ceil((hi - lo) / max_panel)));
        const double w = (hi - lo) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            total += gauss7(f, lo + static_cast<double>(p) * w,
                            lo + static_cast<double>(p + 1) * w);
        }
    }
    return total;
}

}  // namespace losslab
