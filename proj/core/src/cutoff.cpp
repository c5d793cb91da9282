#include "losslab/cutoff.hpp"

#include <cmath>
#include <stdexcept>

namespace losslab {
namespace {

// exp(-1/s) and its first three derivatives; identically 0 for s <= 0.
struct Bump {
    double f, d1, d2, d3;
};

Bump bump(double s) {
    if (s <= 0.0) return {0.0, 0.0, 0.0, 0.0};
    const double f = std::exp(-1.0 / s);
    if (f == 0.0) return {0.0, 0.0, 0.0, 0.0};
    const double is = 1.0 / s;
    const double is2 = is * is;
    const double is3 = is2 * is;
    const double is4 = is2 * is2;
    const double is5 = is4 * is;
    const double is6 = is3 * is3;
    return {f, f * is2, f * (is4 - 2.0 * is3), f * (is6 - 6.0 * is5 + 6.0 * is4)};
}

struct ThetaDerivs {
    double v0, v1, v2, v3;
};

ThetaDerivs theta_all(double s) {
    if (s <= 0.0) return {0.0, 0.0, 0.0, 0.0};
    if (s >= 1.0) return {1.0, 0.0, 0.0, 0.0};
    const Bump p = bump(s);
    const Bump q = bump(1.0 - s);
    const double g = p.f + q.f;
    const double g1 = p.d1 - q.d1;
    const double g2 = p.d2 + q.d2;
    const double g3 = p.d3 - q.d3;
    // theta*g = f, differentiated repeatedly and solved for theta^(m).
    const double t0 = p.f / g;
    const double t1 = (p.d1 - t0 * g1) / g;
    const double t2 = (p.d2 - 2.0 * t1 * g1 - t0 * g2) / g;
    const double t3 = (p.d3 - 3.0 * t2 * g1 - 3.0 * t1 * g2 - t0 * g3) / g;
    return {t0, t1, t2, t3};
}

}  // namespace

CutoffFunction::CutoffFunction() {
    km_[0] = 1.0;
    km_[1] = km_[2] = km_[3] = 0.0;
    // Even count so the symmetry point 1/2 is on the scan grid; a whisker of
    // slack keeps the stored values dominating between grid points.
    const int n = 262144;
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n);
        const ThetaDerivs d = theta_all(s);
        km_[1] = std::max(km_[1], std::abs(d.v1));
        km_[2] = std::max(km_[2], std::abs(d.v2));
        km_[3] = std::max(km_[3], std::abs(d.v3));
    }
    for (int m = 1; m <= 3; ++m) km_[m] *= 1.0 + 1e-9;
}

double CutoffFunction::derivative(int m, double sigma) const {
    const ThetaDerivs d = theta_all(sigma);
    switch (m) {
        case 0: return d.v0;
        case 1: return d.v1;
        case 2: return d.v2;
        case 3: return d.v3;
        default: throw std::invalid_argument("CutoffFunction: order must be 0..3");
    }
}

}  // namespace losslab
