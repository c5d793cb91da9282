#include "losslab/speeds.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "losslab/grid.hpp"

namespace losslab {

namespace {

constexpr double kPartitionSlack = 1e-9;

double checked_t(const SpeedSegment& seg, double t) {
    if (seg.kind != SegmentKind::Constant && t < seg.t_floor) {
        throw std::domain_error("PropagationSpeed: evaluation at t=" +
                                std::to_string(t) +
                                " below the segment floor " +
                                std::to_string(seg.t_floor));
    }
    return t;
}

}  // namespace

PropagationSpeed::PropagationSpeed(double t0,
                                   std::vector<SpeedSegment> segments,
                                   std::optional<SpeedPrefix> prefix,
                                   bool has_d2)
    : t0_(t0), segments_(std::move(segments)), prefix_(prefix), has_d2_(has_d2) {
    if (!(t0_ > 0.0)) throw std::invalid_argument("PropagationSpeed: T0 <= 0");
    if (segments_.empty()) {
        throw std::invalid_argument("PropagationSpeed: no segments");
    }
    double expect = 0.0;
    for (const auto& s : segments_) {
        if (std::abs(s.t_lo - expect) > kPartitionSlack * t0_) {
            throw std::invalid_argument(
                "PropagationSpeed: segments do not partition [0, T0]");
        }
        if (!(s.t_hi > s.t_lo)) {
            throw std::invalid_argument("PropagationSpeed: empty segment");
        }
        if (s.kind != SegmentKind::Constant && !s.f) {
            throw std::invalid_argument(
                "PropagationSpeed: non-constant segment without a value callable");
        }
        expect = s.t_hi;
    }
    if (std::abs(expect - t0_) > kPartitionSlack * t0_) {
        throw std::invalid_argument(
            "PropagationSpeed: segments do not reach T0");
    }
    if (prefix_) {
        const auto& first = segments_.front();
        if (first.kind != SegmentKind::Constant ||
            std::abs(first.t_hi - prefix_->t1) > kPartitionSlack * t0_ ||
            first.const_value != prefix_->mu3) {
            throw std::invalid_argument(
                "PropagationSpeed: prefix inconsistent with first segment");
        }
    }
}

const SpeedSegment& PropagationSpeed::segment_at(double t) const {
    if (t < 0.0 || t > t0_ * (1.0 + kPartitionSlack)) {
        throw std::domain_error("PropagationSpeed: t outside [0, T0]");
    }
    // Boundaries belong to the earlier segment so constructed speeds are
    // exact at window endpoints.
    for (const auto& s : segments_) {
        if (t <= s.t_hi) return s;
    }
    return segments_.back();
}

double PropagationSpeed::value(double t) const {
    const auto& s = segment_at(t);
    if (s.kind == SegmentKind::Constant) return s.const_value;
    return s.f(checked_t(s, t));
}

double PropagationSpeed::d1(double t) const {
    const auto& s = segment_at(t);
    if (s.kind == SegmentKind::Constant) return 0.0;
    if (!s.df) throw std::logic_error("PropagationSpeed: missing d1");
    return s.df(checked_t(s, t));
}

double PropagationSpeed::d2(double t) const {
    const auto& s = segment_at(t);
    if (s.kind == SegmentKind::Constant) return 0.0;
    if (!s.d2f) {
        throw std::logic_error("PropagationSpeed: second derivative not coded");
    }
    return s.d2f(checked_t(s, t));
}

double PropagationSpeed::coeff_period(double t) const {
    const auto& s = segment_at(t);
    if (!s.coeff_period) return 0.0;
    return s.coeff_period(t);
}

// --- class spec ------------------------------------------------------------

double SpeedClassSpec::auto_k0(std::span<const double> grid) const {
    double k = 0.0;
    for (double t : grid) {
        const double lt = std::abs(std::log(t));
        if (lt <= 0.0) continue;
        k = std::max(k, omega(t) * (1.0 + psi(t)) / lt);
    }
    return k;
}

bool SpeedClassSpec::envelope_ok(std::span<const double> grid) const {
    for (double t : grid) {
        if (omega(t) * (1.0 + psi(t)) > k0 * std::abs(std::log(t)) * (1.0 + 1e-12)) {
            return false;
        }
    }
    return true;
}

// --- factories -------------------------------------------------------------

PropagationSpeed constant_speed(double value, double t0) {
    if (!(value > 0.0)) throw std::invalid_argument("constant_speed: value <= 0");
    SpeedSegment s;
    s.t_lo = 0.0;
    s.t_hi = t0;
    s.kind = SegmentKind::Constant;
    s.const_value = value;
    return PropagationSpeed(t0, {std::move(s)}, SpeedPrefix{t0, value}, true);
}

PropagationSpeed generic_constant_speed(double value, double t0) {
    if (!(value > 0.0)) throw std::invalid_argument("generic_constant_speed: value <= 0");
    SpeedSegment s;
    s.t_lo = 0.0;
    s.t_hi = t0;
    s.kind = SegmentKind::Generic;
    s.f = [value](double) { return value; };
    s.df = [](double) { return 0.0; };
    s.d2f = [](double) { return 0.0; };
    return PropagationSpeed(t0, {std::move(s)}, std::nullopt, true);
}

namespace {

// Shared derivative chain for the model family. L = |log t| = -log t on (0,1).
struct AlphaTerms {
    double c, c1, c2;
};

AlphaTerms alpha_eval(double alpha, double t) {
    const double L = -std::log(t);
    const double Lp = -1.0 / t;        // dL/dt
    const double Lpp = 1.0 / (t * t);  // d2L/dt2

    auto powL = [&](double coeff, double p) {
        return coeff == 0.0 ? 0.0 : coeff * std::pow(L, p);
    };

    const double oma = 1.0 - alpha;
    const double u = std::pow(L, oma);
    const double du = powL(oma, -alpha) * Lp;
    const double d2u = powL(oma * -alpha, -alpha - 1.0) * Lp * Lp +
                       powL(oma, -alpha) * Lpp;

    const double E = std::exp(-u);
    const double dE = -E * du;
    const double d2E = E * (du * du - d2u);

    const double eu = std::exp(u);
    const double L2a = std::pow(L, 2.0 * alpha);
    const double dL2a = powL(2.0 * alpha, 2.0 * alpha - 1.0) * Lp;
    const double d2L2a =
        powL(2.0 * alpha * (2.0 * alpha - 1.0), 2.0 * alpha - 2.0) * Lp * Lp +
        powL(2.0 * alpha, 2.0 * alpha - 1.0) * Lpp;

    const double A = L2a * eu;
    const double dA = eu * (dL2a + L2a * du);
    const double d2A = eu * (d2L2a + 2.0 * dL2a * du + L2a * (d2u + du * du));

    const double s = std::sin(A);
    const double co = std::cos(A);
    AlphaTerms out;
    out.c = 2.0 + E * s;
    out.c1 = dE * s + E * co * dA;
    out.c2 = d2E * s + 2.0 * dE * co * dA + E * (-s * dA * dA + co * d2A);
    return out;
}

}  // namespace

PropagationSpeed model_speed_alpha(double alpha, double t0) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::domain_error("model_speed_alpha: alpha outside [0, 1]");
    }
    if (!(t0 > 0.0 && t0 < 1.0)) {
        throw std::invalid_argument("model_speed_alpha: need 0 < T0 < 1");
    }
    SpeedSegment s;
    s.t_lo = 0.0;
    s.t_hi = t0;
    s.kind = SegmentKind::Generic;
    s.t_floor = kTimeFloor;
    if (alpha == 1.0) {
        // Endpoint case 2 + sin(|log t|^2).
        s.f = [](double t) {
            const double L = -std::log(t);
            return 2.0 + std::sin(L * L);
        };
        s.df = [](double t) {
            const double L = -std::log(t);
            return -2.0 * L * std::cos(L * L) / t;
        };
        s.d2f = [](double t) {
            const double L = -std::log(t);
            const double tt = t * t;
            return (2.0 * (1.0 + L) * std::cos(L * L) -
                    4.0 * L * L * std::sin(L * L)) /
                   tt;
        };
        // Local phase derivative of sin(L^2) is 2L/t.
        s.coeff_period = [](double t) {
            const double L = -std::log(t);
            return L > 1e-6 ? 3.14159265358979323846 * t / L : 1e9;
        };
    } else {
        s.f = [alpha](double t) { return alpha_eval(alpha, t).c; };
        s.df = [alpha](double t) { return alpha_eval(alpha, t).c1; };
        s.d2f = [alpha](double t) { return alpha_eval(alpha, t).c2; };
        // Phase A = L^{2a} exp(L^{1-a}); |dA/dt| bounds the local frequency.
        s.coeff_period = [alpha](double t) {
            const double L = -std::log(t);
            const double oma = 1.0 - alpha;
            const double dA =
                std::exp(std::pow(L, oma)) / t *
                ((alpha > 0.0 ? 2.0 * alpha * std::pow(L, 2.0 * alpha - 1.0)
                              : 0.0) +
                 oma * std::pow(L, alpha));
            return dA > 1e-12 ? 2.0 * 3.14159265358979323846 / dA : 1e9;
        };
    }
    return PropagationSpeed(t0, {std::move(s)}, std::nullopt, true);
}

PropagationSpeed sin_perturbed_speed(double base, double amp, double freq,
                                     double t0) {
    SpeedSegment s;
    s.t_lo = 0.0;
    s.t_hi = t0;
    s.kind = SegmentKind::Generic;
    s.f = [=](double t) { return base + amp * std::sin(freq * t); };
    s.df = [=](double t) { return amp * freq * std::cos(freq * t); };
    s.d2f = [=](double t) { return -amp * freq * freq * std::sin(freq * t); };
    if (freq > 0.0) {
        const double period = 2.0 * 3.14159265358979323846 / freq;
        s.coeff_period = [period](double) { return period; };
    }
    return PropagationSpeed(t0, {std::move(s)}, std::nullopt, true);
}

PropagationSpeed affine_desaturate(const PropagationSpeed& c, double mu1,
                                   double mu2, double eps) {
    if (!(mu2 > mu1)) throw std::invalid_argument("affine_desaturate: mu1 >= mu2");
    const double p = ((1.0 - eps) * mu2 - (1.0 + eps) * mu1) / (mu2 - mu1);
    const double q = (1.0 + eps) * mu1 - p * mu1;
    std::vector<SpeedSegment> segs;
    for (const auto& s : c.segments()) {
        SpeedSegment n = s;
        if (s.kind == SegmentKind::Constant) {
            n.const_value = p * s.const_value + q;
        } else {
            auto f = s.f;
            auto df = s.df;
            auto d2f = s.d2f;
            n.f = [p, q, f](double t) { return p * f(t) + q; };
            n.df = df ? std::function<double(double)>(
                            [p, df](double t) { return p * df(t); })
                      : nullptr;
            n.d2f = d2f ? std::function<double(double)>(
                              [p, d2f](double t) { return p * d2f(t); })
                        : nullptr;
        }
        segs.push_back(std::move(n));
    }
    std::optional<SpeedPrefix> prefix;
    if (c.prefix()) prefix = SpeedPrefix{c.prefix()->t1, p * c.prefix()->mu3 + q};
    return PropagationSpeed(c.horizon(), std::move(segs), prefix, c.has_d2());
}

PropagationSpeed tabulated_speed(std::vector<double> t, std::vector<double> c,
                                 std::vector<double> c1, double t0) {
    if (t.size() < 2 || t.size() != c.size() || t.size() != c1.size()) {
        throw std::invalid_argument("tabulated_speed: bad table");
    }
    struct Table {
        std::vector<double> t, c, c1;
    };
    auto tab = std::make_shared<Table>(Table{std::move(t), std::move(c), std::move(c1)});

    auto locate = [tab](double x) -> std::size_t {
        const auto& ts = tab->t;
        auto it = std::upper_bound(ts.begin(), ts.end(), x);
        std::size_t i = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin() - 1);
        return std::min(i, ts.size() - 2);
    };
    auto hermite = [tab, locate](double x, int deriv) {
        const std::size_t i = locate(x);
        const double h = tab->t[i + 1] - tab->t[i];
        const double s = (x - tab->t[i]) / h;
        const double y0 = tab->c[i], y1 = tab->c[i + 1];
        const double m0 = tab->c1[i] * h, m1 = tab->c1[i + 1] * h;
        const double s2 = s * s, s3 = s2 * s;
        if (deriv == 0) {
            return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 +
                   (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * m1;
        }
        if (deriv == 1) {
            return ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * m0 +
                    (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * m1) /
                   h;
        }
        return ((12 * s - 6) * y0 + (6 * s - 4) * m0 + (-12 * s + 6) * y1 +
                (6 * s - 2) * m1) /
               (h * h);
    };

    SpeedSegment s;
    s.t_lo = 0.0;
    s.t_hi = t0;
    s.kind = SegmentKind::Generic;
    s.t_floor = tab->t.front();
    s.f = [hermite](double x) { return hermite(x, 0); };
    s.df = [hermite](double x) { return hermite(x, 1); };
    s.d2f = [hermite](double x) { return hermite(x, 2); };
    return PropagationSpeed(t0, {std::move(s)}, std::nullopt, true);
}

// --- operations ------------------------------------------------------------

MembershipReport membership_report(const PropagationSpeed& c,
                                   const SpeedClassSpec& spec,
                                   std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("membership_report: empty grid");
    if (spec.order == 2 && !c.has_d2()) {
        throw std::invalid_argument(
            "membership_report: order-2 spec requires second derivatives");
    }
    MembershipReport rep;
    auto track = [](BoundCheck& b, double ratio, double t) {
        if (ratio > b.max_ratio) {
            b.max_ratio = ratio;
            b.argmax_t = t;
        }
    };
    for (double t : grid) {
        const double v = c.value(t);
        const double w = spec.omega(t);
        track(rep.lower, spec.mu1 / v, t);
        track(rep.upper, v / spec.mu2, t);
        track(rep.deriv1, std::abs(c.d1(t)) * t / w, t);
        if (spec.order == 2) {
            track(rep.deriv2,
                  std::abs(c.d2(t)) * t * t * std::exp(-spec.psi(t)) / (w * w), t);
        }
    }
    const double one = 1.0 + 1e-12;
    rep.pass = rep.lower.max_ratio <= one && rep.upper.max_ratio <= one &&
               rep.deriv1.max_ratio <= one &&
               (spec.order < 2 || rep.deriv2.max_ratio <= one);
    return rep;
}

double distance_ps1(const PropagationSpeed& c1, const PropagationSpeed& c2,
                    const SpeedClassSpec& spec, std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("distance_ps1: empty grid");
    if (std::abs(c1.horizon() - c2.horizon()) > 1e-12 * c1.horizon()) {
        throw std::invalid_argument("distance_ps1: mismatched horizons");
    }
    double sup0 = 0.0, sup1 = 0.0;
    for (double t : grid) {
        sup0 = std::max(sup0, std::abs(c1.value(t) - c2.value(t)));
        sup1 = std::max(sup1,
                        t * t / spec.omega(t) * std::abs(c1.d1(t) - c2.d1(t)));
    }
    return sup0 + sup1;
}

double distance_ps2(const PropagationSpeed& c1, const PropagationSpeed& c2,
                    const SpeedClassSpec& spec, std::span<const double> grid) {
    if (!c1.has_d2() || !c2.has_d2()) {
        throw std::invalid_argument("distance_ps2: missing second derivatives");
    }
    double sup2 = 0.0;
    for (double t : grid) {
        const double w = spec.omega(t);
        sup2 = std::max(sup2, t * t * t * std::exp(-spec.psi(t)) / (w * w) *
                                  std::abs(c1.d2(t) - c2.d2(t)));
    }
    return distance_ps1(c1, c2, spec, grid) + sup2;
}

PropagationSpeed smooth_to_initially_constant(const PropagationSpeed& c_star,
                                              double delta,
                                              const CutoffFunction& theta) {
    const double t0 = c_star.horizon();
    if (!(delta > 0.0 && delta < 0.5 * t0)) {
        throw std::domain_error(
            "smooth_to_initially_constant: need 0 < delta < T0/2");
    }
    const double cd = c_star.value(delta);

    // Ramp piece on [delta, 2 delta]; Leibniz derivatives of
    // c(delta) + theta((t-delta)/delta) (c(t) - c(delta)).
    auto src = std::make_shared<PropagationSpeed>(c_star);
    const CutoffFunction* th = &theta;
    SpeedSegment ramp;
    ramp.t_lo = delta;
    ramp.t_hi = 2.0 * delta;
    ramp.kind = SegmentKind::Generic;
    ramp.t_floor = delta;
    ramp.f = [src, th, delta, cd](double t) {
        const double sg = (t - delta) / delta;
        return cd + th->value(sg) * (src->value(t) - cd);
    };
    ramp.df = [src, th, delta, cd](double t) {
        const double sg = (t - delta) / delta;
        return th->derivative(1, sg) / delta * (src->value(t) - cd) +
               th->value(sg) * src->d1(t);
    };
    if (c_star.has_d2()) {
        ramp.d2f = [src, th, delta, cd](double t) {
            const double sg = (t - delta) / delta;
            return th->derivative(2, sg) / (delta * delta) * (src->value(t) - cd) +
                   2.0 * th->derivative(1, sg) / delta * src->d1(t) +
                   th->value(sg) * src->d2(t);
        };
    }
    ramp.coeff_period = [src](double t) { return src->coeff_period(t); };

    SpeedSegment head;
    head.t_lo = 0.0;
    head.t_hi = delta;
    head.kind = SegmentKind::Constant;
    head.const_value = cd;

    std::vector<SpeedSegment> segs{std::move(head), std::move(ramp)};
    // Tail pieces re-use the source segments unchanged so evaluation on
    // [2 delta, T0] is bit-identical to c_star.
    for (const auto& s : c_star.segments()) {
        if (s.t_hi <= 2.0 * delta) continue;
        SpeedSegment n = s;
        n.t_lo = std::max(s.t_lo, 2.0 * delta);
        segs.push_back(std::move(n));
    }
    return PropagationSpeed(t0, std::move(segs), SpeedPrefix{delta, cd},
                            c_star.has_d2());
}

std::vector<DensityRow> density_check(const PropagationSpeed& c_star,
                                      const SpeedClassSpec& spec,
                                      std::span<const double> deltas,
                                      std::span<const double> grid,
                                      const CutoffFunction& theta) {
    std::vector<DensityRow> rows;
    rows.reserve(deltas.size());
    for (double d : deltas) {
        const PropagationSpeed cd = smooth_to_initially_constant(c_star, d, theta);
        const MembershipReport rep = membership_report(cd, spec, grid);
        const double dist = spec.order == 2
                                ? distance_ps2(cd, c_star, spec, grid)
                                : distance_ps1(cd, c_star, spec, grid);
        rows.push_back({d, rep.pass, dist});
    }
    return rows;
}

}  // namespace losslab
