#ifndef LOSSLAB_SPEEDS_HPP
#define LOSSLAB_SPEEDS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "losslab/cutoff.hpp"
#include "losslab/rate_function.hpp"

namespace losslab {

/// Initially constant stretch [0, t1] where the speed equals mu3 exactly.
struct SpeedPrefix {
    double t1;
    double mu3;
};

enum class SegmentKind { Constant, ActivatorWindow, Generic };

/// One piece of a speed's domain. Constant pieces are evaluated without any
/// callable so downstream consumers (the exact propagator, the bit-identical
/// pass-through checks) can rely on exact values.
struct SpeedSegment {
    double t_lo = 0.0;
    double t_hi = 0.0;
    SegmentKind kind = SegmentKind::Generic;
    double const_value = 0.0;
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
    // Shortest local oscillation period of the coefficient at time t, or an
    // empty callable when the piece has no fast scale of its own. The
    // integrator caps its steps with this so the error estimator never
    // aliases across coefficient oscillations.
    std::function<double(double)> coeff_period;
    // Evaluation floor: formulas singular at t=0 reject t below this.
    double t_floor = 0.0;
};

/// A propagation speed c(t) on [0, T0] with hand-coded derivatives.
/// Immutable after construction; safe to share across threads.
class PropagationSpeed {
  public:
    PropagationSpeed(double t0, std::vector<SpeedSegment> segments,
                     std::optional<SpeedPrefix> prefix, bool has_d2);

    double value(double t) const;
    double d1(double t) const;
    double d2(double t) const;
    bool has_d2() const { return has_d2_; }
    double horizon() const { return t0_; }
    const std::optional<SpeedPrefix>& prefix() const { return prefix_; }
    std::span<const SpeedSegment> segments() const { return segments_; }
    const SpeedSegment& segment_at(double t) const;
    /// 0 when the coefficient has no fast oscillation at t.
    double coeff_period(double t) const;

  private:
    double t0_;
    std::vector<SpeedSegment> segments_;
    std::optional<SpeedPrefix> prefix_;
    bool has_d2_;
};

/// Class envelope (mu1, mu2, omega, psi, K0, T0) for PS1/PS2 membership.
struct SpeedClassSpec {
    double mu1;
    double mu2;
    double t0;
    RateFunction omega;
    RateFunction psi;
    double k0;
    int order;  // 1 or 2

    /// Smallest K0 making omega(t)(1+psi(t)) <= K0|log t| hold on the grid.
    double auto_k0(std::span<const double> grid) const;
    /// Pointwise envelope check on the grid.
    bool envelope_ok(std::span<const double> grid) const;
};

struct BoundCheck {
    double max_ratio = 0.0;
    double argmax_t = 0.0;
};

struct MembershipReport {
    bool pass = false;
    BoundCheck lower;   // mu1 / c(t)
    BoundCheck upper;   // c(t) / mu2
    BoundCheck deriv1;  // |c'(t)| t / omega(t)
    BoundCheck deriv2;  // |c''(t)| t^2 exp(-psi(t)) / omega(t)^2
};

// --- factories -------------------------------------------------------------

/// Constant speed, tagged Constant (exact-propagator route), prefix (T0, v).
PropagationSpeed constant_speed(double value, double t0);

/// Constant speed tagged Generic so the adaptive integrator is exercised.
PropagationSpeed generic_constant_speed(double value, double t0);

/// The interpolating model family
///   c_a(t) = 2 + exp(-|log t|^(1-a)) sin(|log t|^(2a) exp(|log t|^(1-a))),
/// with the endpoint cases 2 + t sin(1/t) (a=0) and 2 + sin(|log t|^2) (a=1).
PropagationSpeed model_speed_alpha(double alpha, double t0);

/// base + amp*sin(freq*t); smooth at t=0.
PropagationSpeed sin_perturbed_speed(double base, double amp, double freq,
                                     double t0);

/// Affine map sending [mu1, mu2] onto [(1+eps)mu1, (1-eps)mu2], applied to a
/// whole speed (values and derivatives rescale by the same slope).
PropagationSpeed affine_desaturate(const PropagationSpeed& c, double mu1,
                                   double mu2, double eps);

/// Cubic Hermite interpolant of an imported (t, c, c') table.
PropagationSpeed tabulated_speed(std::vector<double> t, std::vector<double> c,
                                 std::vector<double> c1, double t0);

// --- operations ------------------------------------------------------------

MembershipReport membership_report(const PropagationSpeed& c,
                                   const SpeedClassSpec& spec,
                                   std::span<const double> grid);

double distance_ps1(const PropagationSpeed& c1, const PropagationSpeed& c2,
                    const SpeedClassSpec& spec, std::span<const double> grid);

double distance_ps2(const PropagationSpeed& c1, const PropagationSpeed& c2,
                    const SpeedClassSpec& spec, std::span<const double> grid);

/// c_delta(t) = c(delta) + theta((t-delta)/delta) (c(t) - c(delta)).
/// Constant on [0, delta], untouched (same evaluation path) on [2 delta, T0].
PropagationSpeed smooth_to_initially_constant(const PropagationSpeed& c_star,
                                              double delta,
                                              const CutoffFunction& theta);

struct DensityRow {
    double delta;
    bool member;
    double distance;
};

/// Smooth c_star at each delta and report (membership, class distance).
std::vector<DensityRow> density_check(const PropagationSpeed& c_star,
                                      const SpeedClassSpec& spec,
                                      std::span<const double> deltas,
                                      std::span<const double> grid,
                                      const CutoffFunction& theta);

}  // namespace losslab

#endif
