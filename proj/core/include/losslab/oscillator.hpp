#ifndef LOSSLAB_OSCILLATOR_HPP
#define LOSSLAB_OSCILLATOR_HPP

#include <span>
#include <vector>

#include "losslab/speeds.hpp"

namespace losslab {

/// Which coefficient multiplies lambda^2 in u'' + lambda^2 q(t) u = 0:
/// Direct uses q = c(t), Squared uses q = c(t)^2. The two halves of the
/// theory work in different forms, so the flag is explicit everywhere.
enum class EquationForm { Direct, Squared };

/// Renormalized oscillator state. The true solution is
/// (u, v) * exp(logscale); rescaling keeps max(|u|, |v|) within 2^+-32.
struct OscState {
    double t = 0.0;
    double u = 0.0;
    double v = 0.0;
    double logscale = 0.0;
    double lambda = 0.0;
};

struct EnergyTriple {
    double log_ekov;
    double log_ehyp;
    double log_etar;
};

struct IntegrateOptions {
    double tol = 1e-10;
    EquationForm form = EquationForm::Direct;
};

struct Trajectory {
    double lambda = 0.0;
    EquationForm form = EquationForm::Direct;
    std::vector<OscState> states;

    /// State at an output time previously requested (exact match).
    const OscState& at(double t) const;
};

/// Exact rotation update for u'' + (gamma lambda)^2 u = 0 over dt >= 0.
OscState propagate_constant(const OscState& s, double gamma, double dt);

/// Integrate u'' + lambda^2 q(c(t)) u = 0 from s0.t to t1, reporting the
/// state at every requested output time (each hit exactly; no interpolation).
/// Constant segments travel through the exact propagator; elsewhere an
/// embedded Dormand-Prince 8(5,3) pair runs with local error tol per unit
/// step and a hard step ceiling resolving both the solution frequency and
/// any coefficient oscillation.
Trajectory integrate(const PropagationSpeed& c, double lambda,
                     const OscState& s0, double t1,
                     std::span<const double> output_times,
                     const IntegrateOptions& opt);

/// Logs of the three energies of the true (unscaled) solution at s.t.
EnergyTriple energies(const OscState& s, const PropagationSpeed& c,
                      EquationForm form);

/// u1 v2 - u2 v1 of the true solutions at time t (t must be an output time
/// of both trajectories).
double wronskian(const Trajectory& a, const Trajectory& b, double t);

/// Per-n sup over the output grid of max(|u_n - u_inf|, |u_n' - u_inf'|)
/// for solutions with data (0,1) at t_start, all at the same fixed lambda.
std::vector<double> continuous_dependence_probe(
    std::span<const PropagationSpeed> c_seq, const PropagationSpeed& c_inf,
    double lambda, double t_start, double t1, const IntegrateOptions& opt);

}  // namespace losslab

#endif
