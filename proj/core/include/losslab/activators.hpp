#ifndef LOSSLAB_ACTIVATORS_HPP
#define LOSSLAB_ACTIVATORS_HPP

#include <optional>
#include <span>
#include <vector>

#include "losslab/cutoff.hpp"
#include "losslab/oscillator.hpp"
#include "losslab/speeds.hpp"

namespace losslab {

/// Modulation window of one activator speed. a and b are built from the
/// integers na, nb (a = 2 pi na / (gamma lambda), likewise b), never by
/// rounding real times, so gamma*lambda*a and gamma*lambda*b are exact
/// multiples of 2 pi and the special solution vanishes at both endpoints.
struct ActivatorWindow {
    double gamma = 0.0;   // base speed is gamma^2
    double lambda = 0.0;
    double a = 0.0;
    double b = 0.0;
    double omega_l = 0.0;  // min(omega(b), log lambda)
    long long na = 0;
    long long nb = 0;

    /// 0 < a < 2a < b/2 < b < t1.
    bool geometry_ok(double t1) const;
};

ActivatorWindow make_window(double gamma, double lambda, long long na,
                            long long nb, const RateFunction& omega);

/// na = floor(lambda^(1/4)), nb = floor(lambda^(1/2)).
ActivatorWindow schedule_c1(double lambda, double gamma,
                            const RateFunction& omega);

struct ScheduleC2Params {
    double gamma_l = 0.0;  // omega(l^-1/2) psi(l^-1/2) / log l
    double psi_l = 0.0;    // min{ log(l)/8, psi(l^-1/2)/4 + log(Gamma_l)/4 }
    bool gamma_l_le_one = false;  // log Gamma_l <= 0 branch, flagged not fatal
    bool b_le_sqrt = false;       // b <= lambda^(-1/2)
    // The three limit quantities whose decay drives the PS1 statement:
    // omega_l/(lambda a), a/b, (omega_l/log lambda) log(b/a) reciprocal-style
    // trends, evaluated at this lambda.
    double trend_oml_over_la = 0.0;
    double trend_b_over_a = 0.0;
    double trend_phi_over_log = 0.0;
    // The two PS2 ratios: lambda b exp(-psi(b))/omega(b), omega_l exp(-psi(b))/omega(b).
    double trend_c2_first = 0.0;
    double trend_c2_second = 0.0;
};

std::pair<ActivatorWindow, ScheduleC2Params> schedule_c2(
    double lambda, double gamma, const SpeedClassSpec& spec);

/// The modulation amplitude: 0 outside [a, b], omega_l/t on [2a, b/2], with
/// cutoff ramps in between. Orders 0..3 via the Leibniz expansions.
double epsilon_profile(const ActivatorWindow& w, const CutoffFunction& theta,
                       double t, int order);

/// Conservative constants for |eps^(m)| <= K_m omega_l / t^(m+1) on [a, b],
/// assembled from the cutoff sup norms.
double epsilon_derivative_constant(const CutoffFunction& theta, int m);

/// c_l(t) = c*(t) - eps/(4 g l) sin(2 g l t) - eps'/(8 g^2 l^2) sin^2(g l t)
///        - eps^2/(64 g^4 l^2) sin^4(g l t), with first and second
/// derivatives assembled term by term. Outside [a, b] the host's segments
/// are reused unchanged.
PropagationSpeed build_activator(const PropagationSpeed& c_star,
                                 const ActivatorWindow& w,
                                 const CutoffFunction& theta);

/// Raw exponent integral int_a^t eps(s) sin^2(gamma lambda s) ds, by
/// Gauss panels aligned to quarter periods.
double activation_integral(const ActivatorWindow& w, const CutoffFunction& theta,
                           double t);

/// Exact special solution inside the window:
/// u = sin(g l t)/(g l) exp(I(t)/(8 g^2)); the exponential lives in logscale.
OscState activator_closed_form(const ActivatorWindow& w,
                               const CutoffFunction& theta, double t);

/// phi(lambda) = (omega_l / 32 gamma^2) log(b/a).
double phi_rate(const ActivatorWindow& w);

struct CheckpointResult {
    double t = 0.0;
    double measured_log_gain = 0.0;
    double required_log_gain = 0.0;
    double margin = 0.0;
    bool pass = false;
};

struct GrowthCertificate {
    double lambda = 0.0;
    double gamma = 0.0;
    double a = 0.0;
    double b = 0.0;
    double omega_l = 0.0;
    double phi = 0.0;
    double log_gain_at_b = 0.0;  // closed form, 2 I(b)/(8 gamma^2) doubled
    double m_delta_log = 0.0;    // log of the proof's M_delta
    double margin = 0.0;         // min over checkpoints
    bool pass = false;
    double closed_form_rel_err = 0.0;  // integrator cross-check at b
    std::vector<CheckpointResult> checkpoints;
};

struct GrowthOptions {
    bool use_integrator = true;
    double tol = 1e-9;        // window cross-check integration
    double tail_tol = 1e-9;   // propagation past b (margins are coarse)
    double cross_check_tol = 1e-6;
};

/// Certify E_Kov(t) >= M_delta exp(2 phi) at each checkpoint past b. The
/// state at b comes from the closed form (cross-checked by integration over
/// the window when requested); past b the trajectory continues exactly on
/// constant segments and adaptively elsewhere.
GrowthCertificate verify_growth(const PropagationSpeed& c_lambda,
                                const ActivatorWindow& w,
                                std::span<const double> checkpoints,
                                const SpeedClassSpec& spec,
                                const CutoffFunction& theta,
                                const GrowthOptions& opt);

enum class ActivatorSchedule { C1, C2 };

struct ConvergenceRow {
    double lambda = 0.0;
    bool feasible = false;
    bool member = false;
    double distance = 0.0;
    std::optional<ScheduleC2Params> c2;
};

/// Per-lambda membership of c_lambda in the host class and class distance to
/// the host; callers assert the eventual-pass / decreasing-distance trends.
std::vector<ConvergenceRow> verify_convergence(
    const PropagationSpeed& c_star, const SpeedClassSpec& spec,
    std::span<const double> lambda_grid, ActivatorSchedule schedule,
    double gamma, std::span<const double> grid, const CutoffFunction& theta);

struct StageRecord {
    int stage = 0;
    double lambda = 0.0;
    ActivatorWindow window;
    GrowthCertificate certificate;       // under the speed of its own stage
    std::vector<GrowthCertificate> reverified;  // this frequency under later speeds
};

struct IterateResult {
    PropagationSpeed speed;  // gamma_n after the last stage
    std::vector<StageRecord> stages;
    // gamma_0, gamma_1, ..., gamma_n: the speed after each stage, kept so
    // callers can check the stage equalities exactly.
    std::vector<PropagationSpeed> stage_speeds;
    bool complete = false;
};

struct IterateOptions {
    double margin = 0.05;
    double tol = 1e-9;
    double tail_tol = 1e-4;      // tolerance for long tail crossings
    double lambda_max = 1.15e18; // 2^60
    int workers = 1;
};

/// The finite-stage universal-activator iteration: at stage n pick lambda_n
/// by doubling search so that gamma_n = c_{lambda_n} (built over gamma_{n-1})
/// keeps strict class membership, stays 2^-n close to gamma_{n-1} below
/// 2^-n and equal beyond, and activates lambda_n at every checkpoint
/// T0/2^i, i <= n, with relative slack >= margin; all previous frequencies
/// are re-verified against the new speed.
IterateResult iterate_universal(const SpeedClassSpec& spec, double gamma0_level,
                                int n_stages, const CutoffFunction& theta,
                                const IterateOptions& opt);

struct SobolevTermRow {
    int stage = 0;
    double beta = 0.0;
    double t = 0.0;
    double log_term = 0.0;  // log( a_i^2 E_Kov,i(t) lambda_i^-2 beta )
};

struct SobolevCheck {
    std::vector<SobolevTermRow> rows;
    // Per beta: running max over stages is non-decreasing (trivially true),
    // and whether the per-stage terms themselves kept growing; when they do
    // not, the frequency range is insufficient for that beta, which is a
    // reported state rather than a failure.
    struct BetaSummary {
        double beta = 0.0;
        bool max_nondecreasing = false;
        bool terms_increasing = false;
        bool insufficient_range = false;
    };
    std::vector<BetaSummary> summaries;
    // Data-smoothness side: per stage, whether exp(-phi/2 + 2 alpha log l) <= 1/l.
    struct DataRow {
        int stage = 0;
        double alpha = 0.0;
        bool holds = false;
    };
    std::vector<DataRow> data_rows;
};

SobolevCheck sobolev_divergence_check(const IterateResult& it,
                                      std::span<const double> beta_list,
                                      std::span<const double> t_list,
                                      std::span<const double> alpha_list);

}  // namespace losslab

#endif
