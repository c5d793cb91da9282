// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Every tolerance is pinned here, in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "losslab/activators.hpp"
#include "losslab/fdl.hpp"
#include "losslab/grid.hpp"
#include "losslab/oscillator.hpp"
#include "losslab/speeds.hpp"

using namespace losslab;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string fmt(const char* pattern, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, x);
    return buf;
}

double log_ekov(const OscState& s) {
    const double lu = s.lambda * s.u;
    return std::log(s.v * s.v + lu * lu) + 2.0 * s.logscale;
}

const CutoffFunction& cutoff() {
    static const CutoffFunction theta;
    return theta;
}

// --- 1: constant-speed oracle ------------------------------------------------

Outcome criterion_constant_oracle() {
    Outcome out;
    double worst = 0.0;
    double slowest = 0.0;
    for (double gamma : {0.5, 1.0, 2.0}) {
        const PropagationSpeed c = generic_constant_speed(gamma * gamma, 1.0);
        for (double lambda : {10.0, 100.0, 1000.0}) {
            IntegrateOptions opt;
            opt.tol = 1e-10;
            OscState s0{0.0, 0.0, 1.0, 0.0, lambda};
            const auto t0 = std::chrono::steady_clock::now();
            const Trajectory tr = integrate(c, lambda, s0, 1.0, {{1.0}}, opt);
            const double secs = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
            slowest = std::max(slowest, secs);
            const OscState& f = tr.at(1.0);
            const double w = gamma * lambda;
            const double eu = std::sin(w) / w;
            const double ev = std::cos(w);
            const double scale = std::exp(f.logscale);
            const double rel =
                std::hypot(w * (f.u * scale - eu), f.v * scale - ev) /
                std::hypot(w * eu, ev);
            worst = std::max(worst, rel);
            out.require(rel <= 1e-8, "rel err " + fmt("%.2e", rel) +
                                         " at gamma=" + fmt("%g", gamma) +
                                         " lambda=" + fmt("%g", lambda));
            out.require(secs < 1.0, "trajectory took " + fmt("%.2f", secs) + " s");
        }
    }
    out.note("max rel err " + fmt("%.2e", worst) + ", slowest " +
             fmt("%.2f", slowest) + " s");
    return out;
}

// --- 2: Wronskian invariance -------------------------------------------------

Outcome criterion_wronskian() {
    Outcome out;
    struct Entry {
        std::string name;
        PropagationSpeed speed;
        double t_start;
        std::vector<double> lambdas;
    };
    const double t_model = 1e-4;
    std::vector<Entry> catalog;
    catalog.push_back({"constant", constant_speed(2.25, 1.0), 0.0,
                       {31.6227766, 1e4}});
    catalog.push_back({"generic-constant", generic_constant_speed(2.25, 1.0),
                       0.0, {31.6227766, 1e4}});
    catalog.push_back({"alpha0", model_speed_alpha(0.0, 0.9), t_model,
                       {31.6227766, 1e4}});
    catalog.push_back({"alpha1/2", model_speed_alpha(0.5, 0.9), t_model,
                       {31.6227766, 1e4}});
    catalog.push_back({"alpha1", model_speed_alpha(1.0, 0.9), t_model,
                       {31.6227766, 1e4}});
    catalog.push_back(
        {"smoothed", smooth_to_initially_constant(model_speed_alpha(0.5, 0.9),
                                                  0.02, cutoff()),
         0.0, {31.6227766, 1e4}});
    {
        const PropagationSpeed host = constant_speed(1.0, 1.0);
        const ActivatorWindow w = schedule_c1(1e4, 1.0, RateFunction::log());
        catalog.push_back({"activator", build_activator(host, w, cutoff()),
                           0.0, {31.6227766, 1e4}});
    }
    double worst = 0.0;
    for (const auto& e : catalog) {
        const double t1 = e.speed.horizon();
        for (double lambda : e.lambdas) {
            IntegrateOptions opt;
            opt.tol = 1e-11;
            const auto outs =
                linear_grid(std::max(e.t_start, 0.02), t1, 33);
            const Trajectory a = integrate(
                e.speed, lambda, {e.t_start, 0.0, 1.0, 0.0, lambda}, t1, outs, opt);
            const Trajectory b = integrate(
                e.speed, lambda, {e.t_start, 1.0, 0.0, 0.0, lambda}, t1, outs, opt);
            for (double t : outs) {
                const double drift = std::abs(wronskian(a, b, t) + 1.0);
                worst = std::max(worst, drift);
                if (drift > 1e-9) {
                    out.require(false, e.name + " drift " + fmt("%.2e", drift) +
                                           " at lambda=" + fmt("%g", lambda));
                    break;
                }
            }
        }
    }
    out.note("max |W+1| " + fmt("%.2e", worst));
    return out;
}

// --- 3: closed-form activator oracle ------------------------------------------

Outcome criterion_activator_oracle() {
    Outcome out;
    const PropagationSpeed host = constant_speed(1.0, 0.5);
    double worst_e = 0.0, worst_u = 0.0;
    for (double lambda : {1e4, 1e5, 1e6}) {
        const ActivatorWindow w = schedule_c1(lambda, 1.0, RateFunction::log());
        const PropagationSpeed cl = build_activator(host, w, cutoff());
        IntegrateOptions opt;
        opt.tol = 1e-9;
        const Trajectory tr =
            integrate(cl, lambda, {0.0, 0.0, 1.0, 0.0, lambda}, w.b, {{w.b}}, opt);
        const OscState& got = tr.at(w.b);
        const OscState ref = activator_closed_form(w, cutoff(), w.b);
        const double rel = std::abs(log_ekov(got) - 2.0 * ref.logscale);
        worst_e = std::max(worst_e, rel);
        out.require(rel <= 1e-6, "E_Kov mismatch " + fmt("%.2e", rel) +
                                     " at lambda=" + fmt("%g", lambda));
        // |u(b)| <= 1e-8 exp(logscale), i.e. the rescaled u itself.
        worst_u = std::max(worst_u, std::abs(got.u));
        out.require(std::abs(got.u) <= 1e-8,
                    "u(b) = " + fmt("%.2e", got.u) + " at lambda=" +
                        fmt("%g", lambda));
    }
    out.note("max E_Kov rel " + fmt("%.2e", worst_e) + ", max |u(b)| " +
             fmt("%.2e", worst_u));
    return out;
}

// --- 4: growth bound ----------------------------------------------------------

Outcome criterion_growth_bound() {
    Outcome out;
    for (double lambda : {1e4, 1e5, 1e6}) {
        const ActivatorWindow w = schedule_c1(lambda, 1.0, RateFunction::log());
        const double integral = activation_integral(w, cutoff(), w.b);
        const double log_up_b = integral / 8.0;  // gamma = 1
        out.require(log_up_b >= phi_rate(w),
                    "log u'(b) < phi at lambda=" + fmt("%g", lambda));
        if (lambda == 1e4) {
            out.require(std::abs(phi_rate(w) - 0.19914) <= 2e-4,
                        "phi(1e4) = " + fmt("%.6f", phi_rate(w)));
        }
    }
    // Discover the threshold above which the exponent integral keeps the
    // factor >= (1/4) omega_l log(b/a).
    double threshold = -1.0;
    for (double lambda = 512.0; lambda <= 2.2e6; lambda *= 2.0) {
        ActivatorWindow w;
        try {
            w = schedule_c1(lambda, 1.0, RateFunction::log());
        } catch (const std::domain_error&) {
            continue;
        }
        const double integral = activation_integral(w, cutoff(), w.b);
        const double floor_bound =
            0.25 * w.omega_l *
            std::log(static_cast<double>(w.nb) / static_cast<double>(w.na));
        if (integral >= floor_bound) {
            if (threshold < 0.0) threshold = lambda;
        } else {
            threshold = -1.0;  // must hold for every lambda past the threshold
        }
    }
    out.require(threshold > 0.0, "no factor-1/4 threshold found");
    out.require(threshold <= 1e4, "threshold above the tested windows");
    out.note("factor-1/4 threshold recorded at lambda = " + fmt("%g", threshold));
    return out;
}

// --- 5: convergence of activators ----------------------------------------------

Outcome criterion_convergence() {
    Outcome out;
    SpeedClassSpec spec{0.5, 2.0, 0.5, RateFunction::log(),
                        RateFunction::constant(1.0), 1.0, 1};
    const PropagationSpeed host = constant_speed(1.0, 0.5);
    std::vector<double> lambdas{1e3, 1e4, 1e5, 1e6};
    const auto grid = log_grid(1e-7, 0.5, 20000);
    const auto rows = verify_convergence(host, spec, lambdas,
                                         ActivatorSchedule::C1, 1.0, grid,
                                         cutoff());
    int k0 = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.require(rows[i].feasible, "window infeasible at k=" +
                                          std::to_string(i + 3));
        if (i > 0 && rows[i].feasible && rows[i - 1].feasible) {
            out.require(rows[i].distance < rows[i - 1].distance,
                        "distance not decreasing at k=" + std::to_string(i + 3));
        }
        if (rows[i].member && k0 < 0) k0 = static_cast<int>(i) + 3;
        if (k0 > 0 && static_cast<int>(i) + 3 >= k0) {
            out.require(rows[i].member,
                        "membership lost at k=" + std::to_string(i + 3));
        }
    }
    out.require(k0 > 0, "no membership threshold k0 found");
    out.require(rows.back().distance < 1e-2,
                "d_PS1 at k=6 is " + fmt("%.3e", rows.back().distance));
    out.note("d_PS1(k=6) = " + fmt("%.3e", rows.back().distance) +
             ", membership from k0 = " + std::to_string(k0));

    // Second schedule: both order-2 ratio trends decrease along lambda = e^{4k}.
    SpeedClassSpec spec2{0.5, 2.0, 0.5, RateFunction::log(),
                         RateFunction::log_power(0.5), 1.0, 2};
    double prev1 = 1e300, prev2 = 1e300;
    for (int k = 2; k <= 5; ++k) {
        const auto [w, p] = schedule_c2(std::exp(4.0 * k), 1.0, spec2);
        (void)w;
        out.require(p.trend_c2_first < prev1,
                    "first c2 ratio not decreasing at k=" + std::to_string(k));
        out.require(p.trend_c2_second < prev2,
                    "second c2 ratio not decreasing at k=" + std::to_string(k));
        prev1 = p.trend_c2_first;
        prev2 = p.trend_c2_second;
    }
    return out;
}

// --- 6: three-zone chain --------------------------------------------------------

Outcome criterion_zone_chain() {
    Outcome out;
    SpeedClassSpec spec{0.5, 3.5, 0.5, RateFunction::constant(2.0),
                        RateFunction::constant(1.0), 0.0, 2};
    spec.k0 = spec.auto_k0(log_grid(1e-8, 0.5, 4096));
    const ZoneConstants z = ZoneConstants::from(spec);
    const PropagationSpeed c = model_speed_alpha(0.0, 0.5);
    const std::vector<double> lambdas{1e2, 1e3, 1e4, 1e5};
    LossOptions lo;
    lo.tol = 1e-6;
    const LossReport rep = measure_loss_exponent(c, spec, lambdas, lo);
    for (const auto& r : rep.rows) {
        out.require(r.ok, "lambda=" + fmt("%g", r.lambda) + " failed: " + r.error);
        if (!r.ok) continue;
        out.require(r.zone_gains[0] <= z.cumulative_at_a(r.lambda),
                    "gain at a over ceiling, lambda=" + fmt("%g", r.lambda));
        out.require(r.zone_gains[1] <= z.cumulative_at_b(r.lambda),
                    "gain at b over ceiling, lambda=" + fmt("%g", r.lambda));
        out.require(r.zone_gains[2] <= z.cumulative_at_t0(r.lambda),
                    "gain at T0 over ceiling, lambda=" + fmt("%g", r.lambda));
    }
    // delta_hat non-increasing over the top half of the grid, 5% slack.
    for (std::size_t i = lambdas.size() / 2; i + 1 < lambdas.size(); ++i) {
        out.require(rep.rows[i + 1].delta_hat <=
                        rep.rows[i].delta_hat * 1.05,
                    "delta_hat increased between lambda=" +
                        fmt("%g", rep.rows[i].lambda) + " and " +
                        fmt("%g", rep.rows[i + 1].lambda));
    }
    out.note("delta_hat top half: " + fmt("%.4f", rep.rows[2].delta_hat) +
             " -> " + fmt("%.4f", rep.rows[3].delta_hat));
    return out;
}

// --- 7: constant-speed null case -------------------------------------------------

Outcome criterion_constant_null() {
    Outcome out;
    SpeedClassSpec spec{2.2, 2.3, 0.5, RateFunction::constant(2.0),
                        RateFunction::constant(1.0), 0.0, 2};
    spec.k0 = spec.auto_k0(log_grid(1e-8, 0.5, 1024));
    const PropagationSpeed c = constant_speed(2.25, 0.5);
    LossOptions lo;
    lo.tol = 1e-8;
    const std::vector<double> lambdas{1e5};
    const LossReport rep = measure_loss_exponent(c, spec, lambdas, lo);
    out.require(rep.rows[0].ok, "integration failed");
    out.require(rep.rows[0].delta_hat_excess <= 0.01,
                "delta_hat_excess = " + fmt("%.4f", rep.rows[0].delta_hat_excess));
    out.note("delta_hat_excess(1e5) = " + fmt("%.2e", rep.rows[0].delta_hat_excess));
    return out;
}

// --- 8: energy-derivative identities ----------------------------------------------

Outcome criterion_energy_identities() {
    Outcome out;
    const double lambda = 40.0;
    for (double alpha : {0.0, 0.5, 1.0}) {
        const PropagationSpeed c = model_speed_alpha(alpha, 0.5);
        std::vector<double> probes;
        for (int i = 0; i < 100; ++i) probes.push_back(0.1 + 0.0039 * i);
        std::vector<double> outs;
        for (double t : probes) {
            const double h = 1e-6 * t;
            outs.push_back(t - h);
            outs.push_back(t);
            outs.push_back(t + h);
        }
        std::sort(outs.begin(), outs.end());
        IntegrateOptions opt;
        opt.tol = 1e-12;

        opt.form = EquationForm::Direct;
        const Trajectory td = integrate(c, lambda, {0.05, 0.3, 1.0, 0.0, lambda},
                                        0.5, outs, opt);
        opt.form = EquationForm::Squared;
        const Trajectory ts = integrate(c, lambda, {0.05, 0.3, 1.0, 0.0, lambda},
                                        0.5, outs, opt);
        int checked = 0;
        for (double t : probes) {
            const double h = 1e-6 * t;
            {
                const double ep =
                    std::exp(energies(td.at(t + h), c, EquationForm::Direct).log_ehyp);
                const double em =
                    std::exp(energies(td.at(t - h), c, EquationForm::Direct).log_ehyp);
                const double fd = (ep - em) / (2.0 * h);
                const OscState& s = td.at(t);
                const double ut = s.u * std::exp(s.logscale);
                const double rhs = lambda * lambda * c.d1(t) * ut * ut;
                if (std::abs(fd) > 1e-8 && std::abs(rhs) > 1e-8) {
                    ++checked;
                    out.require(std::abs(rhs - fd) <= 1e-4 * std::abs(fd),
                                "E_Hyp' mismatch at t=" + fmt("%.3f", t) +
                                    " alpha=" + fmt("%g", alpha));
                }
            }
            {
                const double ep =
                    std::exp(energies(ts.at(t + h), c, EquationForm::Squared).log_etar);
                const double em =
                    std::exp(energies(ts.at(t - h), c, EquationForm::Squared).log_etar);
                const double fd = (ep - em) / (2.0 * h);
                const OscState& s = ts.at(t);
                const double ut = s.u * std::exp(s.logscale);
                const double vt = s.v * std::exp(s.logscale);
                const double cv = c.value(t), cp = c.d1(t), cpp = c.d2(t);
                const double rhs = (ut * ut * cp / (2.0 * cv * cv * cv) +
                                    ut * vt / (cv * cv)) *
                                   (cpp - 1.5 * cp * cp / cv);
                if (std::abs(fd) > 1e-8 && std::abs(rhs) > 1e-8) {
                    ++checked;
                    out.require(std::abs(rhs - fd) <= 1e-4 * std::abs(fd),
                                "E_Tar' mismatch at t=" + fmt("%.3f", t) +
                                    " alpha=" + fmt("%g", alpha));
                }
            }
        }
        out.require(checked >= 100, "only " + std::to_string(checked) +
                                        " usable sample points at alpha=" +
                                        fmt("%g", alpha));
    }
    return out;
}

// --- 9: continuous dependence ------------------------------------------------------

Outcome criterion_dependence() {
    Outcome out;
    const PropagationSpeed cinf = generic_constant_speed(2.0, 1.0);
    std::vector<PropagationSpeed> seq;
    for (int n = 4; n <= 10; ++n) {
        seq.push_back(sin_perturbed_speed(2.0, std::pow(0.5, n),
                                          static_cast<double>(n), 1.0));
    }
    IntegrateOptions opt;
    opt.tol = 1e-11;
    const auto devs = continuous_dependence_probe(seq, cinf, 10.0, 0.0, 1.0, opt);
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i + 1 < devs.size(); ++i) {
        const double ratio = devs[i + 1] / devs[i];
        worst_ratio = std::max(worst_ratio, ratio);
        out.require(ratio <= 0.6,
                    "deviation ratio " + fmt("%.3f", ratio) + " at n=" +
                        std::to_string(4 + static_cast<int>(i)));
    }
    out.note("worst consecutive ratio " + fmt("%.3f", worst_ratio));
    return out;
}

// --- 10: universal iteration ---------------------------------------------------------

Outcome criterion_iteration() {
    Outcome out;
    SpeedClassSpec spec{0.5, 2.0, 0.9, RateFunction::log(),
                        RateFunction::constant(1.0), 1.0, 1};
    IterateOptions io;
    io.margin = 0.05;
    const auto t0 = std::chrono::steady_clock::now();
    IterateResult res{constant_speed(1.0, 1.0), {}, {}, false};
    try {
        res = iterate_universal(spec, 1.25, 3, cutoff(), io);
    } catch (const std::exception& e) {
        out.require(false, std::string("iteration failed: ") + e.what());
        return out;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    out.require(res.complete, "did not complete");
    out.require(res.stages.size() == 3, "expected 3 stages");
    if (res.stages.size() != 3) return out;

    double prev_lambda = 0.0;
    for (const auto& st : res.stages) {
        out.require(st.lambda >= st.stage, "lambda_n < n");
        out.require(st.lambda > prev_lambda, "lambda not increasing");
        prev_lambda = st.lambda;
        out.require(st.certificate.pass,
                    "certificate failed at stage " + std::to_string(st.stage));
        out.require(st.certificate.closed_form_rel_err <= 1e-6,
                    "cross-check above 1e-6 at stage " + std::to_string(st.stage));
    }
    // 3 + 2 + 1 certificates in total.
    out.require(res.stages[0].reverified.size() == 2, "stage 1 reverifications");
    out.require(res.stages[1].reverified.size() == 1, "stage 2 reverifications");
    out.require(res.stages[2].reverified.empty(), "stage 3 reverifications");
    for (const auto& st : res.stages) {
        for (const auto& rc : st.reverified) {
            out.require(rc.pass, "re-verification failed for lambda=" +
                                     fmt("%g", rc.lambda));
            out.require(rc.margin > 0.0, "non-positive re-verification margin");
        }
    }

    // Stage equalities: gamma_n == gamma_{n-1} on [2^-n, T0], exactly, and
    // |gamma_n - gamma_{n-1}| <= 2^-n below.
    for (std::size_t n = 1; n < res.stage_speeds.size(); ++n) {
        const PropagationSpeed& cur = res.stage_speeds[n];
        const PropagationSpeed& prev = res.stage_speeds[n - 1];
        const double bound = std::pow(0.5, static_cast<double>(n));
        for (double t : linear_grid(bound, spec.t0, 64)) {
            if (cur.value(t) != prev.value(t)) {
                out.require(false, "stage equality broken at t=" + fmt("%.4f", t));
                break;
            }
        }
        double dev = 0.0;
        for (double t : log_grid(1e-9, bound, 20000)) {
            dev = std::max(dev, std::abs(cur.value(t) - prev.value(t)));
        }
        out.require(dev <= bound, "stage closeness " + fmt("%.3e", dev) +
                                      " above 2^-" + std::to_string(n));
    }

    // Weighted Sobolev terms: maximal term over stages non-decreasing for
    // beta in {0, 1, 2}.
    const std::vector<double> betas{0.0, 1.0, 2.0};
    const std::vector<double> ts{spec.t0 / 2.0};
    const std::vector<double> alphas{0.0, 1.0, 2.0};
    const SobolevCheck sob = sobolev_divergence_check(res, betas, ts, alphas);
    for (const auto& s : sob.summaries) {
        out.require(s.max_nondecreasing,
                    "max term decreased for beta=" + fmt("%g", s.beta));
    }
    std::string lams;
    for (const auto& st : res.stages) {
        if (!lams.empty()) lams += ", ";
        lams += fmt("%.5g", st.lambda);
    }
    out.note("lambdas {" + lams + "}, " + fmt("%.0f", secs) + " s");
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria{
        {"constant-speed oracle", criterion_constant_oracle},
        {"Wronskian invariance", criterion_wronskian},
        {"closed-form activator oracle", criterion_activator_oracle},
        {"growth bound", criterion_growth_bound},
        {"convergence of activators", criterion_convergence},
        {"three-zone chain", criterion_zone_chain},
        {"constant-speed null case", criterion_constant_null},
        {"energy-derivative identities", criterion_energy_identities},
        {"continuous dependence", criterion_dependence},
        {"universal iteration", criterion_iteration},
    };

    int failures = 0;
    const auto suite_start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const Outcome o = criteria[i].fn();
        std::printf("criterion %2zu %-32s %s%s%s\n", i + 1, criteria[i].name,
                    o.pass ? "PASS" : "FAIL", o.detail.empty() ? "" : "  -- ",
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      suite_start)
            .count();
    std::printf("acceptance: %zu/%zu criteria passed in %.0f s\n",
                criteria.size() - failures, criteria.size(), total);
    return failures == 0 ? 0 : 1;
}
