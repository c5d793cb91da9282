#include "losslab/oscillator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace losslab {
namespace {

constexpr double kRenormHi = 4294967296.0;         // 2^32
constexpr double kRenormLo = 1.0 / 4294967296.0;   // 2^-32

// Dormand-Prince 8(5,3) coefficients (Hairer's DOP853).
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double bhh1 = 0.244094488188976377952755905512e+00;
constexpr double bhh2 = 0.733846688281611857341361741547e+00;
constexpr double bhh3 = 0.220588235294117647058823529412e-01;

constexpr double er1 = 0.1312004499419488073250102996e-01;
constexpr double er6 = -0.1225156446376204440720569753e+01;
constexpr double er7 = -0.4957589496572501915214079952e+00;
constexpr double er8 = 0.1664377182454986536961530415e+01;
constexpr double er9 = -0.3503288487499736816886487290e+00;
constexpr double er10 = 0.3341791187130174790297318841e+00;
constexpr double er11 = 0.8192320648511571246570742613e-01;
constexpr double er12 = -0.2235530786388629525884427845e-01;

struct Vec2 {
    double u, v;
};

void renormalize(OscState& s) {
    const double m = std::max(std::abs(s.u), std::abs(s.v));
    if (m > kRenormHi || (m < kRenormLo && m > 0.0)) {
        s.u /= m;
        s.v /= m;
        s.logscale += std::log(m);
    }
}

double coeff_of(const PropagationSpeed& c, double t, EquationForm form) {
    const double v = c.value(t);
    return form == EquationForm::Squared ? v * v : v;
}

}  // namespace

OscState propagate_constant(const OscState& s, double gamma, double dt) {
    if (dt < 0.0) throw std::invalid_argument("propagate_constant: dt < 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("propagate_constant: gamma <= 0");
    const double w = gamma * s.lambda;
    const double th = w * dt;
    const double cs = std::cos(th);
    const double sn = std::sin(th);
    OscState out = s;
    out.t = s.t + dt;
    out.u = s.u * cs + s.v * sn / w;
    out.v = -s.u * w * sn + s.v * cs;
    renormalize(out);
    return out;
}

Trajectory integrate(const PropagationSpeed& c, double lambda,
                     const OscState& s0, double t1,
                     std::span<const double> output_times,
                     const IntegrateOptions& opt) {
    if (!(lambda > 0.0)) throw std::invalid_argument("integrate: lambda <= 0");
    if (!(s0.t < t1)) throw std::invalid_argument("integrate: need s0.t < t1");
    if (t1 > c.horizon() * (1.0 + 1e-12)) {
        throw std::invalid_argument("integrate: t1 beyond the speed horizon");
    }
    if (!(opt.tol >= 1e-14 && opt.tol <= 1e-3)) {
        throw std::invalid_argument("integrate: tol outside [1e-14, 1e-3]");
    }

    // Stops: output times within (t0, t1], segment boundaries, and t1.
    std::vector<double> stops(output_times.begin(), output_times.end());
    for (const auto& seg : c.segments()) {
        if (seg.t_hi > s0.t && seg.t_hi < t1) stops.push_back(seg.t_hi);
    }
    stops.push_back(t1);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::remove_if(stops.begin(), stops.end(),
                               [&](double x) { return x <= s0.t || x > t1; }),
                stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    std::vector<bool> is_output(stops.size(), false);
    {
        std::size_t j = 0;
        for (double ot : output_times) {
            while (j < stops.size() && stops[j] < ot) ++j;
            if (j < stops.size() && stops[j] == ot) is_output[j] = true;
        }
    }

    Trajectory traj;
    traj.lambda = lambda;
    traj.form = opt.form;
    traj.states.reserve(stops.size() + 1);

    OscState st = s0;
    st.lambda = lambda;
    const double span = t1 - s0.t;
    const double lam2 = lambda * lambda;
    auto q_at = [&](double t) { return lam2 * coeff_of(c, t, opt.form); };

    if (!output_times.empty() && output_times.front() == s0.t) {
        traj.states.push_back(st);
    }

    double h_guess = 0.0;
    Vec2 k1{};
    bool k1_valid = false;

    for (std::size_t si = 0; si < stops.size(); ++si) {
        const double target = stops[si];
        while (st.t < target) {
            if (target - st.t <= 1e-15 * std::max(1.0, std::abs(target))) break;
            // Bias the lookup forward: boundaries belong to the earlier
            // segment, but from a boundary we integrate into the next one.
            const SpeedSegment& s = c.segment_at(std::nextafter(st.t, target));
            const double seg_end = std::min(s.t_hi, target);
            if (s.kind == SegmentKind::Constant) {
                const double geff = std::sqrt(
                    opt.form == EquationForm::Squared
                        ? s.const_value * s.const_value
                        : s.const_value);
                st = propagate_constant(st, geff, seg_end - st.t);
                st.t = seg_end;
                k1_valid = false;
                continue;
            }

            auto rhs = [&](double t, double u, double v) -> Vec2 {
                return {v, -q_at(t) * u};
            };
            const double q0 = q_at(st.t);
            const double wfreq = std::sqrt(std::max(q0, 1e-300));
            double h_cap = 0.1 / wfreq;
            const double cp = s.coeff_period ? s.coeff_period(st.t) : 0.0;
            if (cp > 0.0) h_cap = std::min(h_cap, cp / 20.0);
            if (h_guess <= 0.0) h_guess = h_cap;
            double h = std::min({h_guess, h_cap, seg_end - st.t});

            if (!k1_valid) {
                k1 = rhs(st.t, st.u, st.v);
                k1_valid = true;
            }
            for (;;) {
                if (h < 1e-16 * span) {
                    throw std::runtime_error(
                        "integrate: step underflow at t=" + std::to_string(st.t));
                }
                const double t = st.t, u = st.u, v = st.v;
                auto stage = [&](double ci, double au, double av) {
                    return rhs(t + ci * h, u + h * au, v + h * av);
                };
                const Vec2 k2 = stage(c2, a21 * k1.u, a21 * k1.v);
                const Vec2 k3 = stage(c3, a31 * k1.u + a32 * k2.u,
                                      a31 * k1.v + a32 * k2.v);
                const Vec2 k4 =
                    stage(c4, a41 * k1.u + a43 * k3.u, a41 * k1.v + a43 * k3.v);
                const Vec2 k5 = stage(c5, a51 * k1.u + a53 * k3.u + a54 * k4.u,
                                      a51 * k1.v + a53 * k3.v + a54 * k4.v);
                const Vec2 k6 = stage(c6, a61 * k1.u + a64 * k4.u + a65 * k5.u,
                                      a61 * k1.v + a64 * k4.v + a65 * k5.v);
                const Vec2 k7 =
                    stage(c7, a71 * k1.u + a74 * k4.u + a75 * k5.u + a76 * k6.u,
                          a71 * k1.v + a74 * k4.v + a75 * k5.v + a76 * k6.v);
                const Vec2 k8 = stage(c8,
                                      a81 * k1.u + a84 * k4.u + a85 * k5.u +
                                          a86 * k6.u + a87 * k7.u,
                                      a81 * k1.v + a84 * k4.v + a85 * k5.v +
                                          a86 * k6.v + a87 * k7.v);
                const Vec2 k9 = stage(c9,
                                      a91 * k1.u + a94 * k4.u + a95 * k5.u +
                                          a96 * k6.u + a97 * k7.u + a98 * k8.u,
                                      a91 * k1.v + a94 * k4.v + a95 * k5.v +
                                          a96 * k6.v + a97 * k7.v + a98 * k8.v);
                const Vec2 k10 =
                    stage(c10,
                          a101 * k1.u + a104 * k4.u + a105 * k5.u + a106 * k6.u +
                              a107 * k7.u + a108 * k8.u + a109 * k9.u,
                          a101 * k1.v + a104 * k4.v + a105 * k5.v + a106 * k6.v +
                              a107 * k7.v + a108 * k8.v + a109 * k9.v);
                const Vec2 k11 =
                    stage(c11,
                          a111 * k1.u + a114 * k4.u + a115 * k5.u + a116 * k6.u +
                              a117 * k7.u + a118 * k8.u + a119 * k9.u +
                              a1110 * k10.u,
                          a111 * k1.v + a114 * k4.v + a115 * k5.v + a116 * k6.v +
                              a117 * k7.v + a118 * k8.v + a119 * k9.v +
                              a1110 * k10.v);
                const Vec2 k12 =
                    stage(1.0,
                          a121 * k1.u + a124 * k4.u + a125 * k5.u + a126 * k6.u +
                              a127 * k7.u + a128 * k8.u + a129 * k9.u +
                              a1210 * k10.u + a1211 * k11.u,
                          a121 * k1.v + a124 * k4.v + a125 * k5.v + a126 * k6.v +
                              a127 * k7.v + a128 * k8.v + a129 * k9.v +
                              a1210 * k10.v + a1211 * k11.v);

                const double su = b1 * k1.u + b6 * k6.u + b7 * k7.u + b8 * k8.u +
                                  b9 * k9.u + b10 * k10.u + b11 * k11.u +
                                  b12 * k12.u;
                const double sv = b1 * k1.v + b6 * k6.v + b7 * k7.v + b8 * k8.v +
                                  b9 * k9.v + b10 * k10.v + b11 * k11.v +
                                  b12 * k12.v;
                const double un = u + h * su;
                const double vn = v + h * sv;

                // Hairer's combined 5th/3rd-order error estimate.
                const double e5u = h * (er1 * k1.u + er6 * k6.u + er7 * k7.u +
                                        er8 * k8.u + er9 * k9.u + er10 * k10.u +
                                        er11 * k11.u + er12 * k12.u);
                const double e5v = h * (er1 * k1.v + er6 * k6.v + er7 * k7.v +
                                        er8 * k8.v + er9 * k9.v + er10 * k10.v +
                                        er11 * k11.v + er12 * k12.v);
                const double e3u =
                    h * (su - bhh1 * k1.u - bhh2 * k9.u - bhh3 * k12.u);
                const double e3v =
                    h * (sv - bhh1 * k1.v - bhh2 * k9.v - bhh3 * k12.v);

                // Energy-consistent scale: u carries weight wfreq so both
                // components are commensurable.
                const double sc = std::max(
                    {wfreq * std::abs(u), std::abs(v), wfreq * std::abs(un),
                     std::abs(vn), 1e-300});
                const double n5 =
                    std::hypot(wfreq * e5u, e5v) / (sc * std::sqrt(2.0));
                const double n3 =
                    std::hypot(wfreq * e3u, e3v) / (sc * std::sqrt(2.0));
                const double den =
                    std::sqrt(n5 * n5 + 0.01 * n3 * n3);
                const double err = den > 0.0 ? n5 * n5 / den : 0.0;
                const double tol_step = opt.tol * (h / span);
                if (err <= tol_step) {
                    st.t = t + h;
                    if (seg_end - st.t <= 1e-15 * std::max(1.0, std::abs(seg_end))) {
                        st.t = seg_end;
                    }
                    st.u = un;
                    st.v = vn;
                    const double m = std::max(std::abs(st.u), std::abs(st.v));
                    if (m > kRenormHi || m < kRenormLo) renormalize(st);
                    k1_valid = false;
                    const double grow =
                        err > 0.0
                            ? std::min(6.0,
                                       0.9 * std::pow(tol_step / err, 1.0 / 7.0))
                            : 6.0;
                    h_guess = h * grow;
                    break;
                }
                h *= std::max(0.2, 0.9 * std::pow(tol_step / err, 1.0 / 7.0));
            }
        }
        st.t = target;
        if (is_output[si]) traj.states.push_back(st);
    }
    return traj;
}

const OscState& Trajectory::at(double t) const {
    auto it = std::lower_bound(
        states.begin(), states.end(), t,
        [](const OscState& s, double x) { return s.t < x; });
    if (it == states.end() || std::abs(it->t - t) > 1e-12 * std::max(1.0, std::abs(t))) {
        throw std::invalid_argument("Trajectory::at: t is not an output time");
    }
    return *it;
}

EnergyTriple energies(const OscState& s, const PropagationSpeed& c,
                      EquationForm form) {
    const double lu = s.lambda * s.u;
    if (s.u == 0.0 && s.v == 0.0) {
        throw std::domain_error("energies: zero state");
    }
    auto log_pos = [](double x) {
        return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
    };
    const double cv = c.value(s.t);
    const double cp = c.d1(s.t);
    EnergyTriple e{};
    e.log_ekov = log_pos(s.v * s.v + lu * lu) + 2.0 * s.logscale;
    if (form == EquationForm::Direct) {
        e.log_ehyp = log_pos(s.v * s.v + cv * lu * lu) + 2.0 * s.logscale;
        const double sq = std::sqrt(cv);
        const double w = s.v + cp / (4.0 * cv) * s.u;
        e.log_etar = log_pos(w * w / sq + sq * lu * lu) + 2.0 * s.logscale;
    } else {
        e.log_ehyp = log_pos(s.v * s.v + cv * cv * lu * lu) + 2.0 * s.logscale;
        const double et = s.v * s.v / cv + cv * lu * lu +
                          cp * cp * s.u * s.u / (4.0 * cv * cv * cv) +
                          cp * s.u * s.v / (cv * cv);
        e.log_etar = log_pos(et) + 2.0 * s.logscale;
    }
    return e;
}

double wronskian(const Trajectory& a, const Trajectory& b, double t) {
    const OscState& s1 = a.at(t);
    const OscState& s2 = b.at(t);
    return (s1.u * s2.v - s2.u * s1.v) * std::exp(s1.logscale + s2.logscale);
}

std::vector<double> continuous_dependence_probe(
    std::span<const PropagationSpeed> c_seq, const PropagationSpeed& c_inf,
    double lambda, double t_start, double t1, const IntegrateOptions& opt) {
    std::vector<double> outputs;
    const int n_out = 257;
    for (int i = 0; i < n_out; ++i) {
        outputs.push_back(t_start + (t1 - t_start) * static_cast<double>(i) /
                                        (n_out - 1));
    }
    OscState s0{t_start, 0.0, 1.0, 0.0, lambda};
    const Trajectory ref = integrate(c_inf, lambda, s0, t1, outputs, opt);
    std::vector<double> devs;
    devs.reserve(c_seq.size());
    for (const auto& cn : c_seq) {
        const Trajectory tn = integrate(cn, lambda, s0, t1, outputs, opt);
        double dev = 0.0;
        for (std::size_t i = 0; i < ref.states.size(); ++i) {
            const auto& r = ref.states[i];
            const auto& x = tn.states[i];
            const double er = std::exp(r.logscale);
            const double ex = std::exp(x.logscale);
            dev = std::max(dev, std::abs(x.u * ex - r.u * er));
            dev = std::max(dev, std::abs(x.v * ex - r.v * er));
        }
        devs.push_back(dev);
    }
    return devs;
}

}  // namespace losslab
