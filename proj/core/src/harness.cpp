#include "losslab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "losslab/grid.hpp"
#include "losslab/oscillator.hpp"
#include "losslab/parallel.hpp"

namespace losslab {

using nlohmann::json;

std::vector<double> LambdaGridSpec::values() const {
    std::vector<double> v;
    double x = start;
    for (int i = 0; i < count; ++i) {
        v.push_back(x);
        x *= ratio;
    }
    return v;
}

PropagationSpeed SpeedSelector::build() const {
    if (family == "constant") return constant_speed(value, t0);
    if (family == "generic-constant") return generic_constant_speed(value, t0);
    if (family == "alpha") return model_speed_alpha(alpha, t0);
    if (family == "sin-perturbed") {
        return sin_perturbed_speed(value, amp, freq, t0);
    }
    if (family == "table") {
        SpeedTableData d = read_speed_table(table_path);
        return tabulated_speed(std::move(d.t), std::move(d.c), std::move(d.c1), t0);
    }
    throw std::invalid_argument("SpeedSelector: unknown family '" + family + "'");
}

SpeedClassSpec SpecParams::build() const {
    SpeedClassSpec s{mu1,
                     mu2,
                     t0,
                     RateFunction::parse(omega_kind, omega_param),
                     RateFunction::parse(psi_kind, psi_param),
                     k0,
                     order};
    if (s.k0 <= 0.0) {
        const auto grid = log_grid(std::max(1e-8, t0 * 1e-8), t0, 4096);
        s.k0 = s.auto_k0(grid);
    }
    return s;
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> problems;
    const std::vector<std::string> families{"constant", "generic-constant",
                                            "alpha", "sin-perturbed", "table"};
    if (std::find(families.begin(), families.end(), speed.family) ==
        families.end()) {
        problems.push_back("speed.family must be one of constant|generic-constant|alpha|sin-perturbed|table");
    }
    if (speed.family == "alpha" && !(speed.alpha >= 0.0 && speed.alpha <= 1.0)) {
        problems.push_back("speed.alpha must lie in [0, 1]");
    }
    if (!(speed.t0 > 0.0)) problems.push_back("speed.t0 must be positive");
    if (!(spec.mu1 > 0.0 && spec.mu2 > spec.mu1)) {
        problems.push_back("spec needs 0 < mu1 < mu2");
    }
    if (spec.order != 1 && spec.order != 2) {
        problems.push_back("spec.order must be 1 or 2");
    }
    if (!(tol >= 1e-14 && tol <= 1e-3)) {
        problems.push_back("tol outside the integrator range [1e-14, 1e-3]");
    }
    if (workers < 1) problems.push_back("workers must be >= 1");
    const bool needs_lambda = kind == ExperimentKind::FdlSweep ||
                              kind == ExperimentKind::Activator;
    if (needs_lambda) {
        if (!(lambda_grid.start > 1.0) || !(lambda_grid.ratio > 1.0) ||
            lambda_grid.count < 1) {
            problems.push_back(
                "lambda_grid needs start > 1, ratio > 1, count >= 1");
        }
    }
    if (kind == ExperimentKind::Activator && schedule != "c1" && schedule != "c2") {
        problems.push_back("schedule must be c1 or c2");
    }
    if (kind == ExperimentKind::Iterate && (stages < 1 || stages > 8)) {
        problems.push_back("stages must be 1..8");
    }
    if (kind == ExperimentKind::Dependence && !(n_end >= n_start)) {
        problems.push_back("dependence needs n_end >= n_start");
    }
    return problems;
}

namespace {

const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Membership: return "membership";
        case ExperimentKind::FdlSweep: return "fdl-sweep";
        case ExperimentKind::Activator: return "activator";
        case ExperimentKind::Iterate: return "iterate";
        case ExperimentKind::Density: return "density";
        case ExperimentKind::Dependence: return "dependence";
    }
    return "?";
}

ExperimentKind kind_from(const std::string& s) {
    if (s == "membership") return ExperimentKind::Membership;
    if (s == "fdl-sweep") return ExperimentKind::FdlSweep;
    if (s == "activator") return ExperimentKind::Activator;
    if (s == "iterate") return ExperimentKind::Iterate;
    if (s == "density") return ExperimentKind::Density;
    if (s == "dependence") return ExperimentKind::Dependence;
    throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    json j;
    j["kind"] = kind_name(kind);
    j["speed"] = {{"family", speed.family}, {"value", speed.value},
                  {"alpha", speed.alpha},   {"amp", speed.amp},
                  {"freq", speed.freq},     {"t0", speed.t0},
                  {"table_path", speed.table_path}};
    j["spec"] = {{"mu1", spec.mu1},
                 {"mu2", spec.mu2},
                 {"t0", spec.t0},
                 {"omega", {{"kind", spec.omega_kind}, {"param", spec.omega_param}}},
                 {"psi", {{"kind", spec.psi_kind}, {"param", spec.psi_param}}},
                 {"k0", spec.k0},
                 {"order", spec.order}};
    j["lambda_grid"] = {{"start", lambda_grid.start},
                        {"ratio", lambda_grid.ratio},
                        {"count", lambda_grid.count}};
    j["tol"] = tol;
    j["workers"] = workers;
    j["seed"] = seed;
    j["format"] = format == TableFormat::Csv ? "csv" : "json-lines";
    j["activator"] = {{"gamma", gamma},
                      {"schedule", schedule},
                      {"grow", grow},
                      {"emit_trajectory", emit_trajectory}};
    j["iterate"] = {{"stages", stages}, {"margin", margin}, {"gamma0", gamma0}};
    j["density"] = {{"delta0", delta0},
                    {"factor", delta_factor},
                    {"count", delta_count}};
    j["dependence"] = {{"n_start", n_start},
                       {"n_end", n_end},
                       {"lambda", dep_lambda},
                       {"t1", dep_t1}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    c.kind = kind_from(j.at("kind").get<std::string>());
    const json& sp = j.at("speed");
    c.speed.family = sp.at("family").get<std::string>();
    c.speed.value = sp.value("value", 0.0);
    c.speed.alpha = sp.value("alpha", 0.0);
    c.speed.amp = sp.value("amp", 0.0);
    c.speed.freq = sp.value("freq", 0.0);
    c.speed.t0 = sp.value("t0", 0.5);
    c.speed.table_path = sp.value("table_path", std::string{});
    const json& sc = j.at("spec");
    c.spec.mu1 = sc.at("mu1").get<double>();
    c.spec.mu2 = sc.at("mu2").get<double>();
    c.spec.t0 = sc.value("t0", c.speed.t0);
    c.spec.omega_kind = sc.at("omega").at("kind").get<std::string>();
    c.spec.omega_param = sc.at("omega").value("param", 1.0);
    c.spec.psi_kind = sc.at("psi").at("kind").get<std::string>();
    c.spec.psi_param = sc.at("psi").value("param", 1.0);
    c.spec.k0 = sc.value("k0", 0.0);
    c.spec.order = sc.value("order", 1);
    if (j.contains("lambda_grid")) {
        c.lambda_grid.start = j["lambda_grid"].value("start", 0.0);
        c.lambda_grid.ratio = j["lambda_grid"].value("ratio", 0.0);
        c.lambda_grid.count = j["lambda_grid"].value("count", 0);
    }
    c.tol = j.value("tol", 1e-8);
    c.workers = j.value("workers", 1);
    c.seed = j.value("seed", 0ULL);
    c.format = j.value("format", std::string("csv")) == "json-lines"
                   ? TableFormat::JsonLines
                   : TableFormat::Csv;
    if (j.contains("activator")) {
        c.gamma = j["activator"].value("gamma", 1.0);
        c.schedule = j["activator"].value("schedule", std::string("c1"));
        c.grow = j["activator"].value("grow", false);
        c.emit_trajectory = j["activator"].value("emit_trajectory", false);
    }
    if (j.contains("iterate")) {
        c.stages = j["iterate"].value("stages", 3);
        c.margin = j["iterate"].value("margin", 0.05);
        c.gamma0 = j["iterate"].value("gamma0", 0.0);
    }
    if (j.contains("density")) {
        c.delta0 = j["density"].value("delta0", 0.1);
        c.delta_factor = j["density"].value("factor", 0.5);
        c.delta_count = j["density"].value("count", 6);
    }
    if (j.contains("dependence")) {
        c.n_start = j["dependence"].value("n_start", 4);
        c.n_end = j["dependence"].value("n_end", 10);
        c.dep_lambda = j["dependence"].value("lambda", 10.0);
        c.dep_t1 = j["dependence"].value("t1", 1.0);
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return from_json(ss.str());
}

namespace {

std::string ext(TableFormat f) {
    return f == TableFormat::Csv ? ".csv" : ".jsonl";
}

void emit(const Table& t, const std::filesystem::path& dir,
          const std::string& stem, const ExperimentConfig& cfg,
          RunResult& out) {
    const auto path = dir / (stem + ext(cfg.format));
    write_table(t, path, cfg.format);
    out.artifacts.push_back(path.string());
}

RunResult run_membership(const ExperimentConfig& cfg,
                         const std::filesystem::path& dir) {
    RunResult out;
    const PropagationSpeed c = cfg.speed.build();
    const SpeedClassSpec spec = cfg.spec.build();
    const auto grid = log_grid_per_decade(
        std::max(kTimeFloor * 10.0, spec.t0 * 1e-7), spec.t0,
        kDefaultPointsPerDecade);
    const MembershipReport rep = membership_report(c, spec, grid);
    Table t;
    t.header = {"bound", "max_ratio", "argmax_t", "pass"};
    auto row = [&](const char* name, const BoundCheck& b) {
        t.rows.push_back({std::string(name), b.max_ratio, b.argmax_t,
                          b.max_ratio <= 1.0 + 1e-12});
    };
    row("lower", rep.lower);
    row("upper", rep.upper);
    row("deriv1", rep.deriv1);
    if (spec.order == 2) row("deriv2", rep.deriv2);
    emit(t, dir, "membership", cfg, out);
    emit(speed_table(c, log_grid(std::max(kTimeFloor * 10.0, spec.t0 * 1e-6),
                                 spec.t0, 2048),
                     c.has_d2()),
         dir, "speed", cfg, out);
    out.messages.push_back(rep.pass ? "membership: pass" : "membership: fail");
    if (!rep.pass) out.exit_code = 1;
    return out;
}

RunResult run_fdl(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    RunResult out;
    const PropagationSpeed c = cfg.speed.build();
    const SpeedClassSpec spec = cfg.spec.build();
    LossOptions lo;
    lo.tol = cfg.tol;
    lo.workers = cfg.workers;
    const auto lambdas = cfg.lambda_grid.values();
    const LossReport rep = measure_loss_exponent(c, spec, lambdas, lo);
    emit(loss_report_table(rep), dir, "loss_report", cfg, out);

    std::vector<ZoneChainRecord> chains(lambdas.size());
    parallel_for(lambdas.size(), cfg.workers, [&](std::size_t i) {
        chains[i] = verify_zone_chain(c, lambdas[i], spec, lo.tol);
    });
    emit(zone_chain_table(chains), dir, "zone_chain", cfg, out);

    bool chain_ok = true;
    for (const auto& z : chains) chain_ok = chain_ok && z.pass;
    bool comp_ok = true;
    for (const auto& r : rep.rows) comp_ok = comp_ok && r.ok;
    out.messages.push_back(std::string("fdl-sweep: trend ") +
                           (rep.pass ? "pass" : "fail") + ", zone chain " +
                           (chain_ok ? "pass" : "fail"));
    if (!comp_ok) out.exit_code = 3;
    else if (!rep.pass || !chain_ok) out.exit_code = 1;
    return out;
}

RunResult run_activator(const ExperimentConfig& cfg,
                        const std::filesystem::path& dir) {
    RunResult out;
    const SpeedClassSpec spec = cfg.spec.build();
    const CutoffFunction theta;
    const double g2 = cfg.gamma * cfg.gamma;
    const PropagationSpeed host = constant_speed(g2, spec.t0);
    const auto lambdas = cfg.lambda_grid.values();
    const auto schedule = cfg.schedule == "c2" ? ActivatorSchedule::C2
                                               : ActivatorSchedule::C1;
    const auto grid = log_grid_per_decade(std::max(1e-9, spec.t0 * 1e-8),
                                          spec.t0, 1024);
    const auto rows = verify_convergence(host, spec, lambdas, schedule,
                                         cfg.gamma, grid, theta);
    emit(convergence_table(rows), dir, "convergence", cfg, out);

    if (cfg.grow) {
        std::vector<GrowthCertificate> certs;
        for (double lambda : lambdas) {
            ActivatorWindow w;
            try {
                if (schedule == ActivatorSchedule::C1) {
                    w = schedule_c1(lambda, cfg.gamma, spec.omega);
                } else {
                    w = schedule_c2(lambda, cfg.gamma, spec).first;
                }
            } catch (const std::domain_error&) {
                continue;  // infeasible row, already reported above
            }
            if (!w.geometry_ok(spec.t0)) continue;
            const PropagationSpeed cl = build_activator(host, w, theta);
            std::vector<double> cps{spec.t0};
            if (spec.t0 / 2.0 > w.b) cps.insert(cps.begin(), spec.t0 / 2.0);
            GrowthOptions go;
            go.tol = std::min(cfg.tol, 1e-8);
            certs.push_back(verify_growth(cl, w, cps, spec, theta, go));
            if (cfg.emit_trajectory && certs.size() == 1) {
                OscState s0{0.0, 0.0, 1.0, 0.0, lambda};
                IntegrateOptions io;
                io.tol = go.tol;
                io.form = EquationForm::Direct;
                const auto outs = linear_grid(w.a, w.b, 513);
                const Trajectory tr = integrate(cl, lambda, s0, w.b, outs, io);
                emit(trajectory_table(tr, cl), dir, "window_trajectory", cfg, out);
            }
        }
        emit(certificate_table(certs), dir, "certificates", cfg, out);
        emit(certificate_checkpoint_table(certs), dir, "checkpoints", cfg, out);
    }
    out.messages.push_back("activator: reported " +
                           std::to_string(rows.size()) + " rows");
    return out;
}

RunResult run_iterate(const ExperimentConfig& cfg,
                      const std::filesystem::path& dir) {
    RunResult out;
    const SpeedClassSpec spec = cfg.spec.build();
    const CutoffFunction theta;
    const double g0 = cfg.gamma0 > 0.0 ? cfg.gamma0 : 0.5 * (spec.mu1 + spec.mu2);
    IterateOptions io;
    io.margin = cfg.margin;
    io.workers = cfg.workers;
    const IterateResult res = iterate_universal(spec, g0, cfg.stages, theta, io);

    std::vector<GrowthCertificate> certs;
    for (const auto& st : res.stages) {
        certs.push_back(st.certificate);
        for (const auto& rc : st.reverified) certs.push_back(rc);
    }
    emit(certificate_table(certs), dir, "certificates", cfg, out);
    emit(certificate_checkpoint_table(certs), dir, "checkpoints", cfg, out);

    std::vector<double> betas{0.0, 1.0, 2.0, 4.0};
    std::vector<double> ts;
    for (int i = 1; i <= cfg.stages; ++i) ts.push_back(spec.t0 / std::pow(2.0, i));
    std::vector<double> alphas{0.0, 1.0, 2.0};
    const SobolevCheck sob = sobolev_divergence_check(res, betas, ts, alphas);
    Table st;
    st.header = {"stage", "beta", "t", "log_term"};
    for (const auto& r : sob.rows) {
        st.rows.push_back({static_cast<long long>(r.stage), r.beta, r.t, r.log_term});
    }
    emit(st, dir, "sobolev_terms", cfg, out);
    Table sum;
    sum.header = {"beta", "max_nondecreasing", "terms_increasing",
                  "insufficient_range"};
    for (const auto& s : sob.summaries) {
        sum.rows.push_back({s.beta, s.max_nondecreasing, s.terms_increasing,
                            s.insufficient_range});
    }
    emit(sum, dir, "sobolev_summary", cfg, out);

    bool all_pass = res.complete;
    for (const auto& c : certs) all_pass = all_pass && c.pass;
    out.messages.push_back(std::string("iterate: ") +
                           (all_pass ? "all certificates pass" : "failed"));
    if (!all_pass) out.exit_code = 1;
    return out;
}

RunResult run_density(const ExperimentConfig& cfg,
                      const std::filesystem::path& dir) {
    RunResult out;
    const PropagationSpeed c = cfg.speed.build();
    const SpeedClassSpec spec = cfg.spec.build();
    const CutoffFunction theta;
    std::vector<double> deltas;
    double d = cfg.delta0;
    for (int i = 0; i < cfg.delta_count; ++i, d *= cfg.delta_factor) {
        deltas.push_back(d);
    }
    const auto grid = log_grid_per_decade(std::max(kTimeFloor * 10.0, 1e-7),
                                          spec.t0, kDefaultPointsPerDecade);
    const auto rows = density_check(c, spec, deltas, grid, theta);
    emit(density_table(rows), dir, "density", cfg, out);
    out.messages.push_back("density: reported " + std::to_string(rows.size()) +
                           " rows");
    return out;
}

RunResult run_dependence(const ExperimentConfig& cfg,
                         const std::filesystem::path& dir) {
    RunResult out;
    const PropagationSpeed c_inf = cfg.speed.build();
    std::vector<PropagationSpeed> seq;
    for (int n = cfg.n_start; n <= cfg.n_end; ++n) {
        seq.push_back(sin_perturbed_speed(cfg.speed.value, std::pow(0.5, n),
                                          static_cast<double>(n), cfg.speed.t0));
    }
    IntegrateOptions io;
    io.tol = cfg.tol;
    const auto devs = continuous_dependence_probe(
        seq, c_inf, cfg.dep_lambda, kTimeFloor,
        std::min(cfg.dep_t1, cfg.speed.t0), io);
    emit(dependence_table(devs, cfg.n_start), dir, "dependence", cfg, out);
    out.messages.push_back("dependence: reported " + std::to_string(devs.size()) +
                           " rows");
    return out;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    RunResult out;
    const auto problems = cfg.validate();
    if (!problems.empty()) {
        out.exit_code = 2;
        out.messages = problems;
        return out;
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    try {
        switch (cfg.kind) {
            case ExperimentKind::Membership: return run_membership(cfg, out_dir);
            case ExperimentKind::FdlSweep: return run_fdl(cfg, out_dir);
            case ExperimentKind::Activator: return run_activator(cfg, out_dir);
            case ExperimentKind::Iterate: return run_iterate(cfg, out_dir);
            case ExperimentKind::Density: return run_density(cfg, out_dir);
            case ExperimentKind::Dependence: return run_dependence(cfg, out_dir);
        }
    } catch (const std::exception& e) {
        out.exit_code = 3;
        out.messages.push_back(std::string("computation failed: ") + e.what());
    }
    return out;
}

}  // namespace losslab
