// losslab command-line driver: each verb maps onto one experiment kind,
// takes a JSON config and an output directory, and emits plot-ready tables.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "losslab/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int workers = 0;
    double tol = 0.0;
    unsigned long long seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--workers", args.workers, "worker threads (overrides config)");
    cmd->add_option("--tol", args.tol, "integrator tolerance (overrides config)");
    cmd->add_option("--seed", args.seed,
                    "reserved; all current computations are deterministic");
}

int run_verb(const CommonArgs& args,
             const std::vector<losslab::ExperimentKind>& allowed,
             bool force_grow, bool grow_value) {
    losslab::ExperimentConfig cfg;
    try {
        cfg = losslab::ExperimentConfig::load(args.config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    bool kind_ok = false;
    for (auto k : allowed) kind_ok = kind_ok || cfg.kind == k;
    if (!kind_ok) {
        std::fprintf(stderr,
                     "config error: experiment kind does not match this verb\n");
        return 2;
    }
    if (args.workers > 0) cfg.workers = args.workers;
    if (args.tol > 0.0) cfg.tol = args.tol;
    if (args.seed_set) cfg.seed = args.seed;
    if (force_grow) cfg.grow = grow_value;

    const losslab::RunResult res = losslab::run(cfg, args.out_dir);
    for (const auto& m : res.messages) std::fprintf(stderr, "%s\n", m.c_str());
    for (const auto& a : res.artifacts) std::printf("%s\n", a.c_str());
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "numerical laboratory for wave equations with time-singular speeds"};
    app.require_subcommand(1);

    using K = losslab::ExperimentKind;
    struct Verb {
        const char* name;
        const char* help;
        std::vector<K> kinds;
        bool force_grow;
        bool grow_value;
    };
    const std::vector<Verb> verbs{
        {"check-speed", "class membership / density of a speed",
         {K::Membership, K::Density}, false, false},
        {"sweep-fdl", "derivative-loss exponent sweep with zone chain",
         {K::FdlSweep}, false, false},
        {"build-activator", "activator windows: membership and convergence",
         {K::Activator}, true, false},
        {"verify-activator", "activator growth certificates",
         {K::Activator}, true, true},
        {"iterate-universal", "finite-stage universal-activator iteration",
         {K::Iterate}, false, false},
        {"probe-dependence", "continuous dependence on the coefficient",
         {K::Dependence}, false, false},
    };

    std::vector<CommonArgs> args(verbs.size());
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < verbs.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(verbs[i].name, verbs[i].help);
        add_common(cmd, args[i]);
        cmds.push_back(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < verbs.size(); ++i) {
        if (cmds[i]->parsed()) {
            args[i].seed_set = cmds[i]->count("--seed") > 0;
            return run_verb(args[i], verbs[i].kinds, verbs[i].force_grow,
                            verbs[i].grow_value);
        }
    }
    return 2;
}
