#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "losslab/grid.hpp"
#include "losslab/harness.hpp"
#include "losslab/oscillator.hpp"
#include "losslab/table_io.hpp"
#include "tests/support.hpp"

using namespace losslab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("losslab_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig membership_config() {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Membership;
    cfg.speed.family = "alpha";
    cfg.speed.alpha = 0.0;
    cfg.speed.t0 = 0.5;
    cfg.spec.mu1 = 0.5;
    cfg.spec.mu2 = 3.5;
    cfg.spec.t0 = 0.5;
    cfg.spec.omega_kind = "constant";
    cfg.spec.omega_param = 2.0;
    cfg.spec.psi_kind = "constant";
    cfg.spec.psi_param = 1.0;
    cfg.spec.order = 1;
    return cfg;
}

}  // namespace

TEST_CASE("format_g17 renders full precision") {
    CHECK(format_g17(1.0) == "1");
    CHECK(format_g17(0.1) == "0.10000000000000001");
    const double x = 2.0 + 0.2 * std::sin(5.0);
    CHECK(std::stod(format_g17(x)) == x);
}

TEST_CASE("config JSON round-trip") {
    ExperimentConfig cfg = membership_config();
    cfg.kind = ExperimentKind::Activator;
    cfg.lambda_grid = {1e3, 10.0, 4};
    cfg.tol = 1e-9;
    cfg.workers = 3;
    cfg.gamma = 1.0;
    cfg.schedule = "c2";
    cfg.grow = true;
    cfg.margin = 0.07;
    const std::string once = cfg.to_json();
    const ExperimentConfig back = ExperimentConfig::from_json(once);
    CHECK(back.to_json() == once);
    CHECK(back.kind == ExperimentKind::Activator);
    CHECK(back.lambda_grid.count == 4);
    CHECK(back.schedule == "c2");
    CHECK(back.grow);
    CHECK(back.tol == 1e-9);
}

TEST_CASE("config validation lists every problem at once") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::FdlSweep;
    cfg.speed.family = "nope";
    cfg.spec.mu1 = -1.0;
    cfg.spec.mu2 = 0.5;
    cfg.spec.order = 7;
    cfg.tol = 1.0;
    cfg.workers = 0;
    cfg.lambda_grid = {0.0, 0.0, 0};
    const auto problems = cfg.validate();
    CHECK(problems.size() >= 5);

    const fs::path dir = temp_dir("badcfg");
    const RunResult res = run(cfg, dir);
    CHECK(res.exit_code == 2);
    CHECK(res.messages.size() == problems.size());
}

TEST_CASE("membership experiment: deterministic artifacts, exit 0") {
    const ExperimentConfig cfg = membership_config();
    const fs::path d1 = temp_dir("mem1");
    const fs::path d2 = temp_dir("mem2");
    const RunResult r1 = run(cfg, d1);
    const RunResult r2 = run(cfg, d2);
    CHECK(r1.exit_code == 0);
    REQUIRE(r1.artifacts.size() == 2);
    // Byte-identical outputs across reruns.
    for (std::size_t i = 0; i < r1.artifacts.size(); ++i) {
        CHECK(slurp(r1.artifacts[i]) == slurp(r2.artifacts[i]));
    }
    const std::string head = slurp(r1.artifacts[0]);
    CHECK(head.rfind("bound,max_ratio,argmax_t,pass", 0) == 0);

    // The same speed against an envelope it violates: exit 1.
    ExperimentConfig bad = cfg;
    bad.spec.omega_param = 0.5;
    const RunResult rb = run(bad, temp_dir("mem3"));
    CHECK(rb.exit_code == 1);
}

TEST_CASE("speed table export format and import round-trip") {
    const PropagationSpeed c = model_speed_alpha(0.5, 0.5);
    const auto grid = log_grid(1e-4, 0.5, 256);
    const fs::path dir = temp_dir("speedtab");
    const fs::path path = dir / "speed.csv";
    write_table(speed_table(c, grid, true), path, TableFormat::Csv);

    const std::string text = slurp(path);
    CHECK(text.rfind("t,c,c1,c2", 0) == 0);
    CHECK(text.find("\r") == std::string::npos);  // LF only

    const SpeedTableData data = read_speed_table(path);
    REQUIRE(data.t.size() == grid.size());
    CHECK(data.has_c2);
    // Full double precision survives the round trip.
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(data.t[i] == grid[i]);
        CHECK(data.c[i] == c.value(grid[i]));
    }

    // Interpolated re-import evaluates close to the original between nodes.
    const PropagationSpeed imported = tabulated_speed(
        std::move(const_cast<SpeedTableData&>(data).t),
        std::move(const_cast<SpeedTableData&>(data).c),
        std::move(const_cast<SpeedTableData&>(data).c1), 0.5);
    for (double t : {0.1, 0.2, 0.3, 0.45}) {
        CHECK(imported.value(t) == doctest::Approx(c.value(t)).epsilon(1e-6));
    }
}

TEST_CASE("json-lines emission") {
    ExperimentConfig cfg = membership_config();
    cfg.format = TableFormat::JsonLines;
    const fs::path dir = temp_dir("jsonl");
    const RunResult r = run(cfg, dir);
    REQUIRE(!r.artifacts.empty());
    CHECK(r.artifacts[0].find(".jsonl") != std::string::npos);
    const std::string text = slurp(r.artifacts[0]);
    CHECK(text.rfind("{\"bound\":", 0) == 0);
}

TEST_CASE("empty lambda grid yields a header-only table") {
    Table t;
    t.header = {"lambda", "a", "b"};
    const fs::path dir = temp_dir("empty");
    write_table(t, dir / "empty.csv", TableFormat::Csv);
    CHECK(slurp(dir / "empty.csv") == "lambda,a,b\n");
}

TEST_CASE("dependence experiment end to end") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Dependence;
    cfg.speed.family = "generic-constant";
    cfg.speed.value = 2.0;
    cfg.speed.t0 = 1.0;
    cfg.spec.mu1 = 1.5;
    cfg.spec.mu2 = 2.5;
    cfg.spec.t0 = 1.0;
    cfg.tol = 1e-10;
    cfg.n_start = 4;
    cfg.n_end = 8;
    cfg.dep_lambda = 10.0;
    cfg.dep_t1 = 1.0;
    const fs::path dir = temp_dir("dep");
    const RunResult r = run(cfg, dir);
    CHECK(r.exit_code == 0);
    REQUIRE(r.artifacts.size() == 1);
    const std::string text = slurp(r.artifacts[0]);
    CHECK(text.rfind("n,sup_deviation", 0) == 0);
    // 5 rows after the header.
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

TEST_CASE("computational failures exit with code 3") {
    ExperimentConfig cfg = membership_config();
    cfg.kind = ExperimentKind::FdlSweep;
    // Valid config, but lambda = 2 < e cannot be split into zones, so the
    // per-lambda computation fails and is reported as such.
    cfg.lambda_grid = {2.0, 50.0, 2};
    const RunResult r = run(cfg, temp_dir("exit3"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("trajectory export carries the energy columns") {
    const PropagationSpeed c = generic_constant_speed(2.0, 1.0);
    IntegrateOptions opt;
    const Trajectory tr = integrate(c, 10.0, {0.0, 0.0, 1.0, 0.0, 10.0}, 1.0,
                                    linear_grid(0.25, 1.0, 4), opt);
    const Table t = trajectory_table(tr, c);
    CHECK(t.header ==
          std::vector<std::string>{"t", "u", "v", "logscale", "log_ekov",
                                   "log_ehyp", "log_etar"});
    CHECK(t.rows.size() == 4);
    const fs::path dir = temp_dir("traj");
    write_table(t, dir / "traj.csv", TableFormat::Csv);
    CHECK(slurp(dir / "traj.csv")
              .rfind("t,u,v,logscale,log_ekov,log_ehyp,log_etar", 0) == 0);
}

TEST_CASE("fdl sweep experiment writes both report tables") {
    ExperimentConfig cfg = membership_config();
    cfg.kind = ExperimentKind::FdlSweep;
    cfg.spec.order = 2;
    cfg.lambda_grid = {1e2, 4.0, 3};
    cfg.tol = 1e-6;
    cfg.workers = 2;
    const fs::path dir = temp_dir("fdl");
    const RunResult r = run(cfg, dir);
    CHECK(r.exit_code == 0);
    REQUIRE(r.artifacts.size() == 2);
    const std::string loss = slurp(r.artifacts[0]);
    CHECK(loss.rfind(
              "lambda,a,b,sup_log_gain,delta_hat,kov_exp,hyp_ceiling,tar_ceiling,pass",
              0) == 0);
    const std::string zone = slurp(r.artifacts[1]);
    CHECK(zone.find("ordering_ok") != std::string::npos);
}
