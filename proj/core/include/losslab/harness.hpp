#ifndef LOSSLAB_HARNESS_HPP
#define LOSSLAB_HARNESS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "losslab/activators.hpp"
#include "losslab/fdl.hpp"
#include "losslab/speeds.hpp"
#include "losslab/table_io.hpp"

namespace losslab {

enum class ExperimentKind {
    Membership,
    FdlSweep,
    Activator,
    Iterate,
    Density,
    Dependence,
};

struct LambdaGridSpec {
    double start = 0.0;
    double ratio = 0.0;
    int count = 0;
    std::vector<double> values() const;
};

struct SpeedSelector {
    // One of: "constant", "generic-constant", "alpha", "sin-perturbed", "table".
    std::string family;
    double value = 0.0;      // constant families
    double alpha = 0.0;      // alpha family
    double amp = 0.0;        // sin-perturbed
    double freq = 0.0;       // sin-perturbed
    double t0 = 0.5;
    std::string table_path;  // imported `t,c,c1[,c2]` table

    PropagationSpeed build() const;
};

struct SpecParams {
    double mu1 = 0.0;
    double mu2 = 0.0;
    double t0 = 0.5;
    std::string omega_kind = "constant";
    double omega_param = 1.0;
    std::string psi_kind = "constant";
    double psi_param = 1.0;
    double k0 = 0.0;  // <= 0 means: smallest K0 satisfying the envelope
    int order = 1;

    SpeedClassSpec build() const;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Membership;
    SpeedSelector speed;
    SpecParams spec;
    LambdaGridSpec lambda_grid;
    double tol = 1e-8;
    int workers = 1;
    unsigned long long seed = 0;  // reserved; everything here is deterministic
    TableFormat format = TableFormat::Csv;

    // activator / iterate knobs
    double gamma = 1.0;
    std::string schedule = "c1";
    bool grow = false;          // activator kind: also certify growth
    bool emit_trajectory = false;
    int stages = 3;
    double margin = 0.05;
    double gamma0 = 0.0;        // iterate: 0 means (mu1+mu2)/2

    // density / dependence knobs
    double delta0 = 0.1;
    double delta_factor = 0.5;
    int delta_count = 6;
    int n_start = 4;
    int n_end = 10;
    double dep_lambda = 10.0;
    double dep_t1 = 1.0;

    /// All problems at once; empty means valid.
    std::vector<std::string> validate() const;

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
};

struct RunResult {
    int exit_code = 0;  // 0 ok, 1 assertion failure, 2 config, 3 computation
    std::vector<std::string> artifacts;
    std::vector<std::string> messages;
};

RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace losslab

#endif
