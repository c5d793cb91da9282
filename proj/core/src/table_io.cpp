#include "losslab/table_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace losslab {

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string cell_csv(const Cell& c) {
    if (std::holds_alternative<double>(c)) return format_g17(std::get<double>(c));
    if (std::holds_alternative<long long>(c)) {
        return std::to_string(std::get<long long>(c));
    }
    if (std::holds_alternative<bool>(c)) return std::get<bool>(c) ? "1" : "0";
    return std::get<std::string>(c);
}

std::string cell_json(const Cell& c) {
    if (std::holds_alternative<double>(c)) {
        const double v = std::get<double>(c);
        if (std::isfinite(v)) return format_g17(v);
        return std::string("\"") + format_g17(v) + "\"";
    }
    if (std::holds_alternative<long long>(c)) {
        return std::to_string(std::get<long long>(c));
    }
    if (std::holds_alternative<bool>(c)) return std::get<bool>(c) ? "true" : "false";
    std::string out = "\"";
    for (char ch : std::get<std::string>(c)) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

void write_table(const Table& t, const std::filesystem::path& path,
                 TableFormat fmt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("write_table: cannot open " + path.string());
    }
    if (fmt == TableFormat::Csv) {
        for (std::size_t i = 0; i < t.header.size(); ++i) {
            if (i) os << ',';
            os << t.header[i];
        }
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ',';
                os << cell_csv(row[i]);
            }
            os << '\n';
        }
    } else {
        for (const auto& row : t.rows) {
            os << '{';
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ',';
                os << '"' << t.header[i] << "\":" << cell_json(row[i]);
            }
            os << "}\n";
        }
    }
    if (!os) throw std::runtime_error("write_table: write failed: " + path.string());
}

Table speed_table(const PropagationSpeed& c, std::span<const double> grid,
                  bool include_d2) {
    Table t;
    t.header = include_d2 ? std::vector<std::string>{"t", "c", "c1", "c2"}
                          : std::vector<std::string>{"t", "c", "c1"};
    for (double x : grid) {
        std::vector<Cell> row{x, c.value(x), c.d1(x)};
        if (include_d2) row.emplace_back(c.d2(x));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table trajectory_table(const Trajectory& traj, const PropagationSpeed& c) {
    Table t;
    t.header = {"t", "u", "v", "logscale", "log_ekov", "log_ehyp", "log_etar"};
    for (const auto& s : traj.states) {
        const EnergyTriple e = energies(s, c, traj.form);
        t.rows.push_back({s.t, s.u, s.v, s.logscale, e.log_ekov, e.log_ehyp,
                          e.log_etar});
    }
    return t;
}

Table loss_report_table(const LossReport& rep) {
    Table t;
    t.header = {"lambda", "a",       "b",           "sup_log_gain", "delta_hat",
                "kov_exp", "hyp_ceiling", "tar_ceiling", "pass"};
    for (const auto& r : rep.rows) {
        t.rows.push_back({r.lambda, r.a, r.b, r.sup_log_gain, r.delta_hat,
                          r.kov_exp, r.hyp_ceiling, r.tar_ceiling, r.pass});
    }
    return t;
}

Table certificate_table(std::span<const GrowthCertificate> certs) {
    Table t;
    t.header = {"lambda", "gamma", "a",      "b",    "omega_l",
                "phi",    "log_gain_at_b", "margin", "pass"};
    for (const auto& c : certs) {
        t.rows.push_back({c.lambda, c.gamma, c.a, c.b, c.omega_l, c.phi,
                          c.log_gain_at_b, c.margin, c.pass});
    }
    return t;
}

Table certificate_checkpoint_table(std::span<const GrowthCertificate> certs) {
    Table t;
    t.header = {"lambda", "t", "measured_log_gain", "required_log_gain",
                "margin", "pass"};
    for (const auto& c : certs) {
        for (const auto& cp : c.checkpoints) {
            t.rows.push_back({c.lambda, cp.t, cp.measured_log_gain,
                              cp.required_log_gain, cp.margin, cp.pass});
        }
    }
    return t;
}

Table convergence_table(std::span<const ConvergenceRow> rows) {
    Table t;
    t.header = {"lambda", "feasible", "member", "distance"};
    const bool with_c2 =
        !rows.empty() && std::any_of(rows.begin(), rows.end(),
                                     [](const auto& r) { return r.c2.has_value(); });
    if (with_c2) {
        t.header.insert(t.header.end(),
                        {"psi_l", "gamma_l", "c2_ratio_first", "c2_ratio_second"});
    }
    for (const auto& r : rows) {
        std::vector<Cell> row{r.lambda, r.feasible, r.member, r.distance};
        if (with_c2) {
            if (r.c2) {
                row.insert(row.end(), {Cell{r.c2->psi_l}, Cell{r.c2->gamma_l},
                                       Cell{r.c2->trend_c2_first},
                                       Cell{r.c2->trend_c2_second}});
            } else {
                row.insert(row.end(), {Cell{0.0}, Cell{0.0}, Cell{0.0}, Cell{0.0}});
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table density_table(std::span<const DensityRow> rows) {
    Table t;
    t.header = {"delta", "member", "distance"};
    for (const auto& r : rows) t.rows.push_back({r.delta, r.member, r.distance});
    return t;
}

Table dependence_table(std::span<const double> deviations, int n_start) {
    Table t;
    t.header = {"n", "sup_deviation"};
    for (std::size_t i = 0; i < deviations.size(); ++i) {
        t.rows.push_back(
            {static_cast<long long>(n_start + static_cast<int>(i)), deviations[i]});
    }
    return t;
}

Table zone_chain_table(std::span<const ZoneChainRecord> recs) {
    Table t;
    t.header = {"lambda",        "a",           "b",
                "ordering_ok",   "measured_a",  "ceiling_a",
                "measured_b",    "ceiling_b",   "measured_t0",
                "ceiling_t0",    "pass"};
    for (const auto& r : recs) {
        t.rows.push_back({r.st.lambda, r.st.a, r.st.b, r.st.ordering_ok,
                          r.measured_at_a, r.ceiling_at_a, r.measured_at_b,
                          r.ceiling_at_b, r.measured_at_t0, r.ceiling_at_t0,
                          r.pass});
    }
    return t;
}

SpeedTableData read_speed_table(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("read_speed_table: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("read_speed_table: empty file");
    }
    SpeedTableData d;
    d.has_c2 = line.find("c2") != std::string::npos;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (vals.size() < 3) {
            throw std::runtime_error("read_speed_table: short row");
        }
        d.t.push_back(vals[0]);
        d.c.push_back(vals[1]);
        d.c1.push_back(vals[2]);
        if (d.has_c2 && vals.size() > 3) d.c2.push_back(vals[3]);
    }
    return d;
}

}  // namespace losslab
