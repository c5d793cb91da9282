#ifndef LOSSLAB_TABLE_IO_HPP
#define LOSSLAB_TABLE_IO_HPP

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "losslab/activators.hpp"
#include "losslab/fdl.hpp"
#include "losslab/oscillator.hpp"
#include "losslab/speeds.hpp"

namespace losslab {

enum class TableFormat { Csv, JsonLines };

using Cell = std::variant<double, long long, bool, std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

/// Full-precision decimal rendering (17 significant digits).
std::string format_g17(double x);

/// Write a table as CSV (LF endings) or JSON lines; bit-stable output.
void write_table(const Table& t, const std::filesystem::path& path,
                 TableFormat fmt);

// Table builders for the report contracts.
Table speed_table(const PropagationSpeed& c, std::span<const double> grid,
                  bool include_d2);
Table trajectory_table(const Trajectory& traj, const PropagationSpeed& c);
Table loss_report_table(const LossReport& rep);
Table certificate_table(std::span<const GrowthCertificate> certs);
Table certificate_checkpoint_table(std::span<const GrowthCertificate> certs);
Table convergence_table(std::span<const ConvergenceRow> rows);
Table density_table(std::span<const DensityRow> rows);
Table dependence_table(std::span<const double> deviations, int n_start);
Table zone_chain_table(std::span<const ZoneChainRecord> recs);

/// Parse a `t,c,c1[,c2]` table back into columns.
struct SpeedTableData {
    std::vector<double> t, c, c1, c2;
    bool has_c2 = false;
};
SpeedTableData read_speed_table(const std::filesystem::path& path);

}  // namespace losslab

#endif
