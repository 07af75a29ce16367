#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "erdob/config.hpp"
#include "erdob/sim.hpp"

namespace erdob {

/// Column-named numeric table; one row per trace sample.
struct TraceTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
    bool operator==(const TraceTable&) const = default;
};

/// Main trace columns: t, x, x_d, e_x, u, ε_T, ε̂_T, Ŝ (row-major), ‖S̃‖_F, k, σ, λ_min, phase.
TraceTable trace_table(const SimTrace& trace);
/// ε̄, ẽ and filter/observer internals.
TraceTable diagnostics_table(const SimTrace& trace);

/// Values are written with 17 significant digits so that reading back is exact.
void write_csv(std::ostream& out, const TraceTable& table);
TraceTable read_csv(std::istream& in);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string metrics_text(const Metrics& m, const MetricTolerances& tol);
std::string comparison_text(const Comparison& c, const std::string& label_a, const std::string& label_b);
std::string comparison_csv(const Comparison& c);

struct RunOutputs {
    std::string trace_csv;
    std::string diagnostics_csv;
    std::string metrics;
    std::string manifest;
    std::vector<std::pair<std::string, std::string>> figures;  // relative path, content
};

/// Renders every output file of a run in memory.
RunOutputs render_run(const ConfigDoc& doc, const SimConfig& cfg, const SimTrace& trace, double wall_seconds);

/// Writes rendered outputs into `dir`, creating it if needed.
void write_run(const std::filesystem::path& dir, const RunOutputs& out);

extern const char* const version_string;

}  // namespace erdob
