#pragma once

#include "netlump/lumping.hpp"
#include "netlump/types.hpp"

#include <string>
#include <vector>

namespace netlump {

/// Fixed 17-significant-digit formatting: value-identical inputs produce
/// byte-identical output.
std::string format_float(double value);

/// FNV-1a hash of the raw scenario text, as a 16-digit hex string.
std::string config_digest(const std::string& text);

/// Per-node samples with header row "edge,x,value"; edges are 1-based. The
/// x column is the node coordinate scaled by x_scale (age profiles pass
/// their age span).
void write_solution_csv(const std::string& path, const GridFunction& u, double x_scale = 1.0);

/// Labelled per-node samples ("component,edge,x,value"), for expansion parts.
void write_components_csv(const std::string& path,
                          const std::vector<std::pair<std::string, GridFunction>>& components);

/// CSV with columns eps,error_l1,error_sup plus a JSON sidecar (path + ".json")
/// carrying the fitted order, pass verdict, band and config digest.
void emit_report(const ConvergenceReport& report, const std::string& digest,
                 const std::string& csv_path);

struct ReportRow {
    double eps = 0.0, error_l1 = 0.0, error_sup = 0.0;
};

std::vector<ReportRow> read_report_csv(const std::string& path);

}  // namespace netlump
