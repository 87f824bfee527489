#include "netlump/report.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace netlump {

std::string format_float(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string config_digest(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

namespace {

std::ofstream open_or_throw(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("cannot write output file '" + path + "'");
    return out;
}

}  // namespace

void write_solution_csv(const std::string& path, const GridFunction& u, double x_scale) {
    auto out = open_or_throw(path);
    out << "edge,x,value\n";
    for (Index j = 0; j < u.edges(); ++j)
        for (Index i = 0; i <= u.cells(); ++i)
            out << (j + 1) << ',' << format_float(x_scale * u.node(i)) << ','
                << format_float(u(j, i)) << '\n';
    if (!out.good()) throw NumericalError("write failed for '" + path + "'");
}

void write_components_csv(const std::string& path,
                          const std::vector<std::pair<std::string, GridFunction>>& components) {
    auto out = open_or_throw(path);
    out << "component,edge,x,value\n";
    for (const auto& [name, u] : components)
        for (Index j = 0; j < u.edges(); ++j)
            for (Index i = 0; i <= u.cells(); ++i)
                out << name << ',' << (j + 1) << ',' << format_float(u.node(i)) << ','
                    << format_float(u(j, i)) << '\n';
    if (!out.good()) throw NumericalError("write failed for '" + path + "'");
}

void emit_report(const ConvergenceReport& report, const std::string& digest,
                 const std::string& csv_path) {
    {
        auto out = open_or_throw(csv_path);
        out << "eps,error_l1,error_sup\n";
        for (size_t i = 0; i < report.eps_list.size(); ++i) {
            const double sup = i < report.error_sup.size()
                                   ? report.error_sup[i]
                                   : std::numeric_limits<double>::quiet_NaN();
            out << format_float(report.eps_list[i]) << ',' << format_float(report.error_l1[i]) << ','
                << format_float(sup) << '\n';
        }
        if (!out.good()) throw NumericalError("write failed for '" + csv_path + "'");
    }

    nlohmann::json meta;
    meta["fitted_order"] = report.degenerate ? nlohmann::json() : nlohmann::json(report.fitted_order);
    meta["intercept"] = report.degenerate ? nlohmann::json() : nlohmann::json(report.intercept);
    meta["pass"] = report.pass;
    meta["degenerate"] = report.degenerate;
    meta["band"] = {report.band_lo, report.band_hi};
    meta["points"] = report.eps_list.size();
    meta["config_digest"] = digest;

    const std::string json_path = csv_path + ".json";
    auto out = open_or_throw(json_path);
    out << meta.dump(2) << '\n';
    if (!out.good()) throw NumericalError("write failed for '" + json_path + "'");
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open report file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "eps,error_l1,error_sup")
        throw ValidationError("report file '" + path + "' has an unexpected header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        ReportRow row;
        double* slots[3] = {&row.eps, &row.error_l1, &row.error_sup};
        for (double* slot : slots) {
            if (!std::getline(fields, cell, ','))
                throw ValidationError("report file '" + path + "': short row");
            *slot = std::strtod(cell.c_str(), nullptr);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace netlump
