#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/config.hpp"
#include "thinfilm/diagnostics.hpp"
#include "thinfilm/errors.hpp"
#include "thinfilm/state.hpp"
#include "thinfilm/time_stepper.hpp"

namespace thinfilm {

inline constexpr const char* kVersion = "0.1.0";

/// Decimal scientific notation with 12 significant digits.
inline std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

namespace detail {

inline std::ofstream open_for_writing(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void close_checked(std::ofstream& out, const std::filesystem::path& path)
{
    out.close();
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

} // namespace detail

inline std::string to_csv(const ScalarSeries& series)
{
    std::ostringstream s;
    const bool width = series.has_width();
    s << "step,t,energy,volume,min_h,max_h,contact_length" << (width ? ",ridge_width" : "") << '\n';
    for (const ScalarRow& r : series.rows()) {
        s << r.step << ',' << format_number(r.t) << ',' << format_number(r.energy) << ','
          << format_number(r.volume) << ',' << format_number(r.min_h) << ',' << format_number(r.max_h) << ','
          << format_number(r.contact_length);
        if (width)
            s << ',' << format_number(r.ridge_width.value_or(std::nan("")));
        s << '\n';
    }
    return s.str();
}

inline std::string to_csv(const EocTable& table)
{
    std::ostringstream s;
    s << "resolution,error,eoc,valid\n";
    for (const EocRow& r : table.rows)
        s << r.resolution << ',' << format_number(r.error) << ',' << format_number(r.eoc) << ','
          << (r.valid ? 1 : 0) << '\n';
    return s.str();
}

template <class Table>
void write_csv(const Table& table, const std::filesystem::path& path)
{
    auto out = detail::open_for_writing(path);
    out << to_csv(table);
    detail::close_checked(out, path);
}

/// Splits one CSV line at commas.
inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

/// Legacy ASCII VTK of the deformed mesh. Each degree-k cell is written as
/// k² bilinear quads over its Lagrange nodes. `pi` is optional; when absent
/// the constant π̂ of the state is written.
inline std::string to_vtk(const AleState& state, const Eigen::VectorXd* pi = nullptr)
{
    const FeSpace& space = state.fe();
    const int n = space.n_dofs();
    const int k = space.degree();
    const int n_cells = space.mesh().n_cells();
    const Eigen::VectorXd id = space.identity_map();
    std::ostringstream s;
    s << "# vtk DataFile Version 3.0\nthin film state t=" << format_number(state.t) << "\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\nPOINTS " << n << " double\n";
    for (int i = 0; i < n; ++i)
        s << format_number(state.psi[i]) << ' ' << format_number(state.psi[n + i]) << " 0\n";
    const int n_sub = n_cells * k * k;
    s << "CELLS " << n_sub << ' ' << 5 * n_sub << '\n';
    for (int c = 0; c < n_cells; ++c) {
        const auto dofs = space.cell_dofs(c);
        auto at = [&](int i, int j) { return dofs[i + (k + 1) * j]; };
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < k; ++i)
                s << "4 " << at(i, j) << ' ' << at(i + 1, j) << ' ' << at(i + 1, j + 1) << ' ' << at(i, j + 1)
                  << '\n';
    }
    s << "CELL_TYPES " << n_sub << '\n';
    for (int c = 0; c < n_sub; ++c)
        s << "9\n";
    s << "POINT_DATA " << n << "\nSCALARS h double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i)
        s << format_number(state.h[i]) << '\n';
    s << "SCALARS pi double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i)
        s << format_number(pi ? (*pi)[i] : state.pi_hat) << '\n';
    s << "VECTORS displacement double\n";
    for (int i = 0; i < n; ++i)
        s << format_number(state.psi[i] - id[i]) << ' ' << format_number(state.psi[n + i] - id[n + i]) << " 0\n";
    return s.str();
}

inline void write_vtk(const AleState& state, const std::filesystem::path& path, const Eigen::VectorXd* pi = nullptr)
{
    auto out = detail::open_for_writing(path);
    out << to_vtk(state, pi);
    detail::close_checked(out, path);
}

inline Json events_to_json(const EventLog& log)
{
    Json a = Json::array();
    for (const Event& e : log.events())
        a.push_back({{"kind", to_string(e.kind)}, {"t", e.t}, {"message", e.message}});
    return a;
}

/// Run record written next to the outputs: config echo, version and outcome.
inline Json make_manifest(const Json& config, const std::string& command, const std::string& exit_reason,
                          const Json& extra = Json::object())
{
    Json m;
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = config;
    m["exit_reason"] = exit_reason;
    for (auto it = extra.begin(); it != extra.end(); ++it)
        m[it.key()] = it.value();
    return m;
}

inline void write_json(const Json& j, const std::filesystem::path& path)
{
    auto out = detail::open_for_writing(path);
    out << j.dump(2) << '\n';
    detail::close_checked(out, path);
}

} // namespace thinfilm
