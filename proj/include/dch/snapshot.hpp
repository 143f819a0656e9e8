// Field snapshots on the node lattice: grid-csv and legacy-VTK writers and
// the grid-csv reader. Values are printed with %.17g so files round-trip
// exactly and identical inputs give byte-identical output.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dch/field.hpp"
#include "dch/mesh.hpp"

namespace dch {

inline std::string fmt_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct FieldSnapshot {
  int n = 0;  // cells per side; values on the (n+1) x (n+1) node lattice
  double time = 0.0;
  std::string name;
  std::vector<double> values;  // lexicographic, x fastest
};

inline FieldSnapshot make_snapshot(const MeshLevel& mesh, double time, std::string name,
                                   const NodalField& f) {
  if (static_cast<int>(f.size()) != mesh.node_count())
    throw std::invalid_argument("make_snapshot: field length mismatch");
  return {mesh.n, time, std::move(name), f.v};
}

// grid-csv: header "# n t name", then (n+1) rows of (n+1) values (row j holds
// y = j/n, x ascending).
inline void write_snapshot_grid_csv(const FieldSnapshot& snap, std::ostream& os) {
  os << "# " << snap.n << ' ' << fmt_full(snap.time) << ' ' << snap.name << '\n';
  const int side = snap.n + 1;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      if (i) os << ',';
      os << fmt_full(snap.values[static_cast<std::size_t>(j * side + i)]);
    }
    os << '\n';
  }
}

// Legacy VTK structured points, readable by common viewers.
inline void write_snapshot_vtk(const FieldSnapshot& snap, std::ostream& os) {
  const int side = snap.n + 1;
  os << "# vtk DataFile Version 3.0\n";
  os << snap.name << " t=" << fmt_full(snap.time) << '\n';
  os << "ASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << side << ' ' << side << " 1\n";
  os << "ORIGIN 0 0 0\n";
  os << "SPACING " << fmt_full(1.0 / snap.n) << ' ' << fmt_full(1.0 / snap.n) << " 1\n";
  os << "POINT_DATA " << side * side << '\n';
  os << "SCALARS " << snap.name << " double 1\nLOOKUP_TABLE default\n";
  for (std::size_t k = 0; k < snap.values.size(); ++k) os << fmt_full(snap.values[k]) << '\n';
}

inline void write_snapshot(const FieldSnapshot& snap, const std::string& path,
                           const std::string& format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_snapshot: cannot open " + path);
  if (format == "grid-csv") write_snapshot_grid_csv(snap, os);
  else if (format == "vtk-ascii") write_snapshot_vtk(snap, os);
  else throw std::invalid_argument("write_snapshot: unknown format " + format);
  if (!os) throw std::runtime_error("write_snapshot: write failed for " + path);
}

namespace detail {

inline double parse_snapshot_double(const std::string& text) {
  std::size_t pos = 0;
  const double v = std::stod(text, &pos);
  if (pos != text.size()) throw std::runtime_error("snapshot: malformed number: " + text);
  return v;
}

}  // namespace detail

inline FieldSnapshot read_snapshot_grid_csv(std::istream& is) {
  FieldSnapshot snap;
  std::string line;
  if (!std::getline(is, line) || line.size() < 2 || line[0] != '#')
    throw std::runtime_error("read_snapshot_grid_csv: missing header");
  {
    std::stringstream hs(line.substr(1));
    if (!(hs >> snap.n >> snap.time >> snap.name))
      throw std::runtime_error("read_snapshot_grid_csv: malformed header");
  }
  const int side = snap.n + 1;
  snap.values.reserve(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
  for (int j = 0; j < side; ++j) {
    if (!std::getline(is, line))
      throw std::runtime_error("read_snapshot_grid_csv: truncated file");
    std::stringstream ls(line);
    std::string cell;
    for (int i = 0; i < side; ++i) {
      if (!std::getline(ls, cell, ','))
        throw std::runtime_error("read_snapshot_grid_csv: short row");
      snap.values.push_back(detail::parse_snapshot_double(cell));
    }
  }
  return snap;
}

inline NodalField read_grid_csv_field(const std::string& path, int expected_n) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_grid_csv_field: cannot open " + path);
  const FieldSnapshot snap = read_snapshot_grid_csv(is);
  if (expected_n > 0 && snap.n != expected_n)
    throw std::runtime_error("read_grid_csv_field: snapshot n=" + std::to_string(snap.n) +
                             " does not match mesh n=" + std::to_string(expected_n));
  return {0, snap.values};
}

}  // namespace dch
