// Nested uniform right-isosceles triangulations of the unit square and the
// intergrid transfer operators between consecutive levels.
//
// Level l has n = n0 * 2^l cells per side; nodes sit on the lattice
// {i/n} x {j/n} and are numbered lexicographically, id = j*(n+1) + i. Every
// square cell splits along its bottom-left to top-right diagonal, so each
// coarse triangle is the union of 4 congruent fine triangles and the P1
// spaces are nested.
#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dch/field.hpp"
#include "dch/sparse.hpp"

namespace dch {

struct MeshLevel {
  int level = 0;
  int n = 0;        // cells per side
  double h = 0.0;   // longest edge (the diagonal), sqrt(2)/n
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> tris;  // counterclockwise vertex ids

  int node_count() const { return static_cast<int>(nodes.size()); }
  int node_id(int i, int j) const { return j * (n + 1) + i; }
  double cell_area() const { return 0.5 / (static_cast<double>(n) * n); }
};

struct MeshHierarchy {
  int n0 = 0;
  std::vector<MeshLevel> levels;
  // prolongation[l] maps level l-1 coefficients to level l (N_l x N_{l-1});
  // prolongation[0] is empty.
  std::vector<SparseMatrix> prolongation;

  int finest() const { return static_cast<int>(levels.size()) - 1; }
  const MeshLevel& level(int l) const { return levels.at(static_cast<std::size_t>(l)); }
};

namespace detail {

inline MeshLevel build_level(int level_index, int n) {
  MeshLevel m;
  m.level = level_index;
  m.n = n;
  m.h = std::sqrt(2.0) / n;
  m.nodes.reserve(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.nodes.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  m.tris.reserve(2u * static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int bl = m.node_id(i, j);
      const int br = m.node_id(i + 1, j);
      const int tr = m.node_id(i + 1, j + 1);
      const int tl = m.node_id(i, j + 1);
      m.tris.push_back({bl, br, tr});
      m.tris.push_back({bl, tr, tl});
    }
  }
  return m;
}

// P1 injection: a fine node either coincides with a coarse node or is the
// midpoint of a coarse edge (axis edge or the cell diagonal).
inline SparseMatrix build_prolongation(const MeshLevel& coarse, const MeshLevel& fine) {
  std::vector<Triplet> t;
  t.reserve(2u * static_cast<std::size_t>(fine.node_count()));
  for (int J = 0; J <= fine.n; ++J) {
    for (int I = 0; I <= fine.n; ++I) {
      const int row = fine.node_id(I, J);
      const bool ie = (I % 2 == 0);
      const bool je = (J % 2 == 0);
      if (ie && je) {
        t.push_back({row, coarse.node_id(I / 2, J / 2), 1.0});
      } else if (!ie && je) {
        t.push_back({row, coarse.node_id((I - 1) / 2, J / 2), 0.5});
        t.push_back({row, coarse.node_id((I + 1) / 2, J / 2), 0.5});
      } else if (ie && !je) {
        t.push_back({row, coarse.node_id(I / 2, (J - 1) / 2), 0.5});
        t.push_back({row, coarse.node_id(I / 2, (J + 1) / 2), 0.5});
      } else {
        // cell center: midpoint of the coarse diagonal
        t.push_back({row, coarse.node_id((I - 1) / 2, (J - 1) / 2), 0.5});
        t.push_back({row, coarse.node_id((I + 1) / 2, (J + 1) / 2), 0.5});
      }
    }
  }
  return SparseMatrix::from_triplets(fine.node_count(), coarse.node_count(), std::move(t));
}

}  // namespace detail

inline MeshHierarchy build_hierarchy(int n0, int level_count) {
  if (n0 <= 0) throw std::invalid_argument("build_hierarchy: n0 must be >= 1");
  if (level_count <= 0) throw std::invalid_argument("build_hierarchy: L must be >= 1");
  MeshHierarchy h;
  h.n0 = n0;
  h.levels.reserve(static_cast<std::size_t>(level_count) + 1);
  h.prolongation.resize(static_cast<std::size_t>(level_count) + 1);
  int n = n0;
  for (int l = 0; l <= level_count; ++l, n *= 2) h.levels.push_back(detail::build_level(l, n));
  for (int l = 1; l <= level_count; ++l)
    h.prolongation[static_cast<std::size_t>(l)] =
        detail::build_prolongation(h.levels[static_cast<std::size_t>(l - 1)],
                                   h.levels[static_cast<std::size_t>(l)]);
  return h;
}

// Injection of a level l-1 field into level l (same P1 function, finer basis).
inline NodalField prolong(const MeshHierarchy& h, const NodalField& coarse) {
  const int lf = coarse.level + 1;
  if (lf > h.finest()) throw std::invalid_argument("prolong: already at finest level");
  const SparseMatrix& p = h.prolongation[static_cast<std::size_t>(lf)];
  if (static_cast<int>(coarse.size()) != p.cols())
    throw std::invalid_argument("prolong: field length mismatch");
  return {lf, p.mul(coarse.v)};
}

// Transpose of the prolongation; the transfer for residual-type vectors.
inline NodalField restrict_canonical(const MeshHierarchy& h, const NodalField& fine) {
  const int lf = fine.level;
  if (lf < 1) throw std::invalid_argument("restrict_canonical: already at coarsest level");
  const SparseMatrix& p = h.prolongation[static_cast<std::size_t>(lf)];
  if (static_cast<int>(fine.size()) != p.rows())
    throw std::invalid_argument("restrict_canonical: field length mismatch");
  return {lf - 1, p.mul_transpose(fine.v)};
}

// Point sampling at coarse node positions; the transfer for primal iterates.
inline NodalField restrict_nodal(const MeshHierarchy& h, const NodalField& fine) {
  const int lf = fine.level;
  if (lf < 1) throw std::invalid_argument("restrict_nodal: already at coarsest level");
  const MeshLevel& mf = h.level(lf);
  const MeshLevel& mc = h.level(lf - 1);
  if (static_cast<int>(fine.size()) != mf.node_count())
    throw std::invalid_argument("restrict_nodal: field length mismatch");
  NodalField out = NodalField::zeros(lf - 1, static_cast<std::size_t>(mc.node_count()));
  for (int j = 0; j <= mc.n; ++j)
    for (int i = 0; i <= mc.n; ++i)
      out.v[static_cast<std::size_t>(mc.node_id(i, j))] =
          fine.v[static_cast<std::size_t>(mf.node_id(2 * i, 2 * j))];
  return out;
}

// ASCII dump: "N T" counts, then one node per line, then one triangle per line.
inline void dump_mesh(const MeshLevel& m, std::ostream& os) {
  os << m.node_count() << ' ' << m.tris.size() << '\n';
  char buf[64];
  for (const auto& p : m.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g", p[0], p[1]);
    os << buf << '\n';
  }
  for (const auto& t : m.tris) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace dch
