#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dch/assembly.hpp"
#include "dch/mesh.hpp"
#include "support/oracles.hpp"

using namespace dch;

namespace {

double tri_area(const MeshLevel& m, const std::array<int, 3>& t) {
  const auto& a = m.nodes[static_cast<std::size_t>(t[0])];
  const auto& b = m.nodes[static_cast<std::size_t>(t[1])];
  const auto& c = m.nodes[static_cast<std::size_t>(t[2])];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

oracle::Dense to_dense(const SparseMatrix& s) {
  oracle::Dense d(s.rows(), s.cols());
  for (int i = 0; i < s.rows(); ++i) {
    const auto cols = s.row_cols(i);
    const auto vals = s.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) d.at(i, cols[k]) = vals[k];
  }
  return d;
}

}  // namespace

TEST_CASE("hierarchy counts and mesh size") {
  const auto h = build_hierarchy(1, 1);
  CHECK(h.levels.size() == 2);
  CHECK(h.level(1).node_count() == 9);
  CHECK(h.level(1).tris.size() == 8);
  CHECK(h.level(1).h == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-15));

  const auto h4 = build_hierarchy(1, 4);
  CHECK(h4.levels.size() == 5);  // levels 0..4

  const auto h8 = build_hierarchy(1, 8);
  CHECK(h8.level(8).n == 256);
  CHECK(h8.level(8).h == doctest::Approx(std::sqrt(2.0) / 256).epsilon(1e-15));
}

TEST_CASE("invalid hierarchy arguments are rejected") {
  CHECK_THROWS_AS(build_hierarchy(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_hierarchy(-2, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_hierarchy(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_hierarchy(1, -1), std::invalid_argument);
}

TEST_CASE("levels are uniform right-isosceles tilings on the lattice") {
  const auto h = build_hierarchy(3, 2);
  for (const auto& m : h.levels) {
    CHECK(m.node_count() == (m.n + 1) * (m.n + 1));
    CHECK(static_cast<int>(m.tris.size()) == 2 * m.n * m.n);
    double total = 0.0;
    for (const auto& t : m.tris) {
      const double a = tri_area(m, t);
      CHECK(a > 0.0);  // counterclockwise
      CHECK(a == doctest::Approx(0.5 / (m.n * m.n)).epsilon(1e-12));
      total += a;
      // right isosceles: two legs 1/n, hypotenuse sqrt(2)/n
      double edges[3];
      for (int k = 0; k < 3; ++k) {
        const auto& p = m.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
        const auto& q = m.nodes[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])];
        edges[k] = std::hypot(q[0] - p[0], q[1] - p[1]);
      }
      std::sort(edges, edges + 3);
      CHECK(edges[0] == doctest::Approx(1.0 / m.n).epsilon(1e-12));
      CHECK(edges[1] == doctest::Approx(1.0 / m.n).epsilon(1e-12));
      CHECK(edges[2] == doctest::Approx(std::sqrt(2.0) / m.n).epsilon(1e-12));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    for (const auto& p : m.nodes) {
      CHECK(p[0] * m.n == doctest::Approx(std::round(p[0] * m.n)).epsilon(1e-12));
      CHECK(p[1] * m.n == doctest::Approx(std::round(p[1] * m.n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("nestedness: coarse nodes coincide and h halves") {
  const auto h = build_hierarchy(1, 3);
  for (int l = 1; l <= 3; ++l) {
    const auto& mc = h.level(l - 1);
    const auto& mf = h.level(l);
    CHECK(mc.h == doctest::Approx(2.0 * mf.h).epsilon(1e-15));
    for (int j = 0; j <= mc.n; ++j)
      for (int i = 0; i <= mc.n; ++i) {
        const auto& pc = mc.nodes[static_cast<std::size_t>(mc.node_id(i, j))];
        const auto& pf = mf.nodes[static_cast<std::size_t>(mf.node_id(2 * i, 2 * j))];
        CHECK(pc[0] == pf[0]);
        CHECK(pc[1] == pf[1]);
      }
    // every coarse triangle is tiled by exactly 4 fine triangles
    std::vector<int> children(mc.tris.size(), 0);
    for (const auto& tf : mf.tris) {
      double cx = 0.0, cy = 0.0;
      for (int k = 0; k < 3; ++k) {
        cx += mf.nodes[static_cast<std::size_t>(tf[static_cast<std::size_t>(k)])][0] / 3.0;
        cy += mf.nodes[static_cast<std::size_t>(tf[static_cast<std::size_t>(k)])][1] / 3.0;
      }
      int owner = -1;
      for (std::size_t e = 0; e < mc.tris.size(); ++e) {
        const auto& tc = mc.tris[e];
        const auto& a = mc.nodes[static_cast<std::size_t>(tc[0])];
        const auto& b = mc.nodes[static_cast<std::size_t>(tc[1])];
        const auto& c = mc.nodes[static_cast<std::size_t>(tc[2])];
        const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        const double l1 = ((cx - a[0]) * (c[1] - a[1]) - (cy - a[1]) * (c[0] - a[0])) / det;
        const double l2 = ((b[0] - a[0]) * (cy - a[1]) - (b[1] - a[1]) * (cx - a[0])) / det;
        if (l1 >= -1e-12 && l2 >= -1e-12 && l1 + l2 <= 1.0 + 1e-12) {
          owner = static_cast<int>(e);
          break;
        }
      }
      REQUIRE(owner >= 0);
      ++children[static_cast<std::size_t>(owner)];
    }
    for (int c : children) CHECK(c == 4);
  }
}

TEST_CASE("prolongation entries and row counts") {
  const auto h = build_hierarchy(1, 2);
  for (int l = 1; l <= 2; ++l) {
    const auto& p = h.prolongation[static_cast<std::size_t>(l)];
    for (int i = 0; i < p.rows(); ++i) {
      const auto vals = p.row_vals(i);
      CHECK(vals.size() >= 1);
      CHECK(vals.size() <= 2);
      for (double v : vals) CHECK((v == 1.0 || v == 0.5));
    }
  }
}

TEST_CASE("prolong reproduces coarse P1 functions") {
  const auto h = build_hierarchy(1, 2);
  const auto& mc = h.level(1);
  const auto& mf = h.level(2);

  // constants
  NodalField c(1, std::vector<double>(static_cast<std::size_t>(mc.node_count()), 3.25));
  const NodalField cf = prolong(h, c);
  CHECK(cf.level == 2);
  for (double v : cf.v) CHECK(v == 3.25);

  // a nodal hat function stays itself at fine nodes
  NodalField hat = NodalField::zeros(1, static_cast<std::size_t>(mc.node_count()));
  hat.v[static_cast<std::size_t>(mc.node_id(1, 1))] = 1.0;
  const NodalField hatf = prolong(h, hat);
  for (int j = 0; j <= mf.n; ++j)
    for (int i = 0; i <= mf.n; ++i) {
      const auto& p = mf.nodes[static_cast<std::size_t>(mf.node_id(i, j))];
      CHECK(hatf.v[static_cast<std::size_t>(mf.node_id(i, j))] ==
            doctest::Approx(oracle::p1_value(mc, hat, p[0], p[1])).epsilon(1e-14));
    }

  // random field: prolongation equals direct P1 evaluation at fine nodes
  auto rng = oracle::test_rng(11);
  const NodalField v = oracle::random_field(rng, 1, static_cast<std::size_t>(mc.node_count()), -2.0, 2.0);
  const NodalField vf = prolong(h, v);
  for (std::size_t i = 0; i < vf.size(); ++i) {
    const auto& p = mf.nodes[i];
    CHECK(vf.v[i] == doctest::Approx(oracle::p1_value(mc, v, p[0], p[1])).epsilon(1e-13));
  }

  NodalField wrong(1, std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(prolong(h, wrong), std::invalid_argument);
}

TEST_CASE("canonical restriction is the prolongation transpose") {
  const auto h = build_hierarchy(1, 2);
  auto rng = oracle::test_rng(12);
  const auto& mc = h.level(1);
  const auto& mf = h.level(2);

  for (int trial = 0; trial < 10; ++trial) {
    const NodalField v = oracle::random_field(rng, 1, static_cast<std::size_t>(mc.node_count()), -1.0, 1.0);
    const NodalField w = oracle::random_field(rng, 2, static_cast<std::size_t>(mf.node_count()), -1.0, 1.0);
    const NodalField pv = prolong(h, v);
    const NodalField rw = restrict_canonical(h, w);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) lhs += pv.v[i] * w.v[i];
    for (std::size_t i = 0; i < rw.size(); ++i) rhs += rw.v[i] * v.v[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
  }

  // zero maps to zero
  const NodalField zf = restrict_canonical(h, NodalField::zeros(2, static_cast<std::size_t>(mf.node_count())));
  for (double v : zf.v) CHECK(v == 0.0);

  // the load vector of a fixed source restricts to the coarse load vector
  const auto src = [](double x, double y) { return 2.0 + 0.0 * x * y; };
  const NodalField bf = assemble_load(mf, src);
  const NodalField bc = assemble_load(mc, src);
  const NodalField rbf = restrict_canonical(h, bf);
  for (std::size_t i = 0; i < bc.size(); ++i)
    CHECK(rbf.v[i] == doctest::Approx(bc.v[i]).epsilon(1e-13));

  NodalField wrong(2, std::vector<double>(7, 0.0));
  CHECK_THROWS_AS(restrict_canonical(h, wrong), std::invalid_argument);
}

TEST_CASE("nodal restriction samples coarse positions") {
  const auto h = build_hierarchy(1, 2);
  const auto& mc = h.level(1);
  const auto& mf = h.level(2);
  auto rng = oracle::test_rng(13);

  // restrict_nodal o prolong = identity
  const NodalField v = oracle::random_field(rng, 1, static_cast<std::size_t>(mc.node_count()), -1.0, 1.0);
  const NodalField back = restrict_nodal(h, prolong(h, v));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.v[i] == v.v[i]);

  // constants
  NodalField c(2, std::vector<double>(static_cast<std::size_t>(mf.node_count()), -0.75));
  const NodalField cc = restrict_nodal(h, c);
  for (double x : cc.v) CHECK(x == -0.75);

  // value at a fine-only node is invisible
  NodalField spike = NodalField::zeros(2, static_cast<std::size_t>(mf.node_count()));
  spike.v[static_cast<std::size_t>(mf.node_id(1, 0))] = 7.0;  // odd index: no coarse node there
  const NodalField rs = restrict_nodal(h, spike);
  for (double x : rs.v) CHECK(x == 0.0);
}

TEST_CASE("Galerkin coarse operators match direct assembly") {
  const auto h = build_hierarchy(1, 2);
  for (int l = 1; l <= 2; ++l) {
    const auto& p = h.prolongation[static_cast<std::size_t>(l)];
    const auto pd = to_dense(p);
    for (bool stiffness : {true, false}) {
      const SparseMatrix fine = stiffness ? assemble_stiffness(h.level(l)) : assemble_mass(h.level(l));
      const SparseMatrix coarse = stiffness ? assemble_stiffness(h.level(l - 1)) : assemble_mass(h.level(l - 1));
      const auto fd = to_dense(fine);
      const auto cd = to_dense(coarse);
      const int nc = coarse.rows();
      const int nf = fine.rows();
      double max_diff = 0.0;
      for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nc; ++j) {
          double rap = 0.0;
          for (int a = 0; a < nf; ++a) {
            if (pd.at(a, i) == 0.0) continue;
            for (int b = 0; b < nf; ++b) rap += pd.at(a, i) * fd.at(a, b) * pd.at(b, j);
          }
          max_diff = std::max(max_diff, std::abs(rap - cd.at(i, j)));
        }
      CHECK(max_diff <= 1e-13);
    }
  }
}

TEST_CASE("mesh dump is a parseable node/triangle listing") {
  const auto h = build_hierarchy(1, 1);
  std::ostringstream os;
  dump_mesh(h.level(1), os);
  std::istringstream is(os.str());
  int nodes = 0, tris = 0;
  is >> nodes >> tris;
  CHECK(nodes == 9);
  CHECK(tris == 8);
  double x, y;
  for (int i = 0; i < nodes; ++i) CHECK((is >> x >> y));
  int a, b, c;
  for (int i = 0; i < tris; ++i) {
    CHECK((is >> a >> b >> c));
    CHECK(a >= 0);
    CHECK(c < nodes);
  }
}
