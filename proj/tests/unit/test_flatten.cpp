#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dcm/doubling.hpp"
#include "dcm/errors.hpp"
#include "dcm/flatten.hpp"
#include "meshes.hpp"

using namespace dcm;
using std::numbers::pi;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IOError;
}

double preset_sum(const FlatteningPreset& p) {
  double s = 0;
  for (double k : p.curvature) s += k;
  return s;
}

// Worst relative mismatch between laid out side lengths and the metric.
double isometry_error(const PlanarLayout& L, const PLMetric& m) {
  double worst = 0;
  for (int f = 0; f < m.mesh.num_faces(); ++f)
    for (int h : m.mesh.face_halfedges(f)) {
      const double d = (L.uv[m.mesh.dest(h)] - L.uv[m.mesh.origin(h)]).norm();
      worst = std::max(worst, std::abs(d / m(h) - 1));
    }
  return worst;
}

// Deforms a closed surface to the preset and cuts it open.
struct Flattened {
  PLMetric flat;
  FlatteningPreset preset;
  CutGraph cut;
  CutMesh disk;
  PlanarLayout layout;
};

Flattened flatten_closed(PLMetric M, PresetKind kind) {
  Flattened r;
  make_delaunay(M);
  auto s = make_state(M, false);
  r.preset = make_preset(M.mesh, kind);
  DeformOptions opt;
  opt.epsilon = 1e-11;  // flat enough for the isometry checks below
  deform(s, r.preset.dense(M.mesh.num_vertices()), opt);
  r.flat = scaled_metric(s);
  r.cut = build_cut(r.flat, r.preset.vertices);
  r.disk = cut_along(r.flat, r.cut);
  r.layout = layout(r.disk.metric);
  return r;
}

}  // namespace

TEST(Flatten, PresetNames) {
  for (auto k : {PresetKind::DiskToTriangle, PresetKind::DiskToRectangle, PresetKind::Sphere3Cones,
                 PresetKind::GenusCones})
    EXPECT_EQ(parse_preset(preset_name(k)), k);
  EXPECT_EQ(code_of([] { parse_preset("disk-to-hexagon"); }), ErrorCode::ParseError);
}

TEST(Flatten, DiskPresets) {
  auto m = build_from_triangles(fixtures::square_grid(7).tris);
  auto tri = make_preset(m, PresetKind::DiskToTriangle);
  ASSERT_EQ(tri.vertices.size(), 3u);
  for (double k : tri.curvature) EXPECT_NEAR(k, 2 * pi / 3, 1e-15);
  EXPECT_NEAR(preset_sum(tri), 2 * pi, 1e-9);
  for (int v : tri.vertices) EXPECT_TRUE(m.is_boundary_vertex(v));
  auto rect = make_preset(m, PresetKind::DiskToRectangle);
  ASSERT_EQ(rect.vertices.size(), 4u);
  for (double k : rect.curvature) EXPECT_NEAR(k, pi / 2, 1e-15);
  EXPECT_NEAR(preset_sum(rect), 2 * pi, 1e-9);
}

TEST(Flatten, DiskPresetVerticesAreSpreadAlongBoundary) {
  auto m = build_from_triangles(fixtures::square_grid(8).tris);
  auto loop = boundary_loops(m)[0];
  for (auto kind : {PresetKind::DiskToTriangle, PresetKind::DiskToRectangle}) {
    auto p = make_preset(m, kind);
    std::vector<int> idx;
    for (int v : p.vertices)
      for (std::size_t i = 0; i < loop.size(); ++i)
        if (m.origin(loop[i]) == v) idx.push_back(static_cast<int>(i));
    ASSERT_EQ(idx.size(), p.vertices.size());
    std::sort(idx.begin(), idx.end());
    const int L = static_cast<int>(loop.size());
    int lo = L, hi = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int gap = (idx[(i + 1) % idx.size()] - idx[i] + L) % L;
      lo = std::min(lo, gap);
      hi = std::max(hi, gap);
    }
    EXPECT_LE(hi - lo, 1);
    EXPECT_EQ(*std::min_element(p.vertices.begin(), p.vertices.end()), [&] {
      int best = m.num_vertices();
      for (int h : loop) best = std::min(best, m.origin(h));
      return best;
    }());
  }
}

TEST(Flatten, ClosedPresets) {
  auto sphere = build_from_triangles(fixtures::icosphere(2).tris);
  auto p = make_preset(sphere, PresetKind::Sphere3Cones);
  ASSERT_EQ(p.vertices.size(), 3u);
  EXPECT_NEAR(preset_sum(p), 4 * pi, 1e-9);
  auto g2 = fixtures::genus2();
  auto q = make_preset(g2.mesh, PresetKind::GenusCones);
  ASSERT_EQ(q.vertices.size(), 2u);
  for (double k : q.curvature) EXPECT_NEAR(k, -2 * pi, 1e-15);
  EXPECT_NEAR(preset_sum(q), 2 * pi * euler_characteristic(g2.mesh), 1e-9);
  auto torus = build_from_triangles(fixtures::torus_grid(6, 5).tris);
  EXPECT_TRUE(make_preset(torus, PresetKind::GenusCones).vertices.empty());
}

TEST(Flatten, PresetTopologyMismatch) {
  auto disk = build_from_triangles(fixtures::square_grid(4).tris);
  auto sphere = build_from_triangles(fixtures::icosphere(1).tris);
  auto torus = build_from_triangles(fixtures::torus_grid(6, 5).tris);
  EXPECT_EQ(code_of([&] { make_preset(sphere, PresetKind::DiskToTriangle); }), ErrorCode::TopologyMismatch);
  EXPECT_EQ(code_of([&] { make_preset(torus, PresetKind::Sphere3Cones); }), ErrorCode::TopologyMismatch);
  EXPECT_EQ(code_of([&] { make_preset(disk, PresetKind::GenusCones); }), ErrorCode::TopologyMismatch);
  EXPECT_EQ(code_of([&] { make_preset(sphere, PresetKind::GenusCones); }), ErrorCode::TopologyMismatch);
}

TEST(Flatten, DiskNeedsNoCut) {
  auto m = fixtures::square_grid(5).metric();
  EXPECT_EQ(build_cut(m, {}).num_edges(), 0);
}

TEST(Flatten, LayoutOfRightTriangle) {
  PLMetric m;
  m.mesh = build_from_triangles({{0, 1, 2}});
  for (int e = 0; e < 3; ++e) {
    const int a = m.mesh.origin(2 * e), b = m.mesh.dest(2 * e);
    const int s = a + b;  // 1: 0-1, 3: 1-2, 2: 0-2
    m.length.push_back(s == 1 ? 5.0 : s == 3 ? 3.0 : 4.0);
  }
  auto L = layout(m);
  EXPECT_TRUE(L.folds.empty());
  EXPECT_GT(signed_area(L, m.mesh, 0), 0);
  EXPECT_NEAR(L.uv[0].norm(), 0, 1e-15);
  EXPECT_NEAR(L.uv[1].x(), 5, 1e-15);
  EXPECT_NEAR(L.uv[1].y(), 0, 1e-15);
  EXPECT_NEAR((L.uv[2] - L.uv[0]).norm(), 4, 1e-12);
  EXPECT_NEAR((L.uv[2] - L.uv[1]).norm(), 3, 1e-12);
}

TEST(Flatten, LayoutOfFlatStrip) {
  auto m = fixtures::square_grid(2).metric();
  auto L = layout(m);
  EXPECT_TRUE(L.folds.empty());
  EXPECT_LT(isometry_error(L, m), 1e-9);
  for (int f = 0; f < m.mesh.num_faces(); ++f) EXPECT_GT(signed_area(L, m.mesh, f), 0);
}

TEST(FlattenProperty, SphereWithThreeCones) {
  auto r = flatten_closed(fixtures::icosphere(2).metric(), PresetKind::Sphere3Cones);
  EXPECT_EQ(euler_characteristic(r.disk.metric.mesh), 1);
  EXPECT_GT(r.cut.num_edges(), 0);
  for (int v : r.preset.vertices) {
    bool on_cut = false;
    for (int h : r.flat.mesh.outgoing(v)) on_cut = on_cut || r.cut.in_cut[h >> 1];
    EXPECT_TRUE(on_cut);
  }
  EXPECT_LT(isometry_error(r.layout, r.disk.metric), 1e-7);
  EXPECT_TRUE(r.layout.folds.empty());
}

TEST(FlattenProperty, Genus2WithTwoCones) {
  auto r = flatten_closed(fixtures::genus2(), PresetKind::GenusCones);
  EXPECT_EQ(euler_characteristic(r.disk.metric.mesh), 1);
  EXPECT_EQ(boundary_loops(r.disk.metric.mesh).size(), 1u);
  EXPECT_LT(isometry_error(r.layout, r.disk.metric), 1e-7);
}

TEST(FlattenProperty, TorusCutIsDisk) {
  auto r = flatten_closed(fixtures::torus_grid(10, 7).metric(), PresetKind::GenusCones);
  EXPECT_EQ(euler_characteristic(r.disk.metric.mesh), 1);
  EXPECT_LT(isometry_error(r.layout, r.disk.metric), 1e-7);
  EXPECT_TRUE(r.layout.folds.empty());
}

TEST(FlattenProperty, GluingTheCutRecoversConnectivity) {
  auto M = fixtures::genus2();
  auto cut = build_cut(M, make_preset(M.mesh, PresetKind::GenusCones).vertices);
  auto disk = cut_along(M, cut);
  EXPECT_EQ(disk.metric.mesh.num_faces(), M.mesh.num_faces());
  for (int f = 0; f < M.mesh.num_faces(); ++f) {
    auto a = M.mesh.face_vertices(f), b = disk.metric.mesh.face_vertices(f);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(disk.source_vertex[b[k]], a[k]);
  }
  int cut_sides = 0;
  for (char c : disk.cut_edge) cut_sides += c;
  EXPECT_EQ(cut_sides, 2 * cut.num_edges());
  EXPECT_EQ(disk.metric.mesh.num_edges(), M.mesh.num_edges() + cut.num_edges());
}

// Oracle: turning angles of the laid out boundary polygon.
TEST(FlattenProperty, DiskToTriangleBoundaryTurning) {
  std::mt19937 rng(3);
  auto pm = fixtures::square_grid(10);
  fixtures::jitter(pm, 0.01, rng);
  for (auto& p : pm.pos) p[2] = 0.3 * (p[0] * p[0] - p[1] * p[1]);
  auto in = pm.metric();
  auto preset = make_preset(in.mesh, PresetKind::DiskToTriangle);
  auto d = double_surface(in);
  auto M = d.metric;
  make_delaunay(M);
  auto s = make_state(M, true);
  DeformOptions opt;
  opt.symmetrize = true;
  opt.mirror = &d.mirror;
  opt.epsilon = 1e-11;
  deform(s, doubled_target(d, in.mesh, preset.dense(in.mesh.num_vertices())), opt);
  auto half = cut_half(s, d);
  auto disk = cut_along(half.metric, build_cut(half.metric, {}));
  auto L = layout(disk.metric);
  EXPECT_TRUE(L.folds.empty());
  EXPECT_LT(isometry_error(L, disk.metric), 1e-7);
  auto loops = boundary_loops(disk.metric.mesh);
  ASSERT_EQ(loops.size(), 1u);
  const auto& loop = loops[0];
  const int n = static_cast<int>(loop.size());
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const int h0 = loop[(i + n - 1) % n], h1 = loop[i];
    const int v = disk.metric.mesh.origin(h1);
    const Eigen::Vector2d a = L.uv[v] - L.uv[disk.metric.mesh.origin(h0)];
    const Eigen::Vector2d b = L.uv[disk.metric.mesh.dest(h1)] - L.uv[v];
    const double turn = std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    total += turn;
    const int src = disk.source_vertex[v];
    const bool mark = src < in.mesh.num_vertices() &&
                      half.source_vertex[src] != kNone &&
                      std::find(preset.vertices.begin(), preset.vertices.end(), half.source_vertex[src]) !=
                          preset.vertices.end();
    // the boundary runs clockwise around the faces, so corners turn by minus the curvature
    EXPECT_NEAR(std::abs(turn), mark ? 2 * pi / 3 : 0.0, 1e-4) << "vertex " << v;
  }
  EXPECT_NEAR(std::abs(total), 2 * pi, 1e-6);
}

TEST(Flatten, OverlaysWithoutDeformationCoincide) {
  auto M = fixtures::square_grid(4).metric();
  auto s = make_state(M, true);
  auto disk = cut_along(M, build_cut(M, {}));
  auto L = layout(disk.metric);
  auto src = FaceSource::identity(M.mesh.num_faces());
  auto lines = export_overlay(L, disk, src, s, true);
  int tp = 0;
  for (const auto& pl : lines) {
    EXPECT_NE(pl.cls, OverlayClass::TEdges);
    if (pl.cls != OverlayClass::TPrime) continue;
    ++tp;
    ASSERT_GE(pl.pts.size(), 2u);
    const Eigen::Vector2d a = pl.pts.front(), b = pl.pts.back();
    for (const auto& p : pl.pts) {
      const Eigen::Vector2d u = p - a, v = b - a;
      EXPECT_LT(std::abs(u.x() * v.y() - u.y() * v.x()), 1e-12);
    }
  }
  EXPECT_EQ(tp, M.mesh.num_edges());
}

TEST(Flatten, OverlayColors) {
  EXPECT_STREQ(overlay_color(OverlayClass::TPrime), "#d62728");
  EXPECT_STREQ(overlay_color(OverlayClass::TEdges), "#1f77b4");
  EXPECT_STREQ(overlay_color(OverlayClass::T0Edges), "#7f7f7f");
  EXPECT_STREQ(overlay_color(OverlayClass::Cut), "#2ca02c");
}
