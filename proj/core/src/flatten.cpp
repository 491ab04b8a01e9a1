#include "dcm/flatten.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>

#include "dcm/errors.hpp"
#include "dcm/refinement.hpp"

namespace dcm {

const char* preset_name(PresetKind k) {
  switch (k) {
    case PresetKind::DiskToTriangle: return "disk-to-triangle";
    case PresetKind::DiskToRectangle: return "disk-to-rectangle";
    case PresetKind::Sphere3Cones: return "sphere-3-cones";
    case PresetKind::GenusCones: return "genus-g-cones";
    case PresetKind::Custom: return "custom";
  }
  return "?";
}

PresetKind parse_preset(const std::string& s) {
  for (auto k : {PresetKind::DiskToTriangle, PresetKind::DiskToRectangle, PresetKind::Sphere3Cones,
                 PresetKind::GenusCones, PresetKind::Custom})
    if (s == preset_name(k)) return k;
  throw Error(ErrorCode::ParseError, "unknown preset '" + s + "'");
}

std::vector<double> FlatteningPreset::dense(int num_vertices) const {
  std::vector<double> K(num_vertices, 0.0);
  for (std::size_t i = 0; i < vertices.size(); ++i) K[vertices[i]] = curvature[i];
  return K;
}

namespace {

std::vector<int> hop_distance(const HalfedgeSurface& m, const std::vector<int>& sources) {
  std::vector<int> d(m.num_vertices(), std::numeric_limits<int>::max());
  std::queue<int> q;
  for (int s : sources) {
    d[s] = 0;
    q.push(s);
  }
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int h : m.outgoing(v)) {
      const int u = m.dest(h);
      if (d[u] > d[v] + 1) {
        d[u] = d[v] + 1;
        q.push(u);
      }
    }
  }
  return d;
}

std::vector<int> farthest_points(const HalfedgeSurface& m, int count) {
  std::vector<int> picked;
  if (count == 0) return picked;
  picked.push_back(0);
  while (static_cast<int>(picked.size()) < count) {
    auto d = hop_distance(m, picked);
    int best = 0;
    for (int v = 1; v < m.num_vertices(); ++v)
      if (d[v] > d[best]) best = v;
    picked.push_back(best);
  }
  return picked;
}

}  // namespace

FlatteningPreset make_preset(const HalfedgeSurface& m, PresetKind kind) {
  FlatteningPreset p;
  p.kind = kind;
  const int chi = m.euler_characteristic();
  const auto loops = boundary_loops(m);
  switch (kind) {
    case PresetKind::DiskToTriangle:
    case PresetKind::DiskToRectangle: {
      if (chi != 1 || loops.size() != 1)
        throw Error(ErrorCode::TopologyMismatch, std::string(preset_name(kind)) + " needs a disk");
      const int k = kind == PresetKind::DiskToTriangle ? 3 : 4;
      const auto& loop = loops[0];
      const int L = static_cast<int>(loop.size());
      if (L < k) throw Error(ErrorCode::TopologyMismatch, "boundary has fewer than " + std::to_string(k) + " vertices");
      int start = 0;
      for (int i = 1; i < L; ++i)
        if (m.origin(loop[i]) < m.origin(loop[start])) start = i;
      for (int i = 0; i < k; ++i) {
        p.vertices.push_back(m.origin(loop[(start + static_cast<long>(i) * L / k) % L]));
        p.curvature.push_back(2.0 * std::numbers::pi / k);
      }
      break;
    }
    case PresetKind::Sphere3Cones:
      if (chi != 2 || !loops.empty()) throw Error(ErrorCode::TopologyMismatch, "sphere-3-cones needs a sphere");
      p.vertices = farthest_points(m, 3);
      p.curvature.assign(3, 4.0 * std::numbers::pi / 3.0);
      break;
    case PresetKind::GenusCones: {
      if (!loops.empty() || chi > 0 || chi % 2 != 0)
        throw Error(ErrorCode::TopologyMismatch, "genus-g-cones needs a closed surface of genus >= 1");
      const int g = (2 - chi) / 2;
      p.vertices = farthest_points(m, 2 * (g - 1));
      p.curvature.assign(p.vertices.size(), -2.0 * std::numbers::pi);
      break;
    }
    case PresetKind::Custom:
      throw Error(ErrorCode::TopologyMismatch, "custom presets come from a curvature file");
  }
  return p;
}

int CutGraph::num_edges() const { return static_cast<int>(std::count(in_cut.begin(), in_cut.end(), 1)); }

CutGraph build_cut(const PLMetric& M, const std::vector<int>& singular) {
  const auto& m = M.mesh;
  const int nv = m.num_vertices(), ne = m.num_edges(), nf = m.num_faces();
  std::vector<char> is_singular(nv, 0);
  for (int v : singular) is_singular[v] = 1;

  // shortest-path tree; one boundary loop acts as the root, other loops are entered as a whole
  std::vector<double> dist(nv, std::numeric_limits<double>::infinity());
  std::vector<int> parent_edge(nv, kNone);
  std::vector<char> tree(ne, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const auto loops = boundary_loops(m);
  std::vector<int> loop_of(nv, kNone);
  for (int i = 0; i < static_cast<int>(loops.size()); ++i)
    for (int h : loops[i]) loop_of[m.origin(h)] = i;
  std::vector<char> loop_entered(loops.size(), 0);
  auto enter_loop = [&](int i, double d) {
    loop_entered[i] = 1;
    for (int h : loops[i]) {
      const int v = m.origin(h);
      if (dist[v] > d) {
        dist[v] = d;
        parent_edge[v] = kNone;
        pq.emplace(d, v);
      }
    }
  };
  if (!loops.empty()) {
    enter_loop(0, 0.0);
  } else {
    const int root = singular.empty() ? 0 : singular[0];
    dist[root] = 0;
    pq.emplace(0.0, root);
  }
  std::vector<char> done(nv, 0);
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (done[v] || d > dist[v]) continue;
    done[v] = 1;
    if (parent_edge[v] != kNone) tree[parent_edge[v]] = 1;
    if (loop_of[v] != kNone && !loop_entered[loop_of[v]]) enter_loop(loop_of[v], d);
    for (int h : m.outgoing(v)) {
      if (m.is_boundary_edge(h >> 1)) continue;
      const int u = m.dest(h);
      if (!done[u] && d + M(h) < dist[u]) {
        dist[u] = d + M(h);
        parent_edge[u] = h >> 1;
        pq.emplace(dist[u], u);
      }
    }
  }

  // dual spanning tree across interior edges not in the primal tree
  std::vector<char> cotree(ne, 0), seen(nf, 0);
  std::queue<int> q;
  if (nf > 0) {
    seen[0] = 1;
    q.push(0);
  }
  while (!q.empty()) {
    const int f = q.front();
    q.pop();
    for (int h : m.face_halfedges(f)) {
      const int e = h >> 1, g = m.face(h ^ 1);
      if (g == kNone || tree[e] || seen[g]) continue;
      seen[g] = 1;
      cotree[e] = 1;
      q.push(g);
    }
  }

  CutGraph c;
  c.in_cut.assign(ne, 0);
  std::vector<int> degree(nv, 0);
  for (int e = 0; e < ne; ++e) {
    if (m.is_boundary_edge(e) || cotree[e]) continue;
    c.in_cut[e] = 1;
    ++degree[m.origin(2 * e)];
    ++degree[m.dest(2 * e)];
  }
  // prune dangling branches
  std::queue<int> leaves;
  for (int v = 0; v < nv; ++v)
    if (degree[v] == 1 && !is_singular[v] && !m.is_boundary_vertex(v)) leaves.push(v);
  while (!leaves.empty()) {
    const int v = leaves.front();
    leaves.pop();
    if (degree[v] != 1) continue;
    for (int h : m.outgoing(v)) {
      const int e = h >> 1;
      if (!c.in_cut[e]) continue;
      c.in_cut[e] = 0;
      --degree[v];
      const int u = m.dest(h);
      --degree[u];
      if (degree[u] == 1 && !is_singular[u] && !m.is_boundary_vertex(u)) leaves.push(u);
      break;
    }
  }
  return c;
}

CutMesh cut_along(const PLMetric& M, const CutGraph& cut) {
  const auto& m = M.mesh;
  const int nh = m.num_halfedges(), nf = m.num_faces();
  // corners are named by their outgoing interior halfedge
  std::vector<int> uf(nh);
  std::iota(uf.begin(), uf.end(), 0);
  std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
  auto unite = [&](int a, int b) { uf[find(a)] = find(b); };
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.is_boundary_edge(e) || cut.in_cut[e]) continue;
    const int x = 2 * e;
    unite(x, m.next(x ^ 1));
    unite(x ^ 1, m.next(x));
  }
  std::vector<int> id(nh, kNone);
  CutMesh out;
  std::vector<std::array<int, 3>> tris(nf);
  for (int f = 0; f < nf; ++f) {
    auto hs = m.face_halfedges(f);
    for (int k = 0; k < 3; ++k) {
      const int r = find(hs[k]);
      if (id[r] == kNone) {
        id[r] = static_cast<int>(out.source_vertex.size());
        out.source_vertex.push_back(m.origin(hs[k]));
      }
      tris[f][k] = id[r];
    }
  }
  std::vector<int> kidx(nh, kNone);
  for (int f = 0; f < nf; ++f) {
    auto hs = m.face_halfedges(f);
    for (int k = 0; k < 3; ++k) kidx[hs[k]] = k;
  }
  std::vector<int> glue(3 * nf, kNone);
  for (int e = 0; e < m.num_edges(); ++e) {
    if (m.is_boundary_edge(e) || cut.in_cut[e]) continue;
    const int x = 2 * e;
    const int sa = 3 * m.face(x) + kidx[x], sb = 3 * m.face(x ^ 1) + kidx[x ^ 1];
    glue[sa] = sb;
    glue[sb] = sa;
  }
  out.metric.mesh = HalfedgeSurface::from_gluing(static_cast<int>(out.source_vertex.size()), tris, glue);
  out.metric.length.assign(out.metric.mesh.num_edges(), 0.0);
  out.cut_edge.assign(out.metric.mesh.num_edges(), 0);
  for (int f = 0; f < nf; ++f) {
    auto hs = m.face_halfedges(f);
    auto hn = out.metric.mesh.face_halfedges(f);
    for (int k = 0; k < 3; ++k) {
      out.metric.length[hn[k] >> 1] = M(hs[k]);
      if (cut.in_cut[hs[k] >> 1]) out.cut_edge[hn[k] >> 1] = 1;
    }
  }
  return out;
}

double signed_area(const PlanarLayout& L, const HalfedgeSurface& m, int f) {
  auto c = m.face_vertices(f);
  const Eigen::Vector2d a = L.uv[c[1]] - L.uv[c[0]], b = L.uv[c[2]] - L.uv[c[0]];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

PlanarLayout layout(const PLMetric& M) {
  // Each face is laid out in its own frame and carries a rigid motion into the plane.
  // Motions are composed along a breadth-first dual tree from frame-local quantities
  // only, so roundoff grows with tree depth instead of compounding through positions.
  using C = std::complex<double>;
  const auto& m = M.mesh;
  PlanarLayout L;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  L.uv.assign(m.num_vertices(), Eigen::Vector2d(nan, nan));
  const int nf = m.num_faces();
  if (nf == 0) return L;

  // local corner positions, corner k = origin of face_halfedges(f)[k]
  auto local = [&](int f) {
    auto hs = m.face_halfedges(f);
    auto tri = layout_triangle(M(hs[0]), M(hs[1]), M(hs[2]));
    return std::array<C, 3>{C(tri[0].x(), tri[0].y()), C(tri[1].x(), tri[1].y()), C(tri[2].x(), tri[2].y())};
  };
  auto slot = [&](int f, int h) {
    auto hs = m.face_halfedges(f);
    return h == hs[0] ? 0 : h == hs[1] ? 1 : 2;
  };

  int seed = 0;
  for (int h = 0; h < m.num_halfedges(); ++h)
    if (!m.is_boundary_halfedge(h) && M(h) > M(seed)) seed = h;
  if (m.is_boundary_halfedge(seed)) seed ^= 1;

  std::vector<C> rot(nf), tr(nf);
  std::vector<std::array<C, 3>> P(nf);
  std::vector<char> done(nf, 0);
  std::vector<int> order;
  order.reserve(nf);
  {
    const int f = m.face(seed);
    P[f] = local(f);
    const int k = slot(f, seed);
    const C d = P[f][(k + 1) % 3] - P[f][k];
    rot[f] = std::conj(d) / std::abs(d);
    tr[f] = -rot[f] * P[f][k];
    done[f] = 1;
    order.push_back(f);
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int f = order[i];
    for (int x : m.face_halfedges(f)) {
      const int y = x ^ 1, g = m.face(y);
      if (g == kNone || done[g]) continue;
      P[g] = local(g);
      const int kx = slot(f, x), ky = slot(g, y);
      const C df = P[f][(kx + 1) % 3] - P[f][kx];
      const C dg = P[g][(ky + 1) % 3] - P[g][ky];
      C r = -rot[f] * (df / std::abs(df)) * (std::conj(dg) / std::abs(dg));
      rot[g] = r / std::abs(r);
      // origin(y) == dest(x)
      tr[g] = rot[f] * P[f][(kx + 1) % 3] + tr[f] - rot[g] * P[g][ky];
      done[g] = 1;
      order.push_back(g);
    }
  }
  std::vector<char> placed(m.num_vertices(), 0);
  for (int f : order) {
    auto hs = m.face_halfedges(f);
    for (int k = 0; k < 3; ++k) {
      const int v = m.origin(hs[k]);
      if (placed[v]) continue;
      const C z = rot[f] * P[f][k] + tr[f];
      L.uv[v] = Eigen::Vector2d(z.real(), z.imag());
      placed[v] = 1;
    }
  }
  for (int f = 0; f < nf; ++f)
    if (!(signed_area(L, m, f) > 0)) L.folds.push_back(f);
  return L;
}

FaceSource FaceSource::identity(int num_faces) {
  FaceSource s;
  s.face.resize(num_faces);
  s.bary.resize(num_faces);
  for (int f = 0; f < num_faces; ++f) {
    s.face[f] = f;
    s.bary[f] = {Eigen::Vector3d::Unit(0), Eigen::Vector3d::Unit(1), Eigen::Vector3d::Unit(2)};
  }
  return s;
}

const char* overlay_color(OverlayClass c) {
  switch (c) {
    case OverlayClass::TPrime: return "#d62728";
    case OverlayClass::TEdges: return "#1f77b4";
    case OverlayClass::T0Edges: return "#7f7f7f";
    case OverlayClass::Cut: return "#2ca02c";
  }
  return "#000000";
}

LayoutLocator::LayoutLocator(const PlanarLayout& L, const HalfedgeSurface& disk, const FaceSource& src,
                             int num_tp_faces)
    : L_(L), disk_(disk), src_(src), by_tp_(num_tp_faces) {
  for (int f = 0; f < static_cast<int>(src.face.size()); ++f) by_tp_[src.face[f]].push_back(f);
}

std::optional<Eigen::Vector2d> LayoutLocator::locate(int tp_face, const Eigen::Vector3d& bary) const {
  std::optional<Eigen::Vector2d> best;
  double best_score = -1e-9;
  for (int f : by_tp_[tp_face]) {
    Eigen::Matrix3d B;
    for (int i = 0; i < 3; ++i) B.col(i) = src_.bary[f][i];
    const Eigen::Vector3d lam = B.partialPivLu().solve(bary);
    const double score = lam.minCoeff();
    if (score >= best_score) {
      best_score = score;
      auto c = disk_.face_vertices(f);
      best = lam[0] * L_.uv[c[0]] + lam[1] * L_.uv[c[1]] + lam[2] * L_.uv[c[2]];
    }
  }
  return best;
}

namespace {

// Bary of a refinement polygon point re-expressed in T'.face_halfedges order.
Eigen::Vector3d to_face_order(const HalfedgeSurface& tp, int tp_he, const Eigen::Vector3d& b) {
  const int f = tp.face(tp_he);
  const int ref = tp.face_halfedge(f);
  int shift = 0;
  for (int x = tp_he; x != ref; x = tp.next(x)) ++shift;
  // corner i from tp_he is corner (i + shift) from ref
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) out[(i + shift) % 3] = b[i];
  return out;
}

}  // namespace

std::vector<Polyline> export_overlay(const PlanarLayout& L, const CutMesh& disk, const FaceSource& src,
                                     const DeformState& s, bool with_t_edges) {
  std::vector<Polyline> out;
  const auto& dm = disk.metric.mesh;
  for (int e = 0; e < dm.num_edges(); ++e) {
    const int a = dm.origin(2 * e), b = dm.dest(2 * e);
    out.push_back({disk.cut_edge[e] ? OverlayClass::Cut : OverlayClass::TPrime, {L.uv[a], L.uv[b]}});
  }
  if (!with_t_edges || !s.refinement) return out;
  const auto& r = *s.refinement;
  LayoutLocator loc(L, dm, src, s.mesh.num_faces());
  const auto& hes = r.halfedges();
  for (int f = 0; f < static_cast<int>(r.faces().size()); ++f) {
    const auto& F = r.faces()[f];
    if (!F.alive) continue;
    const auto cyc = r.face_cycle(f);
    const auto poly = r.polygon_tp(f, s.mesh);
    const int n = static_cast<int>(cyc.size());
    for (int j = 0; j < n; ++j) {
      const int x = cyc[j];
      if (hes[x].parent_t == kNone || hes[x].parent_tp != kNone) continue;
      // draw each T-only piece once
      const int tw = x ^ 1;
      if (hes[tw].face != kNone && r.faces()[hes[tw].face].alive && tw < x) continue;
      auto p = loc.locate(F.host_tp, to_face_order(s.mesh, F.tp_he, poly[j]));
      auto q = loc.locate(F.host_tp, to_face_order(s.mesh, F.tp_he, poly[(j + 1) % n]));
      if (p && q) out.push_back({OverlayClass::TEdges, {*p, *q}});
    }
  }
  return out;
}

std::vector<Polyline> export_t0_overlay(const PlanarLayout& L, const CutMesh& disk, const FaceSource& src,
                                        const DeformState& s, const PLMetric& t0,
                                        const std::vector<FlipRecord>& flips, int samples_per_piece) {
  std::vector<Polyline> out;
  if (!s.refinement || flips.empty()) return out;
  // T0 u T with w = 0: isometric flips replayed on the refinement machinery
  DeformState z = make_state(t0, true);
  for (const auto& fr : flips) {
    const SwitchInfo info = make_switch_info(z.mesh, fr.edge, fr.old_length, fr.l1, fr.l2, fr.l1p, fr.l2p);
    flip_edge(z.mesh, fr.edge);
    z.base[fr.edge] = fr.new_length;
    apply_switch(*z.refinement, info, z.mesh, z.w);
  }
  const auto& r0 = *z.refinement;
  const auto& r = *s.refinement;
  LayoutLocator loc(L, disk.metric.mesh, src, s.mesh.num_faces());
  const auto& hes = r0.halfedges();
  for (int f = 0; f < static_cast<int>(r0.faces().size()); ++f) {
    const auto& F = r0.faces()[f];
    if (!F.alive) continue;
    const auto cyc = r0.face_cycle(f);
    const auto poly = r0.polygon_tp(f, z.mesh);
    const int n = static_cast<int>(cyc.size());
    for (int j = 0; j < n; ++j) {
      const int x = cyc[j];
      if (hes[x].parent_t == kNone || hes[x].parent_tp != kNone) continue;
      if ((x ^ 1) < x) continue;
      Polyline pl{OverlayClass::T0Edges, {}};
      const Eigen::Vector3d a = to_face_order(z.mesh, F.tp_he, poly[j]);
      const Eigen::Vector3d b = to_face_order(z.mesh, F.tp_he, poly[(j + 1) % n]);
      for (int k = 0; k <= samples_per_piece; ++k) {
        const double t = static_cast<double>(k) / samples_per_piece;
        const Eigen::Vector3d p = (1.0 - t) * a + t * b;
        try {
          const MappedPoint mp = map_point(r, s.mesh, s.base, s.w, F.host_tp, p);
          if (auto uv = loc.locate(mp.face, mp.bary)) pl.pts.push_back(*uv);
        } catch (const Error&) {
        }
      }
      if (pl.pts.size() >= 2) out.push_back(std::move(pl));
    }
  }
  return out;
}

}  // namespace dcm
