#include "dcm/doubling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <tuple>

#include "dcm/errors.hpp"
#include "dcm/refinement.hpp"

namespace dcm {

DoubledSurface double_surface(const PLMetric& in) {
  const auto& m = in.mesh;
  if (!m.has_boundary()) throw Error(ErrorCode::NoBoundary, "surface is closed");
  const int n = m.num_vertices(), F = m.num_faces();

  DoubledSurface d;
  d.input_vertices = n;
  d.input_faces = F;
  std::vector<int> bid(n);
  int nv = n;
  for (int v = 0; v < n; ++v) bid[v] = m.is_boundary_vertex(v) ? v : nv++;
  d.mirror.resize(nv);
  d.vertex_copy.resize(nv);
  d.source_vertex.resize(nv);
  for (int v = 0; v < n; ++v) {
    d.mirror[v] = bid[v];
    d.mirror[bid[v]] = v;
    d.vertex_copy[v] = m.is_boundary_vertex(v) ? Copy::Seam : Copy::A;
    if (bid[v] != v) d.vertex_copy[bid[v]] = Copy::B;
    d.source_vertex[v] = v;
    d.source_vertex[bid[v]] = v;
  }

  std::vector<int> kidx(m.num_halfedges(), kNone);
  for (int f = 0; f < F; ++f) {
    auto hs = m.face_halfedges(f);
    for (int k = 0; k < 3; ++k) kidx[hs[k]] = k;
  }
  std::vector<std::array<int, 3>> tris(2 * F);
  std::vector<int> glue(6 * F, kNone);
  for (int f = 0; f < F; ++f) {
    auto c = m.face_vertices(f);
    tris[f] = c;
    tris[F + f] = {bid[c[0]], bid[c[2]], bid[c[1]]};
    auto hs = m.face_halfedges(f);
    for (int k = 0; k < 3; ++k) {
      const int tw = hs[k] ^ 1;
      const int sa = 3 * f + k, sb = 3 * (F + f) + 2 - k;
      if (m.face(tw) != kNone) {
        glue[sa] = 3 * m.face(tw) + kidx[tw];
        glue[sb] = 3 * (F + m.face(tw)) + 2 - kidx[tw];
      } else {
        glue[sa] = sb;
        glue[sb] = sa;
      }
    }
  }
  d.metric.mesh = HalfedgeSurface::from_gluing(nv, tris, glue);
  const auto& dm = d.metric.mesh;
  d.metric.length.assign(dm.num_edges(), 0.0);
  d.edge_mirror.assign(dm.num_edges(), kNone);
  d.face_mirror.resize(2 * F);
  for (int f = 0; f < F; ++f) {
    d.face_mirror[f] = F + f;
    d.face_mirror[F + f] = f;
    auto hs = m.face_halfedges(f);
    auto ha = dm.face_halfedges(f);
    auto hb = dm.face_halfedges(F + f);
    for (int k = 0; k < 3; ++k) {
      const double l = in.length[hs[k] >> 1];
      const int ea = ha[k] >> 1, eb = hb[2 - k] >> 1;
      d.metric.length[ea] = l;
      d.metric.length[eb] = l;
      d.edge_mirror[ea] = eb;
      d.edge_mirror[eb] = ea;
    }
  }
  return d;
}

std::vector<double> doubled_target(const DoubledSurface& d, const HalfedgeSurface& input,
                                   const std::vector<double>& target) {
  if (static_cast<int>(target.size()) != input.num_vertices())
    throw Error(ErrorCode::BadTarget, "target size does not match the surface");
  double sum = 0;
  for (int v = 0; v < input.num_vertices(); ++v) {
    const double cap = input.is_boundary_vertex(v) ? std::numbers::pi : 2.0 * std::numbers::pi;
    if (!std::isfinite(target[v]) || target[v] >= cap)
      throw Error(ErrorCode::BadTarget, "target at vertex " + std::to_string(v));
    sum += target[v];
  }
  const double want = 2.0 * std::numbers::pi * input.euler_characteristic();
  if (std::abs(sum - want) > 1e-6)
    throw Error(ErrorCode::BadTargetSum, "sum " + std::to_string(sum) + " differs from " + std::to_string(want));
  std::vector<double> out(d.mirror.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const int s = d.source_vertex[v];
    out[v] = d.vertex_copy[v] == Copy::Seam ? 2.0 * target[s] : target[s];
  }
  return out;
}

namespace {

using Triple = std::array<int, 3>;

Triple canonical(Triple t) {
  const int i = static_cast<int>(std::min_element(t.begin(), t.end()) - t.begin());
  return {t[i], t[(i + 1) % 3], t[(i + 2) % 3]};
}

struct FaceIndex {
  std::map<Triple, std::vector<int>> by_key;
  explicit FaceIndex(const HalfedgeSurface& m) {
    for (int f = 0; f < m.num_faces(); ++f) by_key[canonical(m.face_vertices(f))].push_back(f);
  }
};

// Relative side-length mismatch between f and a candidate mirror face g, or infinity.
double mirror_error(const PLMetric& M, const std::vector<int>& h, int f, int g) {
  const auto& m = M.mesh;
  auto hf = m.face_halfedges(f);
  auto hg = m.face_halfedges(g);
  const double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  // mirror of side a->b is h(b)->h(a); try the three rotations of g
  for (int r = 0; r < 3; ++r) {
    double err = 0;
    bool match = true;
    for (int k = 0; k < 3 && match; ++k) {
      const int x = hf[k];
      const int y = hg[(r + 3 - k) % 3];
      if (m.origin(y) != h[m.dest(x)] || m.dest(y) != h[m.origin(x)]) match = false;
      else err = std::max(err, std::abs(M(x) - M(y)) / std::max(M(x), M(y)));
    }
    if (match) best = std::min(best, err);
  }
  return best;
}

double quad_cocircularity(const PLMetric& M, int e) {
  const int h = 2 * e;
  return std::abs(opposite_angle(M, h) + opposite_angle(M, h ^ 1) - std::numbers::pi);
}

}  // namespace

SymmetryReport check_symmetry(const DeformState& s, const DoubledSurface& d) {
  SymmetryReport rep;
  const auto& h = d.mirror;
  for (std::size_t v = 0; v < h.size(); ++v)
    rep.max_w_asymmetry = std::max(rep.max_w_asymmetry, std::abs(s.w[v] - s.w[h[v]]));
  const PLMetric M = scaled_metric(s);
  const auto& m = M.mesh;
  FaceIndex index(m);
  std::vector<char> counted(m.num_edges(), 0);
  for (int f = 0; f < m.num_faces(); ++f) {
    auto c = m.face_vertices(f);
    bool hasA = false, hasB = false;
    for (int v : c) {
      hasA |= d.vertex_copy[v] == Copy::A;
      hasB |= d.vertex_copy[v] == Copy::B;
    }
    const bool crossing = hasA && hasB;
    rep.crossing_faces += crossing;
    double err = std::numeric_limits<double>::infinity();
    auto it = index.by_key.find(canonical({h[c[0]], h[c[2]], h[c[1]]}));
    if (it != index.by_key.end())
      for (int g : it->second) err = std::min(err, mirror_error(M, h, f, g));
    if (!crossing) {
      if (!std::isfinite(err))
        rep.violations.push_back("face " + std::to_string(f) + " has no mirror face");
      else
        rep.max_mirror_length_error = std::max(rep.max_mirror_length_error, err);
      continue;
    }
    // seam-crossing face: its diagonal must bound a mirror-invariant cocircular quad
    bool paired = std::isfinite(err);
    if (paired) rep.max_mirror_length_error = std::max(rep.max_mirror_length_error, err);
    for (int x : m.face_halfedges(f)) {
      const int p = m.origin(x), q = m.dest(x);
      const bool ab = (d.vertex_copy[p] == Copy::A && d.vertex_copy[q] == Copy::B) ||
                      (d.vertex_copy[p] == Copy::B && d.vertex_copy[q] == Copy::A);
      if (!ab || q == h[p]) continue;
      EdgeQuad Q = edge_quad(m, x >> 1);
      std::array<int, 4> vs{Q.u, Q.v, Q.up, Q.vp};
      auto in = [&](int v) { return std::find(vs.begin(), vs.end(), v) != vs.end(); };
      if (in(h[Q.u]) && in(h[Q.v]) && in(h[Q.up]) && in(h[Q.vp])) {
        paired = true;
        rep.max_cocircularity = std::max(rep.max_cocircularity, quad_cocircularity(M, x >> 1));
        if (!counted[x >> 1]) {
          counted[x >> 1] = 1;
          ++rep.paired_quads;
        }
      }
    }
    if (!paired) rep.violations.push_back("crossing face " + std::to_string(f) + " is not paired");
  }
  return rep;
}

namespace {

// Length of a rung edge (x, h(x)); negative when no such edge exists.
double rung_length(const PLMetric& M, int x, int hx) {
  double best = -1;
  for (int o : M.mesh.outgoing(x))
    if (M.mesh.dest(o) == hx) best = best < 0 ? M(o) : std::min(best, M(o));
  return best;
}

}  // namespace

CutSurface cut_half(const DeformState& s, const DoubledSurface& d, double sym_tol) {
  const auto rep = check_symmetry(s, d);
  if (!rep.ok(sym_tol)) {
    std::string msg = "asymmetry " + std::to_string(rep.max_w_asymmetry) + ", mirror error " +
                      std::to_string(rep.max_mirror_length_error);
    if (!rep.violations.empty()) msg += ", " + rep.violations.front();
    throw Error(ErrorCode::SymmetryViolation, msg);
  }
  const PLMetric M = scaled_metric(s);
  const auto& m = M.mesh;
  const auto& h = d.mirror;
  const auto& cls = d.vertex_copy;
  const int nf = m.num_faces();

  // side of every face: 0 = A, 1 = B, 2 = crossing, -1 = unknown (all seam vertices)
  std::vector<int> side(nf, -1);
  for (int f = 0; f < nf; ++f) {
    bool hasA = false, hasB = false;
    for (int v : m.face_vertices(f)) {
      hasA |= cls[v] == Copy::A;
      hasB |= cls[v] == Copy::B;
    }
    if (hasA && hasB)
      side[f] = 2;
    else if (hasA)
      side[f] = 0;
    else if (hasB)
      side[f] = 1;
  }
  auto is_mirror_pair = [&](int f, int g) {
    auto c = m.face_vertices(f);
    if (canonical(m.face_vertices(g)) != canonical({h[c[0]], h[c[2]], h[c[1]]})) return false;
    return mirror_error(M, h, f, g) <= 1e-9;
  };
  std::queue<int> queue;
  for (int f = 0; f < nf; ++f)
    if (side[f] == 0 || side[f] == 1) queue.push(f);
  for (int pass = 0;; ++pass) {
    while (!queue.empty()) {
      const int f = queue.front();
      queue.pop();
      const bool all_seam = [&] {
        for (int v : m.face_vertices(f))
          if (cls[v] != Copy::Seam) return false;
        return true;
      }();
      for (int x : m.face_halfedges(f)) {
        const int g = m.face(x ^ 1);
        if (g == kNone || side[g] != -1) continue;
        if (all_seam && is_mirror_pair(f, g)) continue;
        side[g] = side[f];
        queue.push(g);
      }
    }
    int seed = kNone;
    for (int f = 0; f < nf && seed == kNone; ++f)
      if (side[f] == -1) seed = f;
    if (seed == kNone) break;
    side[seed] = 0;
    queue.push(seed);
  }

  struct Point {
    int vertex;
    Eigen::Vector3d bary;
    int corner;     // corner index when the point is a face corner, else -1
    int on_side;    // side index when the point is a seam crossing, else -1
  };
  const int n = d.input_vertices;
  int next_vertex = n;
  std::map<int, int> inserted;  // double edge -> new vertex
  std::vector<int> source_vertex(n);
  for (int v = 0; v < n; ++v) source_vertex[v] = v;

  std::vector<std::array<int, 3>> tris;
  std::vector<std::array<long, 3>> keys;  // gluing key per side; < 0 means seam
  std::vector<std::array<double, 3>> lens;
  std::vector<int> src_face;
  std::vector<std::array<Eigen::Vector3d, 3>> src_bary;
  // side keys: 2e for a whole edge, 2e+1 for the A-side piece of a crossed edge,
  // -1 for seam segments, <= -2 for fan diagonals
  long fan_key = -1;

  for (int f = 0; f < nf; ++f) {
    if (side[f] == 1 || side[f] == -1) continue;
    auto hs = m.face_halfedges(f);
    const std::array<double, 3> L{M(hs[0]), M(hs[1]), M(hs[2])};
    const auto chart = layout_triangle(L[0], L[1], L[2]);
    auto at = [&](const Eigen::Vector3d& b) { return Eigen::Vector2d(b[0] * chart[0] + b[1] * chart[1] + b[2] * chart[2]); };

    std::vector<Point> poly;
    for (int k = 0; k < 3; ++k) {
      const int p = m.origin(hs[k]), q = m.dest(hs[k]);
      if (cls[p] != Copy::B) poly.push_back({p, Eigen::Vector3d::Unit(k), k, -1});
      const bool ab = (cls[p] == Copy::A && cls[q] == Copy::B) || (cls[p] == Copy::B && cls[q] == Copy::A);
      if (side[f] == 2 && ab) {
        const double rp = rung_length(M, p, h[p]), rq = rung_length(M, q, h[q]);
        if (rp < 0 || rq < 0)
          throw Error(ErrorCode::SymmetryViolation, "seam crossing without rungs at face " + std::to_string(f));
        const double fr = rp / (rp + rq);
        const int e = hs[k] >> 1;
        auto it = inserted.find(e);
        int id;
        if (it == inserted.end()) {
          id = next_vertex++;
          inserted[e] = id;
          source_vertex.push_back(kNone);
        } else {
          id = it->second;
        }
        Eigen::Vector3d b = Eigen::Vector3d::Zero();
        b[k] = 1.0 - fr;
        b[(k + 1) % 3] = fr;
        poly.push_back({id, b, -1, k});
      }
    }
    const int np = static_cast<int>(poly.size());
    auto side_key = [&](int i) -> long {
      const Point& P = poly[i];
      const Point& Q = poly[(i + 1) % np];
      if (P.corner >= 0 && Q.corner >= 0) return 2L * (hs[P.corner] >> 1);
      if (P.corner >= 0 && Q.on_side == P.corner) return 2L * (hs[P.corner] >> 1) + 1;
      if (Q.corner >= 0 && P.on_side >= 0 && (P.on_side + 1) % 3 == Q.corner) return 2L * (hs[P.on_side] >> 1) + 1;
      return -1;  // seam segment
    };
    auto side_len = [&](int i, int j) -> double {
      const Point& P = poly[i];
      const Point& Q = poly[j];
      if (P.corner >= 0 && Q.corner >= 0 && (P.corner + 1) % 3 == Q.corner) return L[P.corner];
      return (at(P.bary) - at(Q.bary)).norm();
    };
    int i0 = 0;
    if (side[f] == 2)
      while (cls[poly[i0].vertex] != Copy::A || poly[i0].corner < 0) ++i0;
    long prev_diag = -1;
    for (int j = 1; j + 1 < np; ++j) {
      const int a = i0, b = (i0 + j) % np, c = (i0 + j + 1) % np;
      tris.push_back({poly[a].vertex, poly[b].vertex, poly[c].vertex});
      const long kab = j == 1 ? side_key(a) : prev_diag;
      long kca;
      if (j + 2 == np) {
        kca = side_key(c);
      } else {
        kca = --fan_key;
        prev_diag = kca;
      }
      keys.push_back({kab, side_key(b), kca});
      lens.push_back({side_len(a, b), side_len(b, c), side_len(c, a)});
      src_face.push_back(f);
      src_bary.push_back({poly[a].bary, poly[b].bary, poly[c].bary});
    }
  }

  // glue sides with equal non-negative keys, and fan diagonals pairwise
  std::map<long, std::vector<int>> slots;
  for (std::size_t f = 0; f < keys.size(); ++f)
    for (int k = 0; k < 3; ++k)
      if (keys[f][k] >= 0 || keys[f][k] <= -2) slots[keys[f][k]].push_back(static_cast<int>(3 * f + k));
  std::vector<int> glue(3 * keys.size(), kNone);
  for (auto& [key, sl] : slots) {
    if (sl.size() == 2) {
      glue[sl[0]] = sl[1];
      glue[sl[1]] = sl[0];
    } else if (sl.size() > 2) {
      throw Error(ErrorCode::NonManifold, "cut side shared by " + std::to_string(sl.size()) + " faces");
    }
  }
  CutSurface out;
  out.metric.mesh = HalfedgeSurface::from_gluing(next_vertex, tris, glue);
  out.metric.length.assign(out.metric.mesh.num_edges(), 0.0);
  for (std::size_t f = 0; f < tris.size(); ++f) {
    auto hs = out.metric.mesh.face_halfedges(static_cast<int>(f));
    for (int k = 0; k < 3; ++k) {
      double& l = out.metric.length[hs[k] >> 1];
      if (l == 0) l = lens[f][k];
    }
  }
  out.source_vertex = std::move(source_vertex);
  out.source_face = std::move(src_face);
  out.source_bary = std::move(src_bary);
  return out;
}

}  // namespace dcm
