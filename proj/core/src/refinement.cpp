#include "dcm/refinement.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dcm/errors.hpp"
#include "dcm/metric.hpp"

namespace dcm {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double logit(double s) { return std::log(s / (1.0 - s)); }
double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::Vector2d apex(double base, double left, double right, double sign) {
  // point at distance `left` from (0,0) and `right` from (base,0)
  const double x = (base * base + left * left - right * right) / (2.0 * base);
  const double y = 2.0 * triangle_area(base, left, right) / base;
  return {x, sign * y};
}

// Positions of a face's vertices from its host triangle, as 2D points.
struct HostFrame {
  std::array<int, 3> ks{};           // host halfedges, side i runs corner i -> corner i+1
  std::array<Eigen::Vector2d, 3> P;  // corner positions
  std::array<int, 3> ids{};          // corner vertex ids
};

Eigen::Vector2d bary_to_2d(const Eigen::Vector3d& b) { return {b[1], b[2]}; }
Eigen::Vector3d unit(int i) { return Eigen::Vector3d::Unit(i); }

}  // namespace

std::array<Eigen::Vector2d, 3> layout_triangle(double l01, double l12, double l20) {
  return {Eigen::Vector2d(0, 0), Eigen::Vector2d(l01, 0), apex(l01, l20, l12, 1.0)};
}

Eigen::Vector3d bary_of_point(const std::array<Eigen::Vector2d, 3>& tri, const Eigen::Vector2d& p) {
  const double area = cross2(tri[1] - tri[0], tri[2] - tri[0]);
  const double b0 = cross2(tri[1] - p, tri[2] - p) / area;
  const double b1 = cross2(tri[2] - p, tri[0] - p) / area;
  return {b0, b1, 1.0 - b0 - b1};
}

SwitchInfo make_switch_info(const HalfedgeSurface& tp, int e, double le, double l1, double l2, double l1p,
                            double l2p) {
  EdgeQuad q = edge_quad(tp, e);
  SwitchInfo s;
  s.e = e;
  s.h = q.h;
  s.a = q.e1;
  s.b = q.e2;
  s.c = q.e1p;
  s.d = q.e2p;
  s.f = q.f;
  s.fp = q.fp;
  s.u = q.u;
  s.v = q.v;
  s.up = q.up;
  s.vp = q.vp;
  s.pu = Eigen::Vector2d(0, 0);
  s.pv = Eigen::Vector2d(le, 0);
  s.pup = apex(le, l2, l1, 1.0);
  s.pvp = apex(le, l1p, l2p, -1.0);
  return s;
}

Eigen::Vector3d projective_weights(const std::array<double, 3>& d, const std::array<double, 3>& dp) {
  const double r01 = dp[0] / d[0], r12 = dp[1] / d[1], r20 = dp[2] / d[2];
  return {r12 / (r01 * r20), r20 / (r01 * r12), r01 / (r12 * r20)};
}

Eigen::Vector3d projective_map_eval(double wa, double wb, double wc, const Eigen::Vector3d& bary) {
  Eigen::Vector3d y(bary[0] * std::exp(-2.0 * wa), bary[1] * std::exp(-2.0 * wb), bary[2] * std::exp(-2.0 * wc));
  return y / y.sum();
}

double linear_distortion(const std::array<double, 3>& from, const std::array<double, 3>& to) {
  auto P = layout_triangle(from[0], from[1], from[2]);
  auto Q = layout_triangle(to[0], to[1], to[2]);
  Eigen::Matrix2d S, T;
  S << P[1] - P[0], P[2] - P[0];
  T << Q[1] - Q[0], Q[2] - Q[0];
  Eigen::Matrix2d A = T * S.inverse();
  const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  const double alpha = 0.5 * std::hypot(a + d, c - b);
  const double beta = 0.5 * std::hypot(a - d, c + b);
  if (!(alpha > beta)) throw Error(ErrorCode::DegenerateTriangle, "linear map is not orientation preserving");
  return (alpha + beta) / (alpha - beta);
}

// ---------------------------------------------------------------------------

int RefinementSurface::new_vertex() {
  verts_.emplace_back();
  return static_cast<int>(verts_.size()) - 1;
}

int RefinementSurface::new_edge() {
  hes_.emplace_back();
  hes_.emplace_back();
  return static_cast<int>(hes_.size()) - 2;
}

int RefinementSurface::new_face() {
  faces_.emplace_back();
  return static_cast<int>(faces_.size()) - 1;
}

int RefinementSurface::num_live_faces() const {
  int n = 0;
  for (const auto& f : faces_) n += f.alive;
  return n;
}

int RefinementSurface::num_live_vertices() const {
  int n = 0;
  for (const auto& v : verts_) n += v.alive;
  return n;
}

int RefinementSurface::num_crossings() const {
  int n = 0;
  for (const auto& v : verts_) n += v.alive && v.kind == Kind::Crossing;
  return n;
}

std::vector<int> RefinementSurface::face_cycle(int face) const {
  std::vector<int> cyc;
  const int start = faces_[face].he;
  int r = start;
  do {
    cyc.push_back(r);
    r = hes_[r].next;
    if (cyc.size() > hes_.size()) throw Error(ErrorCode::DegenerateIntersection, "broken face cycle");
  } while (r != start);
  return cyc;
}

std::vector<int> RefinementSurface::chain(int parent, bool on_tp) const {
  std::vector<int> seq;
  auto par = [&](int x) { return on_tp ? hes_[x].parent_tp : hes_[x].parent_t; };
  int r = on_tp ? first_tp_[parent] : first_t_[parent];
  if (r == kNone) return seq;
  while (true) {
    seq.push_back(r);
    const int v = hes_[r ^ 1].origin;
    if (verts_[v].kind == Kind::Original) break;
    int c = hes_[r].next;
    int guard = 0;
    while (par(c) != parent) {
      c = hes_[c ^ 1].next;
      if (++guard > 64) throw Error(ErrorCode::DegenerateIntersection, "chain lost at vertex " + std::to_string(v));
    }
    r = c;
    if (seq.size() > hes_.size()) throw Error(ErrorCode::DegenerateIntersection, "chain does not terminate");
  }
  return seq;
}

std::vector<std::vector<int>> RefinementSurface::faces_by_host_t() const {
  std::vector<std::vector<int>> out(t_.num_faces());
  for (int i = 0; i < static_cast<int>(faces_.size()); ++i)
    if (faces_[i].alive) out[faces_[i].host_t].push_back(i);
  return out;
}

std::string RefinementSurface::validate(const HalfedgeSurface& tp) const {
  auto fail = [](const std::string& m) { return m; };
  const int nh = static_cast<int>(hes_.size());
  for (int x = 0; x < nh; ++x) {
    const auto& H = hes_[x];
    if (!H.alive) continue;
    if (!hes_[x ^ 1].alive) return fail("twin of " + std::to_string(x) + " dead");
    if (H.face == kNone) continue;
    if (!faces_[H.face].alive) return fail("halfedge " + std::to_string(x) + " in dead face");
    if (hes_[H.next].prev != x || hes_[H.next].face != H.face)
      return fail("next/prev mismatch at " + std::to_string(x));
    if (hes_[H.next].origin != hes_[x ^ 1].origin) return fail("origin mismatch after " + std::to_string(x));
    if (!verts_[H.origin].alive) return fail("dead origin at " + std::to_string(x));
    if (H.parent_t == kNone && H.parent_tp == kNone) return fail("orphan piece " + std::to_string(x));
  }
  for (const auto& V : verts_) {
    if (!V.alive || V.kind != Kind::Crossing) continue;
    if (!(V.s > 0 && V.s < 1) || !(V.sp > 0 && V.sp < 1)) return fail("crossing parameter out of range");
  }
  for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
    const auto& F = faces_[f];
    if (!F.alive) continue;
    if (hes_[F.he].face != f) return fail("face " + std::to_string(f) + " he mismatch");
    if (tp.face(F.tp_he) != F.host_tp) return fail("face " + std::to_string(f) + " tp_he not in host_tp");
    try {
      const auto pt = polygon_t(f);
      const auto ptp = polygon_tp(f, tp);
      auto area = [](const std::vector<Eigen::Vector3d>& p) {
        double a = 0;
        for (std::size_t j = 0; j < p.size(); ++j) {
          const auto& b0 = p[j];
          const auto& b1 = p[(j + 1) % p.size()];
          a += b0[1] * b1[2] - b0[2] * b1[1];
        }
        return a;
      };
      if (!(area(pt) > -1e-12)) return fail("face " + std::to_string(f) + " has non-positive area in T");
      if (!(area(ptp) > -1e-12)) return fail("face " + std::to_string(f) + " has non-positive area in T'");
    } catch (const std::exception& e) {
      return fail("face " + std::to_string(f) + ": " + e.what());
    }
  }
  for (int k = 0; k < t_.num_halfedges(); ++k) {
    try {
      for (int x : chain(k, false))
        if (hes_[x].parent_t != k) return fail("T chain of " + std::to_string(k) + " has foreign piece");
    } catch (const std::exception& e) {
      return fail(std::string("T chain: ") + e.what());
    }
  }
  for (int k = 0; k < tp.num_halfedges(); ++k) {
    try {
      auto c = chain(k, true);
      if (c.empty() || hes_[c.front()].origin == kNone) return fail("empty T' chain");
      if (verts_[hes_[c.front()].origin].orig != tp.origin(k)) return fail("T' chain of " + std::to_string(k) + " starts off its origin");
      for (int x : c)
        if (hes_[x].parent_tp != k) return fail("T' chain of " + std::to_string(k) + " has foreign piece");
    } catch (const std::exception& e) {
      return fail(std::string("T' chain: ") + e.what());
    }
  }
  return {};
}

namespace {

// Computes 2D positions of the origins of a face cycle relative to a host triangle frame.
template <class Parent, class Param>
std::vector<Eigen::Vector2d> frame_positions(const RefinementSurface& r, const std::vector<int>& cyc,
                                             const HostFrame& fr, Parent par, Param param) {
  const auto& hes = r.halfedges();
  const auto& verts = r.vertices();
  const int n = static_cast<int>(cyc.size());
  std::vector<Eigen::Vector2d> pos(n);
  std::vector<std::vector<int>> ambiguous(n);
  std::vector<char> known(n, 0);

  auto side_index = [&](int k) {
    for (int i = 0; i < 3; ++i)
      if (fr.ks[i] == k) return i;
    throw Error(ErrorCode::DegenerateIntersection, "piece parent is not a side of its host");
  };
  auto along = [&](int k, int vtx, bool at_end) {
    const int i = side_index(k);
    double s = at_end ? 1.0 : 0.0;
    if (verts[vtx].kind == RefinementSurface::Kind::Crossing) {
      auto [hh, ss] = param(verts[vtx]);
      if (hh == k)
        s = ss;
      else if (hh == (k ^ 1))
        s = 1.0 - ss;
      else
        throw Error(ErrorCode::DegenerateIntersection, "crossing vertex off its host edge");
    }
    return Eigen::Vector2d((1.0 - s) * fr.P[i] + s * fr.P[(i + 1) % 3]);
  };

  for (int j = 0; j < n; ++j) {
    const int x = cyc[j];
    const int p = cyc[(j + n - 1) % n];
    const int v = hes[x].origin;
    if (par(x) != kNone) {
      pos[j] = along(par(x), v, false);
      known[j] = 1;
    } else if (par(p) != kNone) {
      pos[j] = along(par(p), v, true);
      known[j] = 1;
    } else {
      for (int i = 0; i < 3; ++i)
        if (fr.ids[i] == verts[v].orig) ambiguous[j].push_back(i);
      if (ambiguous[j].empty()) throw Error(ErrorCode::DegenerateIntersection, "corner not found in host");
      if (ambiguous[j].size() == 1) {
        pos[j] = fr.P[ambiguous[j][0]];
        known[j] = 1;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    if (known[j]) continue;
    // pick the corner that keeps the polygon convex with its neighbours
    const Eigen::Vector2d& a = pos[(j + n - 1) % n];
    const Eigen::Vector2d& b = pos[(j + 1) % n];
    double best = -std::numeric_limits<double>::infinity();
    for (int i : ambiguous[j]) {
      const double o = cross2(fr.P[i] - a, b - fr.P[i]);
      if (o > best) {
        best = o;
        pos[j] = fr.P[i];
      }
    }
    known[j] = 1;
  }
  return pos;
}

HostFrame t_frame(const HalfedgeSurface& T, int f) {
  HostFrame fr;
  fr.ks = T.face_halfedges(f);
  for (int i = 0; i < 3; ++i) {
    fr.P[i] = bary_to_2d(unit(i));
    fr.ids[i] = T.origin(fr.ks[i]);
  }
  return fr;
}

HostFrame tp_frame(const HalfedgeSurface& tp, int he) {
  HostFrame fr;
  fr.ks = {he, tp.next(he), tp.prev(he)};
  for (int i = 0; i < 3; ++i) {
    fr.P[i] = bary_to_2d(unit(i));
    fr.ids[i] = tp.origin(fr.ks[i]);
  }
  return fr;
}

Eigen::Vector3d from_2d_bary(const Eigen::Vector2d& p) { return {1.0 - p.x() - p.y(), p.x(), p.y()}; }

}  // namespace

std::vector<Eigen::Vector3d> RefinementSurface::polygon_t(int face) const {
  auto cyc = face_cycle(face);
  auto pos = frame_positions(
      *this, cyc, t_frame(t_, faces_[face].host_t), [&](int x) { return hes_[x].parent_t; },
      [](const Vertex& V) { return std::pair<int, double>(V.t_he, V.s); });
  std::vector<Eigen::Vector3d> out;
  out.reserve(pos.size());
  for (const auto& p : pos) out.push_back(from_2d_bary(p));
  return out;
}

std::vector<Eigen::Vector3d> RefinementSurface::polygon_tp(int face, const HalfedgeSurface& tp) const {
  auto cyc = face_cycle(face);
  auto pos = frame_positions(
      *this, cyc, tp_frame(tp, faces_[face].tp_he), [&](int x) { return hes_[x].parent_tp; },
      [](const Vertex& V) { return std::pair<int, double>(V.tp_he, V.sp); });
  std::vector<Eigen::Vector3d> out;
  out.reserve(pos.size());
  for (const auto& p : pos) out.push_back(from_2d_bary(p));
  return out;
}

RefinementSurface init_refinement(const HalfedgeSurface& T, const std::vector<double>& lengths) {
  RefinementSurface r;
  r.t_ = T;
  r.t_len_ = lengths;
  r.verts_.resize(T.num_vertices());
  for (int v = 0; v < T.num_vertices(); ++v) {
    r.verts_[v].kind = RefinementSurface::Kind::Original;
    r.verts_[v].orig = v;
  }
  r.hes_.resize(T.num_halfedges());
  for (int h = 0; h < T.num_halfedges(); ++h) {
    auto& x = r.hes_[h];
    x.next = T.next(h);
    x.prev = T.prev(h);
    x.origin = T.origin(h);
    x.face = T.face(h);
    x.parent_t = h;
    x.parent_tp = h;
  }
  r.faces_.resize(T.num_faces());
  for (int f = 0; f < T.num_faces(); ++f) {
    auto& F = r.faces_[f];
    F.he = T.face_halfedge(f);
    F.host_t = f;
    F.host_tp = f;
    F.tp_he = F.he;
    auto hs = T.face_halfedges(f);
    F.mt_len = {lengths[hs[0] >> 1], lengths[hs[1] >> 1], lengths[hs[2] >> 1]};
  }
  r.first_t_.resize(T.num_halfedges());
  r.first_tp_.resize(T.num_halfedges());
  for (int h = 0; h < T.num_halfedges(); ++h) r.first_t_[h] = r.first_tp_[h] = h;
  return r;
}

void update_positions(RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& w) {
  for (auto& V : r.verts_) {
    if (!V.alive || V.kind != RefinementSurface::Kind::Crossing) continue;
    V.sp = logistic(V.kappa - 2.0 * (w[tp.dest(V.tp_he)] - w[tp.origin(V.tp_he)]));
  }
}

std::array<double, 3> tp_face_lengths(const HalfedgeSurface& tp, const std::vector<double>& base,
                                      const std::vector<double>& w, int he) {
  std::array<int, 3> ks{he, tp.next(he), tp.prev(he)};
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const int k = ks[i];
    out[i] = std::exp(w[tp.origin(k)] + w[tp.dest(k)]) * base[k >> 1];
  }
  return out;
}

namespace {

// Inverse of a face's projective map, from a 2D chart of its T' host to barycentrics of host_t.
struct InvMap {
  std::array<Eigen::Vector2d, 3> C;  // host corners in the chart, corner order from tp_he
  Eigen::Vector3d lambda;
  Eigen::Matrix3d mt;
  Eigen::Vector3d operator()(const Eigen::Vector2d& q) const {
    Eigen::Vector3d b = bary_of_point(C, q);
    Eigen::Vector3d g(b[0] / lambda[0], b[1] / lambda[1], b[2] / lambda[2]);
    g /= g.sum();
    return mt * g;
  }
};

double bary_distance(const std::array<Eigen::Vector2d, 3>& tri, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  Eigen::Vector2d pa = a[0] * tri[0] + a[1] * tri[1] + a[2] * tri[2];
  Eigen::Vector2d pb = b[0] * tri[0] + b[1] * tri[1] + b[2] * tri[2];
  return (pa - pb).norm();
}

std::array<Eigen::Vector2d, 3> t_face_layout(const HalfedgeSurface& T, const std::vector<double>& len, int f) {
  auto hs = T.face_halfedges(f);
  return layout_triangle(len[hs[0] >> 1], len[hs[1] >> 1], len[hs[2] >> 1]);
}

}  // namespace

void apply_switch(RefinementSurface& r, const SwitchInfo& I, const HalfedgeSurface& tp_after,
                  const std::vector<double>& w) {
  using Kind = RefinementSurface::Kind;
  auto& hes = r.hes_;
  auto& verts = r.verts_;
  auto& faces = r.faces_;
  const int h = I.h, t = I.h ^ 1;

  // Pre-flip frames of the two T' triangles in the quad chart.
  HostFrame g1, g2;
  g1.ks = {h, I.a, I.b};
  g1.P = {I.pu, I.pv, I.pup};
  g1.ids = {I.u, I.v, I.up};
  g2.ks = {t, I.c, I.d};
  g2.P = {I.pv, I.pu, I.pvp};
  g2.ids = {I.v, I.u, I.vp};
  auto endpoints = [&](int k) -> std::pair<int, int> {
    if (k == h) return {I.u, I.v};
    if (k == t) return {I.v, I.u};
    return {tp_after.origin(k), tp_after.dest(k)};
  };

  // Region: refinement faces hosted by the two triangles of the quad.
  const std::vector<int> diag = r.chain(h, true);
  std::vector<int> region;
  std::vector<char> in_region(faces.size(), 0);
  for (int x : diag)
    for (int y : {x, x ^ 1}) {
      const int fc = hes[y].face;
      if (fc != kNone && !in_region[fc]) {
        in_region[fc] = 1;
        region.push_back(fc);
      }
    }
  for (std::size_t i = 0; i < region.size(); ++i) {
    for (int x : r.face_cycle(region[i])) {
      if (hes[x].parent_tp != kNone) continue;
      const int fc = hes[x ^ 1].face;
      if (fc != kNone && !in_region[fc]) {
        in_region[fc] = 1;
        region.push_back(fc);
      }
    }
  }

  // Current parameters of crossing vertices on the quad's edges.
  for (int fc : region)
    for (int x : r.face_cycle(fc)) {
      auto& V = verts[hes[x].origin];
      if (V.kind != Kind::Crossing) continue;
      auto [a, b] = endpoints(V.tp_he);
      V.sp = logistic(V.kappa - 2.0 * (w[b] - w[a]));
    }

  // Chart positions of every region halfedge origin, and the inverse maps.
  std::unordered_map<int, Eigen::Vector2d> pos;
  std::unordered_map<int, InvMap> inv;
  const auto tlay_cache = [&](int f) { return t_face_layout(r.t_, r.t_len_, f); };
  for (int fc : region) {
    const auto& F = faces[fc];
    const HostFrame* fr = nullptr;
    if (F.host_tp == I.f)
      fr = &g1;
    else if (F.host_tp == I.fp)
      fr = &g2;
    else
      throw Error(ErrorCode::DegenerateIntersection, "region face outside the switched quad");
    auto cyc = r.face_cycle(fc);
    auto p = frame_positions(
        r, cyc, *fr, [&](int x) { return hes[x].parent_tp; },
        [](const RefinementSurface::Vertex& V) { return std::pair<int, double>(V.tp_he, V.sp); });
    for (std::size_t j = 0; j < cyc.size(); ++j) pos[cyc[j]] = p[j];
    int i0 = 0;
    while (fr->ks[i0] != F.tp_he) {
      if (++i0 == 3) throw Error(ErrorCode::DegenerateIntersection, "tp_he not in host");
    }
    InvMap m;
    for (int i = 0; i < 3; ++i) m.C[i] = fr->P[(i0 + i) % 3];
    std::array<double, 3> dp{(m.C[1] - m.C[0]).norm(), (m.C[2] - m.C[1]).norm(), (m.C[0] - m.C[2]).norm()};
    m.lambda = projective_weights(F.mt_len, dp);
    m.mt = F.mt_bary;
    inv[fc] = m;
  }

  auto kill_edge = [&](int x) {
    hes[x].alive = false;
    hes[x ^ 1].alive = false;
  };

  // Crossings on the old diagonal and the two T pieces leaving each of them.
  struct DiagCrossing {
    int vtx, x1, x2;
  };
  std::vector<DiagCrossing> dcross;
  for (std::size_t k = 0; k + 1 < diag.size(); ++k) {
    const int rk = diag[k], rn = diag[k + 1];
    dcross.push_back({hes[rk ^ 1].origin, hes[rk].next, hes[rn ^ 1].next});
  }

  // Remove the old diagonal.
  std::vector<int> merged_into(faces.size(), kNone);
  auto root = [&](int fc) {
    while (merged_into[fc] != kNone) fc = merged_into[fc];
    return fc;
  };
  for (int x : diag) {
    if (hes[x].parent_t != kNone) {
      hes[x].parent_tp = kNone;
      hes[x ^ 1].parent_tp = kNone;
      continue;
    }
    const int A = root(hes[x].face), B = root(hes[x ^ 1].face);
    if (A == B) throw Error(ErrorCode::DegenerateIntersection, "diagonal piece bounds a single face");
    for (int y : r.face_cycle(B)) hes[y].face = A;
    const int px = hes[x].prev, nx = hes[x].next, pt = hes[x ^ 1].prev, nt = hes[x ^ 1].next;
    hes[px].next = nt;
    hes[nt].prev = px;
    hes[pt].next = nx;
    hes[nx].prev = pt;
    faces[A].he = nx;
    faces[B].alive = false;
    merged_into[B] = A;
    kill_edge(x);
  }
  for (const auto& dc : dcross) {
    const int x1 = dc.x1, x2 = dc.x2;
    const int y = x2 ^ 1;  // runs into the crossing, continued by x1
    if (hes[x1].parent_t == kNone || hes[y].parent_t != hes[x1].parent_t)
      throw Error(ErrorCode::DegenerateIntersection, "T pieces at a diagonal crossing disagree");
    hes[x1].origin = hes[y].origin;
    const int py = hes[y].prev;
    hes[py].next = x1;
    hes[x1].prev = py;
    const int z = x1 ^ 1, nz = hes[x2].next;
    hes[z].next = nz;
    hes[nz].prev = z;
    if (faces[root(hes[x1].face)].he == y) faces[root(hes[x1].face)].he = x1;
    if (faces[root(hes[z].face)].he == x2) faces[root(hes[z].face)].he = z;
    if (r.first_t_[hes[y].parent_t] == y) r.first_t_[hes[y].parent_t] = x1;
    pos[x1] = pos[y];
    kill_edge(x2);
    verts[dc.vtx].alive = false;
  }

  std::vector<int> live;
  for (int fc : region)
    if (faces[fc].alive) live.push_back(fc);

  const Eigen::Vector2d D = I.pvp - I.pup;
  const double scale = (I.pv - I.pu).norm() + D.norm();
  const double ptol = 1e-9 * scale;
  auto is_corner = [&](int x, int id, const Eigen::Vector2d& p) {
    const auto& V = verts[hes[x].origin];
    return V.kind == Kind::Original && V.orig == id && (pos.at(x) - p).norm() <= ptol;
  };
  auto side = [&](const Eigen::Vector2d& p) { return cross2(D, p - I.pup) / D.norm(); };

  std::unordered_map<int, int> parent_face;  // new face -> face whose inverse map it uses
  auto inv_of = [&](int fc) -> const InvMap& {
    while (!inv.count(fc)) fc = parent_face.at(fc);
    return inv.at(fc);
  };

  // Connect the origins of y and z inside face fc; returns the new halfedge running y -> z.
  auto connect = [&](int fc, int y, int z) {
    const int d1 = r.new_edge(), d2 = d1 + 1;
    const int py = hes[y].prev, pz = hes[z].prev;
    hes[d1].origin = hes[y].origin;
    hes[d2].origin = hes[z].origin;
    hes[pz].next = d2;
    hes[d2].prev = pz;
    hes[d2].next = y;
    hes[y].prev = d2;
    hes[py].next = d1;
    hes[d1].prev = py;
    hes[d1].next = z;
    hes[z].prev = d1;
    hes[d1].parent_tp = t;  // u' -> v' after the flip
    hes[d2].parent_tp = h;
    const int nf = r.new_face();
    faces[nf].host_t = faces[fc].host_t;
    faces[fc].he = y;
    faces[nf].he = z;
    hes[d2].face = fc;
    for (int x = z;; x = hes[x].next) {
      hes[x].face = nf;
      if (x == d1) break;
    }
    pos[d1] = pos.at(y);
    pos[d2] = pos.at(z);
    parent_face[nf] = fc;
    live.push_back(nf);
    return d1;
  };

  // Does the new diagonal already exist as a T edge?
  int existing = kNone;
  for (int fc : live)
    for (int x : r.face_cycle(fc))
      if (hes[x].parent_t != kNone && hes[x].parent_tp == kNone && is_corner(x, I.up, I.pup) &&
          is_corner(x ^ 1, I.vp, I.pvp))
        existing = x;

  std::vector<int> new_crossings;
  std::vector<double> new_tau;
  if (existing != kNone) {
    hes[existing].parent_tp = t;
    hes[existing ^ 1].parent_tp = h;
    r.first_tp_[t] = existing;
    r.first_tp_[h] = existing ^ 1;
  } else {
    // start wedge at u'
    int y = kNone;
    double best = -std::numeric_limits<double>::infinity();
    for (int fc : live)
      for (int x : r.face_cycle(fc)) {
        if (!is_corner(x, I.up, I.pup)) continue;
        const Eigen::Vector2d out = (pos.at(hes[x].next) - pos.at(x)).normalized();
        const Eigen::Vector2d in = (pos.at(x) - pos.at(hes[x].prev)).normalized();
        const Eigen::Vector2d dn = D.normalized();
        const double score = std::min(cross2(out, dn), cross2(dn, -in));
        if (score > best) {
          best = score;
          y = x;
        }
      }
    if (y == kNone) throw Error(ErrorCode::DegenerateIntersection, "new diagonal has no start wedge");

    int cur = hes[y].face;
    double tau_prev = 0.0;
    bool first = true;
    int last_d1 = kNone;
    for (int step = 0;; ++step) {
      if (step > static_cast<int>(hes.size())) throw Error(ErrorCode::DegenerateIntersection, "trace does not end");
      auto cyc = r.face_cycle(cur);
      int z = kNone;
      for (int x : cyc)
        if (x != y && is_corner(x, I.vp, I.pvp)) z = x;
      if (z != kNone) {
        last_d1 = connect(cur, y, z);
        if (first) r.first_tp_[t] = last_d1;
        break;
      }
      int exit = kNone;
      double tau = 0;
      double best_tau = std::numeric_limits<double>::infinity();
      for (int x : cyc) {
        if (x == y || hes[x].next == y) continue;
        const int nx = hes[x].next;
        if (is_corner(x, I.up, I.pup) || is_corner(x, I.vp, I.pvp) || is_corner(nx, I.up, I.pup) ||
            is_corner(nx, I.vp, I.pvp))
          continue;
        const Eigen::Vector2d& p = pos.at(x);
        const Eigen::Vector2d& q = pos.at(hes[x].next);
        const double so = side(p), sd = side(q);
        if (!(so < 0 && sd >= 0) && !(so <= 0 && sd > 0)) continue;
        const Eigen::Vector2d pq = q - p;
        const double den = cross2(D, pq);
        if (den == 0) continue;
        const double ta = cross2(p - I.pup, pq) / den;
        if (ta < best_tau) {
          best_tau = ta;
          exit = x;
          tau = ta;
        }
      }
      if (exit == kNone) {
        throw Error(ErrorCode::DegenerateIntersection, "new diagonal leaves its face");
      }
      if (hes[exit].parent_t == kNone || hes[exit].parent_tp != kNone)
        throw Error(ErrorCode::DegenerateIntersection, "new diagonal crosses a T' edge");
      tau = std::clamp(tau, tau_prev + 1e-15, 1.0 - 1e-15);
      const Eigen::Vector2d X = I.pup + tau * D;

      // parameter along the T halfedge, through the inverse projective map
      const int k = hes[exit].parent_t;
      const int f = faces[cur].host_t;
      const auto ks = r.t_.face_halfedges(f);
      int i0 = 0;
      while (ks[i0] != k) {
        if (++i0 == 3) throw Error(ErrorCode::DegenerateIntersection, "T parent not in host face");
      }
      const Eigen::Vector3d fb = inv_of(cur)(X);
      double sk = fb[(i0 + 1) % 3] / (fb[i0] + fb[(i0 + 1) % 3]);
      auto param_at = [&](int x) {
        const auto& V = verts[hes[x].origin];
        if (V.kind == Kind::Original) return x == exit ? 0.0 : 1.0;
        return V.t_he == k ? V.s : 1.0 - V.s;
      };
      const double s0 = param_at(exit), s1 = param_at(hes[exit].next);
      const double gap = 1e-12 * std::max(s1 - s0, 1e-300);
      sk = std::clamp(sk, s0 + gap, s1 - gap);
      if (sk < 1e-9 || sk > 1.0 - 1e-9) ++r.snapped_;

      const int X_v = r.new_vertex();
      auto& V = verts[X_v];
      V.kind = Kind::Crossing;
      V.t_he = k;
      V.s = sk;
      V.tp_he = t;
      V.sp = tau;
      new_crossings.push_back(X_v);
      new_tau.push_back(tau);

      // split the chord: exit becomes p->X, n runs X->q
      const int n = r.new_edge();
      const int tw = exit ^ 1, other = hes[tw].face;
      hes[n].origin = X_v;
      hes[n ^ 1].origin = hes[tw].origin;
      hes[tw].origin = X_v;
      hes[n].parent_t = hes[exit].parent_t;
      hes[n ^ 1].parent_t = hes[tw].parent_t;
      const int nx = hes[exit].next;
      hes[n].next = nx;
      hes[nx].prev = n;
      hes[exit].next = n;
      hes[n].prev = exit;
      hes[n].face = cur;
      const int ptw = hes[tw].prev;
      hes[ptw].next = n ^ 1;
      hes[n ^ 1].prev = ptw;
      hes[n ^ 1].next = tw;
      hes[tw].prev = n ^ 1;
      hes[n ^ 1].face = other;
      if (r.first_t_[hes[tw].parent_t] == tw) r.first_t_[hes[tw].parent_t] = n ^ 1;
      pos[n] = X;
      pos[n ^ 1] = pos.at(tw);
      pos[tw] = X;

      const int d1 = connect(cur, y, n);
      if (first) r.first_tp_[t] = d1;
      first = false;
      cur = other;
      y = tw;
      tau_prev = tau;
    }
    r.first_tp_[h] = last_d1 ^ 1;
  }

  for (std::size_t i = 0; i < new_crossings.size(); ++i) {
    auto& V = verts[new_crossings[i]];
    V.kappa = logit(new_tau[i]) + 2.0 * (w[I.vp] - w[I.up]);
  }

  // New hosts and mapping triangles. After the flip face f holds (h: v'->u', b, c)
  // and face fp holds (t: u'->v', d, a).
  const std::array<Eigen::Vector2d, 3> c1{I.pvp, I.pup, I.pu};
  const std::array<Eigen::Vector2d, 3> c2{I.pup, I.pvp, I.pv};
  for (int fc : live) {
    if (!faces[fc].alive) continue;
    int host = kNone;
    for (int x : r.face_cycle(fc)) {
      const int k = hes[x].parent_tp;
      if (k == h || k == I.b || k == I.c) host = I.f;
      if (k == t || k == I.d || k == I.a) host = I.fp;
      if (host != kNone) break;
    }
    if (host == kNone) throw Error(ErrorCode::DegenerateIntersection, "face without a T' side");
    auto& F = faces[fc];
    const auto& m = inv_of(fc);
    const auto& C = host == I.f ? c1 : c2;
    F.host_tp = host;
    F.tp_he = host == I.f ? h : t;
    for (int i = 0; i < 3; ++i) F.mt_bary.col(i) = m(C[i]);
    const auto lay = tlay_cache(F.host_t);
    for (int i = 0; i < 3; ++i) F.mt_len[i] = bary_distance(lay, F.mt_bary.col(i), F.mt_bary.col((i + 1) % 3));
  }
}

// ---------------------------------------------------------------------------

MappedPoint map_point_in_face(const RefinementSurface& r, const HalfedgeSurface& tp,
                              const std::vector<double>& base, const std::vector<double>& w, int face,
                              const Eigen::Vector3d& bary_t) {
  const auto& F = r.faces()[face];
  const Eigen::Vector3d beta = F.mt_bary.partialPivLu().solve(bary_t);
  const auto dp = tp_face_lengths(tp, base, w, F.tp_he);
  const Eigen::Vector3d lam = projective_weights(F.mt_len, dp);
  Eigen::Vector3d y = beta.cwiseProduct(lam);
  y /= y.sum();
  // a corner of T is a vertex of T' and maps onto it exactly
  for (int i = 0; i < 3; ++i) {
    if (bary_t[i] != 1.0 || bary_t[(i + 1) % 3] != 0.0 || bary_t[(i + 2) % 3] != 0.0) continue;
    const int v = r.base().origin(r.base().face_halfedges(F.host_t)[i]);
    int best = -1, he = F.tp_he;
    for (int j = 0; j < 3; ++j, he = tp.next(he))
      if (tp.origin(he) == v && (best < 0 || y[j] > y[best])) best = j;
    if (best >= 0 && y[best] > 0.5) y = Eigen::Vector3d::Unit(best);
  }
  return {F.host_tp, F.tp_he, y};
}

MappedPoint map_point(const RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& base,
                      const std::vector<double>& w, int t_face, const Eigen::Vector3d& bary_t) {
  if (t_face < 0 || t_face >= r.base().num_faces()) throw Error(ErrorCode::PointNotLocated, "bad face");
  int best = kNone;
  double best_score = -std::numeric_limits<double>::infinity();
  const Eigen::Vector2d p = bary_to_2d(bary_t);
  for (int fc = 0; fc < static_cast<int>(r.faces().size()); ++fc) {
    const auto& F = r.faces()[fc];
    if (!F.alive || F.host_t != t_face) continue;
    auto poly = r.polygon_t(fc);
    double score = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(poly.size());
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d a = bary_to_2d(poly[j]), b = bary_to_2d(poly[(j + 1) % n]);
      const double len = (b - a).norm();
      if (len == 0) continue;
      score = std::min(score, cross2(b - a, p - a) / len);
    }
    if (score > best_score) {
      best_score = score;
      best = fc;
    }
  }
  if (best == kNone || best_score < -1e-9) throw Error(ErrorCode::PointNotLocated, "point outside all faces");
  MappedPoint m = map_point_in_face(r, tp, base, w, best, bary_t);
  const int ref = tp.face_halfedge(m.face);
  int shift = 0;
  for (int x = m.he; x != ref; x = tp.next(x))
    if (++shift > 2) throw Error(ErrorCode::PointNotLocated, "corner reference not in face");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) out[i] = m.bary[(i + shift) % 3];
  return {m.face, ref, out};
}

double face_distortion(const RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& base,
                       const std::vector<double>& w, int face) {
  const auto& F = r.faces()[face];
  return linear_distortion(F.mt_len, tp_face_lengths(tp, base, w, F.tp_he));
}

namespace {
double polygon_area(const std::array<Eigen::Vector2d, 3>& tri, const std::vector<Eigen::Vector3d>& poly) {
  double a = 0;
  const int n = static_cast<int>(poly.size());
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector3d& b0 = poly[j];
    const Eigen::Vector3d& b1 = poly[(j + 1) % n];
    const Eigen::Vector2d p = b0[0] * tri[0] + b0[1] * tri[1] + b0[2] * tri[2];
    const Eigen::Vector2d q = b1[0] * tri[0] + b1[1] * tri[1] + b1[2] * tri[2];
    a += cross2(p, q);
  }
  return 0.5 * a;
}
}  // namespace

double face_area_t(const RefinementSurface& r, int face) {
  const auto& F = r.faces()[face];
  return polygon_area(t_face_layout(r.base(), r.base_lengths(), F.host_t), r.polygon_t(face));
}

double face_area_tp(const RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& base,
                    const std::vector<double>& w, int face) {
  const auto& F = r.faces()[face];
  const auto L = tp_face_lengths(tp, base, w, F.tp_he);
  return polygon_area(layout_triangle(L[0], L[1], L[2]), r.polygon_tp(face, tp));
}

}  // namespace dcm
