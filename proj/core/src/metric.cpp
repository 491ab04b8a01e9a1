#include "dcm/metric.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "dcm/errors.hpp"

namespace dcm {

void check_triangle(double a, double b, double c) {
  const double tol = 1e-14 * (a + b + c);
  if (!(a > 0 && b > 0 && c > 0) || b + c - a < tol || a + c - b < tol || a + b - c < tol)
    throw Error(ErrorCode::DegenerateTriangle,
                "sides " + std::to_string(a) + ", " + std::to_string(b) + ", " + std::to_string(c));
}

double angle_from_lengths(double a, double b, double c) {
  check_triangle(a, b, c);
  // half-angle form of the law of cosines; products are clamped at zero
  const double s = 0.5 * (a + b + c);
  const double num = std::max(0.0, (s - b) * (s - c));
  const double den = std::max(0.0, s * (s - a));
  return std::clamp(2.0 * std::atan2(std::sqrt(num), std::sqrt(den)), 0.0, std::numbers::pi);
}

double triangle_area(double a, double b, double c) {
  // Kahan's stable Heron
  std::array<double, 3> x{a, b, c};
  std::sort(x.begin(), x.end(), std::greater<>());
  const double p = (x[0] + (x[1] + x[2])) * (x[2] - (x[0] - x[1])) * (x[2] + (x[0] - x[1])) *
                   (x[0] + (x[1] - x[2]));
  return 0.25 * std::sqrt(std::max(0.0, p));
}

double cot_from_lengths(double a, double b, double c) {
  check_triangle(a, b, c);
  return (b * b + c * c - a * a) / (4.0 * triangle_area(a, b, c));
}

double corner_angle(const PLMetric& m, int h) {
  const auto& s = m.mesh;
  return angle_from_lengths(m(s.next(h)), m(h), m(s.prev(h)));
}

double opposite_angle(const PLMetric& m, int h) {
  const auto& s = m.mesh;
  return angle_from_lengths(m(h), m(s.next(h)), m(s.prev(h)));
}

std::vector<double> curvatures(const PLMetric& m) {
  const auto& s = m.mesh;
  std::vector<double> K(s.num_vertices());
  for (int v = 0; v < s.num_vertices(); ++v)
    K[v] = s.is_boundary_vertex(v) ? std::numbers::pi : 2.0 * std::numbers::pi;
  for (int h = 0; h < s.num_halfedges(); ++h)
    if (!s.is_boundary_halfedge(h)) K[s.origin(h)] -= corner_angle(m, h);
  return K;
}

double vertex_curvature(const PLMetric& m, int v) {
  const auto& s = m.mesh;
  double K = s.is_boundary_vertex(v) ? std::numbers::pi : 2.0 * std::numbers::pi;
  for (int h : s.outgoing(v))
    if (!s.is_boundary_halfedge(h)) K -= corner_angle(m, h);
  return K;
}

double gauss_bonnet_defect(const PLMetric& m) {
  double sum = 0;
  for (double k : curvatures(m)) sum += k;
  return sum - 2.0 * std::numbers::pi * m.mesh.euler_characteristic();
}

bool is_delaunay_edge(const PLMetric& m, int e, double tol) {
  const auto& s = m.mesh;
  const int h = HalfedgeSurface::halfedge(e);
  if (s.is_boundary_edge(e)) return true;
  return opposite_angle(m, h) + opposite_angle(m, h ^ 1) <= std::numbers::pi + tol;
}

void geometric_flip(PLMetric& m, int e, FlipRecord* record) {
  EdgeQuad q = edge_quad(m.mesh, e);
  if (q.f == kNone || q.fp == kNone) throw Error(ErrorCode::BoundaryEdge, "edge " + std::to_string(e));
  if (!q.flippable) throw Error(ErrorCode::UnflippableConfiguration, "edge " + std::to_string(e));
  const double le = m.length[e], l1 = m(q.e1), l2 = m(q.e2), l1p = m(q.e1p), l2p = m(q.e2p);
  const double theta_u = angle_from_lengths(l1, le, l2) + angle_from_lengths(l2p, le, l1p);
  const double theta_v = angle_from_lengths(l2, le, l1) + angle_from_lengths(l1p, le, l2p);
  if (theta_u >= std::numbers::pi || theta_v >= std::numbers::pi)
    throw Error(ErrorCode::NonConvexQuad, "edge " + std::to_string(e));
  // |u'v'|^2 = l2^2 + l1p^2 - 2 l2 l1p cos(theta_u), written with the half angle for accuracy
  const double sh = std::sin(0.5 * theta_u);
  const double nl = std::sqrt((l2 - l1p) * (l2 - l1p) + 4.0 * l2 * l1p * sh * sh);
  if (record) *record = FlipRecord{e, le, nl, l1, l2, l1p, l2p};
  flip_edge(m.mesh, e);
  m.length[e] = nl;
  const auto fa = m.mesh.face_halfedges(q.f);
  const auto fb = m.mesh.face_halfedges(q.fp);
  check_triangle(m(fa[0]), m(fa[1]), m(fa[2]));
  check_triangle(m(fb[0]), m(fb[1]), m(fb[2]));
}

std::vector<FlipRecord> make_delaunay(PLMetric& m, double tol) {
  auto& s = m.mesh;
  std::vector<FlipRecord> record;
  std::deque<int> queue;
  std::vector<char> queued(s.num_edges(), 1);
  for (int e = 0; e < s.num_edges(); ++e) queue.push_back(e);
  const long cap = 50L * s.num_edges();
  while (!queue.empty()) {
    const int e = queue.front();
    queue.pop_front();
    queued[e] = 0;
    if (s.is_boundary_edge(e) || is_delaunay_edge(m, e, tol)) continue;
    EdgeQuad q = edge_quad(s, e);
    if (!q.flippable) continue;
    if (static_cast<long>(record.size()) >= cap)
      throw Error(ErrorCode::FlipCapExceeded, "more than 50|E| flips");
    FlipRecord r;
    geometric_flip(m, e, &r);
    record.push_back(r);
    for (int h : {q.e1, q.e2, q.e1p, q.e2p}) {
      const int k = HalfedgeSurface::edge(h);
      if (!queued[k]) {
        queued[k] = 1;
        queue.push_back(k);
      }
    }
  }
  return record;
}

std::vector<double> edge_lengths_from_positions(const HalfedgeSurface& mesh,
                                                const std::vector<std::array<double, 3>>& pos) {
  std::vector<double> len(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto& a = pos[mesh.origin(2 * e)];
    const auto& b = pos[mesh.dest(2 * e)];
    len[e] = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                       (a[2] - b[2]) * (a[2] - b[2]));
  }
  return len;
}

}  // namespace dcm
