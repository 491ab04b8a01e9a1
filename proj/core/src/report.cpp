#include "dcm/report.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

#include "dcm/errors.hpp"

namespace dcm {

namespace {

// Zipper between an inner ring a and an outer ring b, both sorted by angle.
void zipper(const std::vector<int>& a, const std::vector<double>& ang_a, const std::vector<int>& b,
            const std::vector<double>& ang_b, std::vector<std::array<int, 3>>& tris) {
  const int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
  auto unwrap = [](const std::vector<double>& ang, int k, double ref) {
    const int n = static_cast<int>(ang.size());
    double x = ang[k % n] + 2 * std::numbers::pi * (k / n);
    while (x < ref) x += 2 * std::numbers::pi;
    return x;
  };
  // start b at the point closest in angle to a[0]
  int s = 0;
  double best = 1e9;
  for (int j = 0; j < nb; ++j) {
    double d = std::remainder(ang_b[j] - ang_a[0], 2 * std::numbers::pi);
    if (std::abs(d) < best) {
      best = std::abs(d);
      s = j;
    }
  }
  std::vector<double> ua(na + 1), ub(nb + 1);
  ua[0] = ang_a[0];
  for (int k = 1; k <= na; ++k) ua[k] = unwrap(ang_a, k, ua[k - 1]);
  ub[0] = ang_b[s];
  for (int k = 1; k <= nb; ++k) ub[k] = unwrap(ang_b, s + k, ub[k - 1]);
  if (na == 1) ua[1] = ua[0] + 2 * std::numbers::pi;
  int ca = 0, cb = 0;
  while (ca < na || cb < nb) {
    const int ia = a[ca % na], ib = b[(s + cb) % nb];
    const bool advance_a = ca < na && na > 1 && (cb == nb || ua[ca + 1] - ua[0] < ub[cb + 1] - ub[0]);
    if (advance_a) {
      tris.push_back({ia, ib, a[(ca + 1) % na]});
      ++ca;
    } else if (cb < nb) {
      tris.push_back({ia, ib, b[(s + cb + 1) % nb]});
      ++cb;
    } else {
      ++ca;  // single centre vertex
    }
  }
}

}  // namespace

SphericalCap generate_spherical_cap(int target_vertices, double cap_angle, std::uint64_t seed) {
  SphericalCap cap;
  cap.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double area = 2 * std::numbers::pi * (1 - std::cos(cap_angle));
  const double h0 = std::sqrt(area / std::max(target_vertices, 8));
  const int rings = std::max(2, static_cast<int>(std::lround(cap_angle / h0)));
  const double h = cap_angle / rings;

  std::vector<std::vector<int>> ring_ids(rings + 1);
  std::vector<std::vector<double>> ring_ang(rings + 1);
  auto add = [&](double theta, double phi) {
    cap.pos.emplace_back(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    return static_cast<int>(cap.pos.size()) - 1;
  };
  ring_ids[0].push_back(add(0.0, 0.0));
  ring_ang[0].push_back(0.0);
  for (int i = 1; i <= rings; ++i) {
    const double theta = i * h;
    const int n = std::max(6, static_cast<int>(std::lround(2 * std::numbers::pi * std::sin(theta) / h)));
    const double off = std::numbers::pi * U(rng);
    for (int k = 0; k < n; ++k) {
      double phi = off + 2 * std::numbers::pi * (k + 0.2 * U(rng)) / n;
      double t = i < rings ? theta + 0.2 * h * U(rng) : theta;
      phi = std::remainder(phi, 2 * std::numbers::pi);
      ring_ids[i].push_back(add(t, phi));
      ring_ang[i].push_back(phi);
    }
    std::vector<int> order(n);
    for (int k = 0; k < n; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return ring_ang[i][x] < ring_ang[i][y]; });
    std::vector<int> ids(n);
    std::vector<double> ang(n);
    for (int k = 0; k < n; ++k) {
      ids[k] = ring_ids[i][order[k]];
      ang[k] = ring_ang[i][order[k]];
    }
    ring_ids[i] = ids;
    ring_ang[i] = ang;
  }
  for (int i = 0; i < rings; ++i) zipper(ring_ids[i], ring_ang[i], ring_ids[i + 1], ring_ang[i + 1], cap.triangles);

  cap.metric.mesh = build_from_triangles(cap.triangles, static_cast<int>(cap.pos.size()));
  std::vector<std::array<double, 3>> p(cap.pos.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = {cap.pos[i].x(), cap.pos[i].y(), cap.pos[i].z()};
  cap.metric.length = edge_lengths_from_positions(cap.metric.mesh, p);
  cap.delaunay_flips = static_cast<int>(make_delaunay(cap.metric).size());
  return cap;
}

std::vector<Eigen::Vector2d> spherical_cap_ground_truth(const std::vector<Eigen::Vector3d>& pts,
                                                        const std::vector<int>& boundary) {
  const int n = static_cast<int>(pts.size());
  if (n < 4 || boundary.empty()) throw Error(ErrorCode::NotOnSphere, "too few points");
  // algebraic sphere fit |p|^2 = 2 c.p + k
  Eigen::MatrixXd A(n, 4);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    A.row(i) << 2 * pts[i].x(), 2 * pts[i].y(), 2 * pts[i].z(), 1.0;
    rhs[i] = pts[i].squaredNorm();
  }
  const Eigen::Vector4d sol = A.colPivHouseholderQr().solve(rhs);
  const Eigen::Vector3d c = sol.head<3>();
  const double R = std::sqrt(sol[3] + c.squaredNorm());
  if (!std::isfinite(R) || R <= 0) throw Error(ErrorCode::NotOnSphere, "degenerate sphere fit");
  for (int i = 0; i < n; ++i) {
    const double dev = std::abs((pts[i] - c).norm() - R);
    if (dev > 1e-6 * R)
      throw Error(ErrorCode::NotOnSphere, "point " + std::to_string(i) + " off the sphere by " + std::to_string(dev / R));
  }
  Eigen::Vector3d bc = Eigen::Vector3d::Zero();
  for (int v : boundary) bc += pts[v];
  bc /= static_cast<double>(boundary.size());
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= n;
  // normal of the boundary circle's plane, oriented towards the cap
  Eigen::Vector3d axis = mean - c;
  if (boundary.size() >= 3) {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int v : boundary) cov += (pts[v] - bc) * (pts[v] - bc).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d nrm = es.eigenvectors().col(0);
    axis = nrm.dot(axis) >= 0 ? nrm : Eigen::Vector3d(-nrm);
  }
  axis.normalize();
  const Eigen::Vector3d south = c - R * axis;
  Eigen::Vector3d e1 = axis.unitOrthogonal(), e2 = axis.cross(e1);
  std::vector<Eigen::Vector2d> u(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d q = pts[i] - south;
    const double t = 2 * R / q.dot(axis);
    const Eigen::Vector3d on_plane = q * t;
    u[i] = Eigen::Vector2d(on_plane.dot(e1), on_plane.dot(e2));
  }
  double rb = 0;
  for (int v : boundary) rb += u[v].norm();
  rb /= static_cast<double>(boundary.size());
  for (auto& x : u) x /= rb;
  return u;
}

std::vector<double> circle_boundary_target(const PLMetric& m) {
  const auto loops = boundary_loops(m.mesh);
  if (loops.size() != 1) throw Error(ErrorCode::TopologyMismatch, "circle target needs one boundary loop");
  std::vector<double> K(m.mesh.num_vertices(), 0.0);
  double total = 0;
  for (int h : loops[0]) total += m(h);
  const double chi_share = 2 * std::numbers::pi * m.mesh.euler_characteristic();
  for (int h : loops[0]) {
    const double half = 0.5 * m(h) / total * chi_share;
    K[m.mesh.origin(h)] += half;
    K[m.mesh.dest(h)] += half;
  }
  return K;
}

std::vector<double> vertex_areas(const PLMetric& m) {
  std::vector<double> a(m.mesh.num_vertices(), 0.0);
  for (int f = 0; f < m.mesh.num_faces(); ++f) {
    auto hs = m.mesh.face_halfedges(f);
    const double A = triangle_area(m(hs[0]), m(hs[1]), m(hs[2]));
    for (int h : hs) a[m.mesh.origin(h)] += A / 3.0;
  }
  return a;
}

Eigen::Vector2d Similarity::operator()(const Eigen::Vector2d& p) const {
  const std::complex<double> z = a * std::complex<double>(p.x(), p.y()) + b;
  return {z.real(), z.imag()};
}

Similarity fit_similarity(const std::vector<Eigen::Vector2d>& u, const std::vector<Eigen::Vector2d>& u_gt,
                          const std::vector<double>& weight, const std::vector<char>& include) {
  using C = std::complex<double>;
  double W = 0;
  C mz = 0, mg = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!include[i]) continue;
    W += weight[i];
    mz += weight[i] * C(u[i].x(), u[i].y());
    mg += weight[i] * C(u_gt[i].x(), u_gt[i].y());
  }
  if (W <= 0) throw Error(ErrorCode::EmptyInclusion, "no vertices to align");
  mz /= W;
  mg /= W;
  C num = 0;
  double den = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!include[i]) continue;
    const C z = C(u[i].x(), u[i].y()) - mz, g = C(u_gt[i].x(), u_gt[i].y()) - mg;
    num += weight[i] * std::conj(z) * g;
    den += weight[i] * std::norm(z);
  }
  Similarity s;
  s.a = den > 0 ? num / den : C(1, 0);
  s.b = mg - s.a * mz;
  return s;
}

EErrors e_errors(const std::vector<Eigen::Vector2d>& u, const std::vector<Eigen::Vector2d>& u_gt,
                 const std::vector<double>& weight, const std::vector<char>& include) {
  EErrors e;
  double W = 0, S = 0;
  int count = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!include[i]) continue;
    const double d = (u[i] - u_gt[i]).norm();
    S += d * d * weight[i];
    W += weight[i];
    e.e_inf = std::max(e.e_inf, d);
    ++count;
  }
  if (count == 0 || W <= 0) throw Error(ErrorCode::EmptyInclusion, "no vertices included");
  e.e2 = std::sqrt(S / W);
  return e;
}

DErrors d_errors(const std::vector<double>& distortion, const std::vector<double>& area,
                 const std::vector<char>& include) {
  DErrors d;
  double W = 0, S = 0;
  int count = 0;
  for (std::size_t f = 0; f < distortion.size(); ++f) {
    if (!include[f]) continue;
    const double x = distortion[f] - 1.0;
    S += x * x * area[f];
    W += area[f];
    d.d_inf = std::max(d.d_inf, x);
    ++count;
  }
  if (count == 0 || W <= 0) throw Error(ErrorCode::EmptyInclusion, "no faces included");
  d.d2 = std::sqrt(S / W);
  return d;
}

DErrors d_errors(const DeformState& s, const std::vector<char>& include) {
  if (!s.refinement) throw Error(ErrorCode::EmptyInclusion, "state carries no refinement");
  const auto& r = *s.refinement;
  const int nf = static_cast<int>(r.faces().size());
  std::vector<double> D(nf, 1.0), A(nf, 0.0);
  std::vector<char> inc(nf, 0);
  for (int f = 0; f < nf; ++f) {
    if (!r.faces()[f].alive || !include[f]) continue;
    inc[f] = 1;
    D[f] = face_distortion(r, s.mesh, s.base, s.w, f);
    A[f] = face_area_t(r, f);
  }
  return d_errors(D, A, inc);
}

std::vector<char> include_within_radius(const std::vector<Eigen::Vector2d>& u, double r) {
  std::vector<char> inc(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) inc[i] = u[i].norm() <= r;
  return inc;
}

std::vector<double> graph_distance(const PLMetric& m, const std::vector<int>& sources) {
  std::vector<double> d(m.mesh.num_vertices(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int s : sources) {
    d[s] = 0;
    pq.emplace(0.0, s);
  }
  while (!pq.empty()) {
    auto [dv, v] = pq.top();
    pq.pop();
    if (dv > d[v]) continue;
    for (int h : m.mesh.outgoing(v)) {
      const int u = m.mesh.dest(h);
      if (dv + m(h) < d[u]) {
        d[u] = dv + m(h);
        pq.emplace(d[u], u);
      }
    }
  }
  return d;
}

double graph_diameter(const PLMetric& m) {
  if (m.mesh.num_vertices() == 0) return 0;
  auto d0 = graph_distance(m, {0});
  const int far = static_cast<int>(std::max_element(d0.begin(), d0.end()) - d0.begin());
  auto d1 = graph_distance(m, {far});
  return *std::max_element(d1.begin(), d1.end());
}

std::vector<char> include_away_from(const PLMetric& m, const std::vector<int>& sources, double delta) {
  std::vector<char> inc(m.mesh.num_vertices(), 1);
  if (delta <= 0) return inc;
  const auto d = graph_distance(m, sources);
  for (std::size_t i = 0; i < inc.size(); ++i) inc[i] = d[i] > delta;
  return inc;
}

std::string to_text(const ErrorReport& r) {
  std::ostringstream os;
  os.precision(9);
  auto opt = [&](const char* k, const std::optional<double>& v) {
    if (v) os << k << " = " << *v << "\n";
  };
  opt("e2", r.e2);
  opt("e_inf", r.e_inf);
  opt("d2", r.d2);
  opt("d_inf", r.d_inf);
  if (r.e2) os << "alignment = " << r.alignment << "\n";
  os << "vertices_included = " << r.vertices_included << "\n"
     << "faces_included = " << r.faces_included << "\n"
     << "max_curvature_error = " << r.max_curvature_error << "\n"
     << "faces_in = " << r.stats.faces_in << "\n"
     << "faces_out = " << r.stats.faces_out << "\n"
     << "delaunay_switches = " << r.stats.delaunay_switches << "\n"
     << "cocircular_switches = " << r.stats.cocircular_switches << "\n"
     << "newton_iters = " << r.stats.newton_iters << "\n"
     << "timings_ms.delaunay = " << r.stats.t_delaunay_ms << "\n"
     << "timings_ms.cocircular = " << r.stats.t_cocircular_ms << "\n"
     << "timings_ms.newton = " << r.stats.t_newton_ms << "\n"
     << "timings_ms.total = " << r.stats.t_total_ms << "\n";
  return os.str();
}

}  // namespace dcm
