#include "dcm/deform.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

#include "dcm/errors.hpp"

namespace dcm {

namespace {

using Clock = std::chrono::steady_clock;
double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> exp_m2(const std::vector<double>& w) {
  std::vector<double> x(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) x[i] = std::exp(-2.0 * w[i]);
  return x;
}

}  // namespace

DeformState make_state(const PLMetric& metric, bool with_refinement) {
  DeformState s;
  s.mesh = metric.mesh;
  s.base = metric.length;
  s.w.assign(metric.mesh.num_vertices(), 0.0);
  if (with_refinement) s.refinement = init_refinement(metric.mesh, metric.length);
  return s;
}

double scaled_length(double l, double wu, double wv) { return std::exp(wu + wv) * l; }

std::vector<double> scaled_lengths(const DeformState& s) {
  std::vector<double> L(s.mesh.num_edges());
  for (int e = 0; e < s.mesh.num_edges(); ++e)
    L[e] = scaled_length(s.base[e], s.w[s.mesh.origin(2 * e)], s.w[s.mesh.dest(2 * e)]);
  return L;
}

PLMetric scaled_metric(const DeformState& s) { return PLMetric{s.mesh, scaled_lengths(s)}; }

double length_cross_ratio(const PLMetric& m, int e) {
  EdgeQuad q = edge_quad(m.mesh, e);
  if (q.f == kNone || q.fp == kNone) throw Error(ErrorCode::BoundaryEdge, "edge " + std::to_string(e));
  return (m(q.e1) * m(q.e1p)) / (m(q.e2) * m(q.e2p));
}

std::vector<double> curvature_map(const DeformState& s) { return curvatures(scaled_metric(s)); }

Eigen::SparseMatrix<double> curvature_jacobian(const DeformState& s) {
  const auto& m = s.mesh;
  const auto L = scaled_lengths(s);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * m.num_halfedges());
  for (int h = 0; h < m.num_halfedges(); ++h) {
    if (m.is_boundary_halfedge(h)) continue;
    const double c = cot_from_lengths(L[h >> 1], L[m.next(h) >> 1], L[m.prev(h) >> 1]);
    const int i = m.origin(h), j = m.dest(h);
    trip.emplace_back(i, j, -c);
    trip.emplace_back(j, i, -c);
    trip.emplace_back(i, i, c);
    trip.emplace_back(j, j, c);
  }
  Eigen::SparseMatrix<double> H(m.num_vertices(), m.num_vertices());
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

void check_target(const HalfedgeSurface& m, const std::vector<double>& target, double sum_tol) {
  if (static_cast<int>(target.size()) != m.num_vertices())
    throw Error(ErrorCode::BadTarget, "target has " + std::to_string(target.size()) + " entries for " +
                                          std::to_string(m.num_vertices()) + " vertices");
  double sum = 0;
  for (int v = 0; v < m.num_vertices(); ++v) {
    const double cap = m.is_boundary_vertex(v) ? std::numbers::pi : 2.0 * std::numbers::pi;
    if (!std::isfinite(target[v]) || target[v] >= cap)
      throw Error(ErrorCode::BadTarget, "target at vertex " + std::to_string(v));
    sum += target[v];
  }
  const double want = 2.0 * std::numbers::pi * m.euler_characteristic();
  if (std::abs(sum - want) > sum_tol)
    throw Error(ErrorCode::BadTargetSum, "sum " + std::to_string(sum) + " differs from " + std::to_string(want));
}

std::vector<double> energy_gradient(const DeformState& s, const std::vector<double>& target) {
  check_target(s.mesh, target);
  auto K = curvature_map(s);
  for (std::size_t i = 0; i < K.size(); ++i) K[i] -= target[i];
  return K;
}

double DelaunayFunctional::scale(const std::vector<double>& x) const {
  return std::max({std::abs(cu * x[u]), std::abs(cv * x[v]), std::abs(cup * x[up]), std::abs(cvp * x[vp])});
}

DelaunayFunctional delaunay_functional(const HalfedgeSurface& m, const std::vector<double>& base, int e) {
  EdgeQuad q = edge_quad(m, e);
  if (q.f == kNone || q.fp == kNone) throw Error(ErrorCode::BoundaryEdge, "edge " + std::to_string(e));
  const double le = base[e], l1 = base[q.e1 >> 1], l2 = base[q.e2 >> 1], l1p = base[q.e1p >> 1],
               l2p = base[q.e2p >> 1];
  DelaunayFunctional F;
  F.u = q.u;
  F.v = q.v;
  F.up = q.up;
  F.vp = q.vp;
  const double p = l1 * l1p + l2 * l2p;
  F.cu = p / (l2 * l1p);
  F.cv = p / (l1 * l2p);
  F.cup = le * le / (l1 * l2);
  F.cvp = le * le / (l1p * l2p);
  return F;
}

namespace {
constexpr double kRelTol = 1e-9;

bool switchable(const HalfedgeSurface& m, int e) {
  if (m.is_boundary_edge(e)) return false;
  return edge_quad(m, e).flippable;
}
}  // namespace

std::optional<std::pair<double, int>> first_violation_on_segment(const DeformState& s,
                                                                  const std::vector<double>& x_start,
                                                                  const std::vector<double>& x_end) {
  std::optional<std::pair<double, int>> best;
  for (int e = 0; e < s.mesh.num_edges(); ++e) {
    if (!switchable(s.mesh, e)) continue;
    const auto F = delaunay_functional(s.mesh, s.base, e);
    const double A = F.eval(x_start), B = F.eval(x_end);
    const double tol = kRelTol * std::max(F.scale(x_start), F.scale(x_end));
    if (A < -tol) throw Error(ErrorCode::NotDelaunayAtStart, "edge " + std::to_string(e));
    if (B >= -tol) continue;
    const double t = std::max(0.0, A / (A - B));
    if (!best || t < best->first) best = std::make_pair(t, e);
  }
  return best;
}

void ptolemy_switch(DeformState& s, int e) {
  auto& m = s.mesh;
  if (m.is_boundary_edge(e)) throw Error(ErrorCode::BoundaryEdge, "edge " + std::to_string(e));
  EdgeQuad q = edge_quad(m, e);
  if (!q.flippable) throw Error(ErrorCode::UnflippableConfiguration, "edge " + std::to_string(e));
  const auto x = exp_m2(s.w);
  const auto F = delaunay_functional(m, s.base, e);
  const double val = F.eval(x);
  if (std::abs(val) > 1e-9 * F.scale(x))
    throw Error(ErrorCode::NotCocircular, "edge " + std::to_string(e) + " functional " + std::to_string(val));

  const double le = s.base[e], l1 = s.base[q.e1 >> 1], l2 = s.base[q.e2 >> 1], l1p = s.base[q.e1p >> 1],
               l2p = s.base[q.e2p >> 1];
  std::optional<SwitchInfo> info;
  if (s.refinement) {
    auto L = [&](int h) { return scaled_length(s.base[h >> 1], s.w[m.origin(h)], s.w[m.dest(h)]); };
    info = make_switch_info(m, e, L(q.h), L(q.e1), L(q.e2), L(q.e1p), L(q.e2p));
  }
  flip_edge(m, e);
  s.base[e] = (l1 * l1p + l2 * l2p) / le;
  if (info) apply_switch(*s.refinement, *info, m, s.w);
}

MoveStats move_to(DeformState& s, const std::vector<double>& w_target, const SwitchObserver* obs) {
  auto& m = s.mesh;
  const auto x1 = exp_m2(s.w);
  const auto x2 = exp_m2(w_target);
  const int ne = m.num_edges();
  MoveStats stats;

  // events are (t, edge, stamp); stale entries carry an old stamp
  using Event = std::tuple<double, int, int>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap;
  std::vector<int> stamp(ne, 0);
  double tc = 0.0;

  auto schedule = [&](int e, bool at_start) {
    ++stamp[e];
    if (!switchable(m, e)) return;
    const auto F = delaunay_functional(m, s.base, e);
    const double A = F.eval(x1), B = F.eval(x2);
    const double tol = kRelTol * std::max(F.scale(x1), F.scale(x2));
    if (at_start && A < -tol)
      throw Error(ErrorCode::NotDelaunayAtStart, "edge " + std::to_string(e) + " functional " + std::to_string(A));
    if (B >= -tol) return;
    heap.emplace(std::max(tc, A / (A - B)), e, stamp[e]);
  };
  for (int e = 0; e < ne; ++e) schedule(e, true);

  const long cap = 10L * ne;
  while (!heap.empty()) {
    auto [t, e, st] = heap.top();
    if (t > 1.0) break;
    heap.pop();
    if (st != stamp[e]) continue;
    if (stats.switches >= cap) throw Error(ErrorCode::SwitchCapExceeded, "more than 10|E| switches");
    for (std::size_t i = 0; i < s.w.size(); ++i) s.w[i] = -0.5 * std::log((1.0 - t) * x1[i] + t * x2[i]);
    if (obs && obs->before) obs->before(s, e, t);
    EdgeQuad q = edge_quad(m, e);
    ptolemy_switch(s, e);
    ++stats.switches;
    if (obs && obs->after) obs->after(s, e, t);
    tc = t;
    for (int k : {e, q.e1 >> 1, q.e2 >> 1, q.e1p >> 1, q.e2p >> 1}) schedule(k, false);
  }
  s.w = w_target;
  if (s.refinement) update_positions(*s.refinement, m, s.w);
  return stats;
}

Eigen::VectorXd newton_solve(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g) {
  const int n = static_cast<int>(g.size());
  if (n == 0) return g;
  // connectivity of the stencil; a second component means a larger kernel
  std::vector<std::vector<int>> adj(n);
  for (int k = 0; k < H.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) adj[it.row()].push_back(static_cast<int>(it.col()));
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v])
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
  }
  if (count != n) throw Error(ErrorCode::SingularBeyondNullspace, "stencil has more than one component");

  Eigen::VectorXd gz = g.array() - g.mean();
  Eigen::SparseMatrix<double> A = H;
  const double diag = H.diagonal().cwiseAbs().mean();
  A.coeffRef(0, 0) += diag > 0 ? diag : 1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularBeyondNullspace, "factorization failed");
  Eigen::VectorXd x = ldlt.solve(gz);
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd res = gz - A * x;
    if (res.lpNorm<Eigen::Infinity>() <= 1e-13 * std::max(1.0, gz.lpNorm<Eigen::Infinity>())) break;
    x += ldlt.solve(res);
  }
  if (!x.allFinite()) throw Error(ErrorCode::SingularBeyondNullspace, "non-finite Newton step");
  x.array() -= x.mean();
  return x;
}

DeformStats deform(DeformState& s, const std::vector<double>& target, const DeformOptions& opt) {
  check_target(s.mesh, target);
  DeformStats st;
  auto grad = energy_gradient(s, target);
  auto inf_norm = [](const std::vector<double>& v) {
    double r = 0;
    for (double x : v) r = std::max(r, std::abs(x));
    return r;
  };
  st.residual = inf_norm(grad);
  while (st.residual > opt.epsilon) {
    if (st.iterations >= opt.max_iters)
      throw Error(ErrorCode::MaxIterExceeded,
                  std::to_string(opt.max_iters) + " iterations, residual " + std::to_string(st.residual));
    auto t0 = Clock::now();
    const auto H = curvature_jacobian(s);
    Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(grad.data(), static_cast<Eigen::Index>(grad.size()));
    const Eigen::VectorXd dw = newton_solve(H, g);
    st.newton_ms += ms_since(t0);

    std::vector<double> w_new(s.w.size());
    for (std::size_t i = 0; i < w_new.size(); ++i) w_new[i] = s.w[i] - opt.damping * dw[i];
    if (opt.symmetrize && opt.mirror) {
      const auto& mir = *opt.mirror;
      for (std::size_t i = 0; i < w_new.size(); ++i) {
        const auto j = static_cast<std::size_t>(mir[i]);
        if (j > i) {
          const double a = 0.5 * (w_new[i] + w_new[j]);
          w_new[i] = w_new[j] = a;
        }
      }
    }
    t0 = Clock::now();
    st.switches += move_to(s, w_new, opt.observer).switches;
    st.switch_ms += ms_since(t0);
    ++st.iterations;
    grad = energy_gradient(s, target);
    st.residual = inf_norm(grad);
  }
  return st;
}

}  // namespace dcm
