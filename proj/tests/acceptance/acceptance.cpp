// Acceptance suite: one PASS/FAIL line per criterion.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dcm/doubling.hpp"
#include "dcm/io.hpp"
#include "meshes.hpp"

using namespace dcm;
using std::numbers::pi;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and limits of the criteria.
constexpr double kCurvatureTol = 1e-5;
constexpr int kMaxNewton = 100;
constexpr int kWellShapedNewton = 25;
constexpr double kMaxSeconds5k = 30.0;
constexpr double kJacobianTol = 1e-5;
constexpr double kFdStep = 1e-6;
constexpr double kEigTol = 1e-9;
constexpr double kNullVecTol = 1e-6;
constexpr double kPtolemyTol = 1e-9;
constexpr double kSwitchCurvatureTol = 1e-10;
constexpr double kPathTol = 1e-8;
constexpr double kFlipCurvatureTol = 1e-10;
constexpr double kIdentityTol = 1e-12;
constexpr double kContinuityTol = 1e-9;
constexpr double kRateLo = 1.4, kRateHi = 3.5;
constexpr double kCapSeconds = 120.0;
constexpr double kSymmetryTol = 1e-6;
constexpr double kBoundaryCurvatureTol = 1e-5;
constexpr double kTurningTol = 1e-4;
constexpr double kAreaTol = 1e-7;
constexpr int kFacesPerSwitch = 4;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean_edge(const PLMetric& m) {
  double s = 0;
  for (double l : m.length) s += l;
  return s / static_cast<double>(m.length.size());
}

fixtures::PositionedMesh jittered(fixtures::PositionedMesh pm, double rel, std::mt19937& rng) {
  fixtures::jitter(pm, rel * mean_edge(pm.metric()), rng);
  return pm;
}

// Worst relative area mismatch between the refinement pieces and their host triangles.
double refinement_area_error(const DeformState& s) {
  const auto& r = *s.refinement;
  std::vector<double> at(r.base().num_faces(), 0), atp(s.mesh.num_faces(), 0);
  for (int f = 0; f < static_cast<int>(r.faces().size()); ++f) {
    if (!r.faces()[f].alive) continue;
    at[r.faces()[f].host_t] += face_area_t(r, f);
    atp[r.faces()[f].host_tp] += face_area_tp(r, s.mesh, s.base, s.w, f);
  }
  double worst = 0;
  const auto& L = r.base_lengths();
  for (int f = 0; f < r.base().num_faces(); ++f) {
    const auto h = r.base().face_halfedges(f);
    worst = std::max(worst, std::abs(at[f] / triangle_area(L[h[0] >> 1], L[h[1] >> 1], L[h[2] >> 1]) - 1));
  }
  const auto l = scaled_lengths(s);
  for (int f = 0; f < s.mesh.num_faces(); ++f) {
    const auto h = s.mesh.face_halfedges(f);
    worst = std::max(worst, std::abs(atp[f] / triangle_area(l[h[0] >> 1], l[h[1] >> 1], l[h[2] >> 1]) - 1));
  }
  return worst;
}

// Running audit for criterion 10 across all deformation runs.
struct RefinementAudit {
  int runs = 0;
  double worst_area = 0;
  int worst_excess = 0;  // max of (faces_out - faces_in) - 4 * switches
  void add(const DeformState& s, int switches) {
    ++runs;
    worst_area = std::max(worst_area, refinement_area_error(s));
    const int growth = s.refinement->num_live_faces() - s.refinement->base().num_faces();
    worst_excess = std::max(worst_excess, growth - kFacesPerSwitch * switches);
  }
} audit;

// --- criterion 1 ---------------------------------------------------------------------------

Outcome curvature_attainment() {
  Outcome o;
  std::mt19937 rng(101);
  struct Case {
    std::string name;
    std::function<fixtures::PositionedMesh()> make;
    std::function<PLMetric()> make_metric;  // for meshes without positions
  };
  std::vector<Case> cases = {
      {"icosphere-12", [] { return fixtures::icosphere(0); }, nullptr},
      {"icosphere-642", [] { return fixtures::icosphere(3); }, nullptr},
      {"torus-80", [] { return fixtures::torus_grid(10, 8); }, nullptr},
      {"torus-5000", [] { return fixtures::torus_grid(100, 50); }, nullptr},
      {"genus2-small", nullptr, [] { return fixtures::genus2(8, 6); }},
      {"genus2-large", nullptr, [] { return fixtures::genus2(40, 24); }},
      {"disk-100", [] { return fixtures::square_grid(10); }, nullptr},
      {"disk-1600", [] { return fixtures::square_grid(40); }, nullptr},
      {"annulus-120", [] { return fixtures::annulus_grid(5, 24); }, nullptr},
      {"annulus-2000", [] { return fixtures::annulus_grid(20, 100); }, nullptr},
  };
  int targets = 0, worst_iters = 0, total_switches = 0;
  double worst_res = 0, worst_time_5k = 0;
  for (const auto& c : cases) {
    for (int rep = 0; rep < 2; ++rep) {
      PLMetric in;
      if (c.make) {
        auto pm = jittered(c.make(), 0.1, rng);
        for (auto& p : pm.pos)
          if (c.name.starts_with("disk") || c.name.starts_with("annulus")) p[2] = 0.2 * std::sin(3 * p[0]) * p[1];
        in = pm.metric();
      } else {
        in = c.make_metric();
      }
      const double amp = 1.0 / std::sqrt(static_cast<double>(in.mesh.num_vertices()) / 100.0 + 1.0);
      auto target = fixtures::random_target(in, amp, rng);
      const auto t0 = Clock::now();
      try {
        std::optional<DoubledSurface> d;
        PLMetric M = in;
        std::vector<double> K = target;
        DeformOptions opt;
        opt.max_iters = kMaxNewton;
        if (in.mesh.has_boundary()) {
          d = double_surface(in);
          M = d->metric;
          K = doubled_target(*d, in.mesh, target);
          opt.symmetrize = true;
          opt.mirror = &d->mirror;
        }
        make_delaunay(M);
        auto s = make_state(M, true);
        const auto st = deform(s, K, opt);
        const double secs = seconds_since(t0);
        audit.add(s, st.switches);
        total_switches += st.switches;
        const auto Kf = curvature_map(s);
        double res = 0;
        for (std::size_t v = 0; v < Kf.size(); ++v) res = std::max(res, std::abs(Kf[v] - K[v]));
        worst_res = std::max(worst_res, res);
        worst_iters = std::max(worst_iters, st.iterations);
        if (in.mesh.num_vertices() >= 4000) worst_time_5k = std::max(worst_time_5k, secs);
        if (res > kCurvatureTol) fail(o, fmt("%s: residual %.3g", c.name.c_str(), res));
        if (st.iterations > kWellShapedNewton) fail(o, fmt("%s: %d Newton iterations", c.name.c_str(), st.iterations));
        if (in.mesh.num_vertices() >= 4000 && secs > kMaxSeconds5k)
          fail(o, fmt("%s: %.1f s", c.name.c_str(), secs));
      } catch (const std::exception& e) {
        fail(o, c.name + ": " + e.what());
      }
      ++targets;
    }
  }
  if (targets < 20) fail(o, "fewer than 20 targets");
  if (o.pass)
    o.detail = fmt("%d targets, max |K-K*| %.2e, max Newton iterations %d, %d switches, 5k-vertex time %.1f s",
                   targets, worst_res, worst_iters, total_switches, worst_time_5k);
  return o;
}

// --- criteria 2 and 3 ----------------------------------------------------------------------

std::vector<DeformState> hundred_vertex_states() {
  std::vector<DeformState> out;
  std::mt19937 rng(202);
  for (int k = 0; k < 9; ++k) {
    auto M = jittered(fixtures::torus_grid(10, 10), 0.15, rng).metric();
    make_delaunay(M);
    auto s = make_state(M, false);
    std::normal_distribution<double> N(0.0, 0.2);
    std::vector<double> w(s.w.size());
    for (double& x : w) x = N(rng);
    move_to(s, w);
    out.push_back(std::move(s));
  }
  out.push_back(fixtures::loop_edge_state());
  return out;
}

Outcome hessian_correctness(const std::vector<DeformState>& states) {
  Outcome o;
  double worst = 0;
  int loops = 0, parallels = 0;
  for (const auto& s0 : states) {
    DeformState s = s0;
    const Eigen::MatrixXd H(curvature_jacobian(s));
    const int n = static_cast<int>(s.w.size());
    Eigen::MatrixXd J(n, n);
    for (int j = 0; j < n; ++j) {
      const double w0 = s.w[j];
      s.w[j] = w0 + kFdStep;
      const auto kp = curvature_map(s);
      s.w[j] = w0 - kFdStep;
      const auto km = curvature_map(s);
      s.w[j] = w0;
      for (int i = 0; i < n; ++i) J(i, j) = (kp[i] - km[i]) / (2 * kFdStep);
    }
    worst = std::max(worst, (H - J).cwiseAbs().maxCoeff());
    loops += fixtures::count_loop_edges(s.mesh) > 0;
    parallels += fixtures::count_parallel_pairs(s.mesh) > 0;
  }
  if (worst > kJacobianTol) fail(o, fmt("max |H - FD| %.3g", worst));
  if (loops == 0) fail(o, "no state with a loop edge");
  if (parallels == 0) fail(o, "no state with parallel edges");
  if (o.pass)
    o.detail = fmt("%zu states (%d with loop edges, %d with parallel edges), max |H - FD| %.2e", states.size(), loops,
                   parallels, worst);
  return o;
}

Outcome convexity_structure(const std::vector<DeformState>& states) {
  Outcome o;
  double lam_min = 1e300, worst_vec = 0, gap = 1e300;
  std::vector<DeformState> all = states;
  all.push_back(make_state(fixtures::icosphere(2).metric(), false));  // 162 vertices
  for (const auto& s : all) {
    if (s.w.size() > 200) continue;
    const Eigen::MatrixXd H(curvature_jacobian(s));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    lam_min = std::min(lam_min, es.eigenvalues()(0));
    gap = std::min(gap, es.eigenvalues()(1));
    Eigen::VectorXd v = es.eigenvectors().col(0).normalized();
    worst_vec = std::max(worst_vec, (v.array() - v.mean()).abs().maxCoeff());
  }
  if (lam_min < -kEigTol) fail(o, fmt("smallest eigenvalue %.3g", lam_min));
  if (worst_vec > kNullVecTol) fail(o, fmt("null vector deviates from constant by %.3g", worst_vec));
  if (o.pass)
    o.detail = fmt("%zu matrices, min eigenvalue %.2e, second eigenvalue >= %.3g, null vector deviation %.2e",
                   all.size(), lam_min, gap, worst_vec);
  return o;
}

// --- criterion 4 ---------------------------------------------------------------------------

Outcome switch_correctness() {
  Outcome o;
  std::mt19937 rng(404);
  double worst_ptolemy = 0, worst_k = 0;
  int switches = 0;
  for (int k = 0; k < 3; ++k) {
    auto M = jittered(k == 1 ? fixtures::torus_grid(16, 10) : fixtures::icosphere(3), 0.1, rng).metric();
    make_delaunay(M);
    auto s = make_state(M, true);
    std::vector<double> k_before;
    double predicted = 0;
    SwitchObserver obs;
    obs.before = [&](const DeformState& st, int e, double) {
      k_before = curvature_map(st);
      const auto m = scaled_metric(st);
      const auto q = edge_quad(st.mesh, e);
      predicted = (m(q.e1) * m(q.e1p) + m(q.e2) * m(q.e2p)) / m(q.h);
    };
    obs.after = [&](const DeformState& st, int e, double) {
      ++switches;
      const auto kk = curvature_map(st);
      for (std::size_t v = 0; v < kk.size(); ++v) worst_k = std::max(worst_k, std::abs(kk[v] - k_before[v]));
      const auto m = scaled_metric(st);
      worst_ptolemy = std::max(worst_ptolemy, std::abs(m.length[e] / predicted - 1));
    };
    DeformOptions opt;
    opt.observer = &obs;
    try {
      const auto st = deform(s, fixtures::random_target(M, 1.0, rng), opt);
      audit.add(s, st.switches);
    } catch (const std::exception& e) {
      fail(o, e.what());
    }
  }
  if (switches == 0) fail(o, "no switches happened");
  if (worst_ptolemy > kPtolemyTol) fail(o, fmt("Ptolemy relative error %.3g", worst_ptolemy));
  if (worst_k > kSwitchCurvatureTol) fail(o, fmt("curvature change across a switch %.3g", worst_k));
  if (o.pass)
    o.detail = fmt("%d switches, Ptolemy rel. error %.2e, curvature change %.2e", switches, worst_ptolemy, worst_k);
  return o;
}

// --- criterion 5 ---------------------------------------------------------------------------

Outcome path_independence() {
  Outcome o;
  std::mt19937 rng(505);
  double worst = 0;
  int pairs = 0, attempts = 0;
  while (pairs < 10 && attempts < 40) {
    ++attempts;
    auto pm = attempts % 2 ? fixtures::icosphere(2) : fixtures::torus_grid(12, 8);
    auto M = jittered(pm, 0.1, rng).metric();
    make_delaunay(M);
    auto a = make_state(M, false);
    auto b = a;
    std::normal_distribution<double> N(0.0, 0.4);
    std::vector<double> w(a.w.size()), mid(a.w.size());
    for (double& x : w) x = N(rng);
    for (double& x : mid) x = N(rng);
    const int direct = move_to(a, w).switches;
    if (direct == 0) continue;
    move_to(b, mid);
    move_to(b, w);
    auto la = scaled_lengths(a), lb = scaled_lengths(b);
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    for (std::size_t i = 0; i < la.size(); ++i) worst = std::max(worst, std::abs(la[i] / lb[i] - 1));
    ++pairs;
  }
  if (pairs < 10) fail(o, fmt("only %d pairs forced a switch", pairs));
  if (worst > kPathTol) fail(o, fmt("length multisets differ by %.3g", worst));
  if (o.pass) o.detail = fmt("%d pairs, max relative length difference %.2e", pairs, worst);
  return o;
}

// --- criterion 6 ---------------------------------------------------------------------------

Outcome flip_isometry() {
  Outcome o;
  std::mt19937 rng(606);
  double worst = 0;
  int meshes = 0, flips = 0;
  for (int k = 0; k < 20; ++k) {
    auto pm = k % 3 == 0 ? fixtures::icosphere(2) : k % 3 == 1 ? fixtures::torus_grid(12, 9) : fixtures::annulus_grid(5, 20);
    auto M = jittered(pm, 0.1, rng).metric();
    fixtures::random_flips(M, 80, rng);
    const auto K0 = curvatures(M);
    bool non_delaunay = false;
    for (int e = 0; e < M.mesh.num_edges(); ++e) non_delaunay = non_delaunay || !is_delaunay_edge(M, e, 1e-12);
    if (!non_delaunay) {
      fail(o, "random mesh already Delaunay");
      continue;
    }
    const auto rec = make_delaunay(M);
    flips += static_cast<int>(rec.size());
    const auto K1 = curvatures(M);
    for (std::size_t v = 0; v < K0.size(); ++v) worst = std::max(worst, std::abs(K0[v] - K1[v]));
    if (!make_delaunay(M).empty()) fail(o, "second make_delaunay flipped edges");
    ++meshes;
  }
  if (worst > kFlipCurvatureTol) fail(o, fmt("curvature change %.3g", worst));
  if (o.pass) o.detail = fmt("%d meshes, %d flips, max curvature change %.2e, idempotent", meshes, flips, worst);
  return o;
}

// --- criterion 7 ---------------------------------------------------------------------------

Outcome conformal_map() {
  Outcome o;
  std::mt19937 rng(707);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  double id_err = 0;
  {
    auto M = jittered(fixtures::icosphere(2), 0.1, rng).metric();
    make_delaunay(M);
    auto s = make_state(M, true);
    for (int f = 0; f < M.mesh.num_faces(); ++f) {
      Eigen::Vector3d b(U(rng), U(rng), U(rng));
      b /= b.sum();
      const auto m = map_point(*s.refinement, s.mesh, s.base, s.w, f, b);
      if (m.face != f) fail(o, "identity map changed faces");
      id_err = std::max(id_err, (m.bary - b).cwiseAbs().maxCoeff());
    }
  }
  if (id_err > kIdentityTol) fail(o, fmt("identity error %.3g", id_err));

  double cont = 0;
  int points = 0, vertex_misses = 0, states = 0;
  for (int k = 0; k < 3; ++k) {
    auto M = jittered(k == 1 ? fixtures::torus_grid(14, 9) : fixtures::icosphere(3), 0.1, rng).metric();
    make_delaunay(M);
    auto s = make_state(M, true);
    const auto st = deform(s, fixtures::random_target(M, 1.0, rng));
    audit.add(s, st.switches);
    if (st.switches == 0) continue;
    ++states;
    const auto& r = *s.refinement;
    const auto& hes = r.halfedges();
    auto tp_tri = [&](int he) {
      const auto L = tp_face_lengths(s.mesh, s.base, s.w, he);
      return layout_triangle(L[0], L[1], L[2]);
    };
    auto point_in = [&](int x, double t) {
      const int face = hes[x].face;
      const auto cyc = r.face_cycle(face);
      const auto poly = r.polygon_t(face);
      const std::size_t j = std::find(cyc.begin(), cyc.end(), x) - cyc.begin();
      return Eigen::Vector3d((1 - t) * poly[j] + t * poly[(j + 1) % cyc.size()]);
    };
    auto param_along = [&](const MappedPoint& m, int hp) {
      int he = m.he;
      for (int j = 0; j < 3; ++j, he = s.mesh.next(he))
        if (he == hp) return m.bary[(j + 1) % 3] / (m.bary[j] + m.bary[(j + 1) % 3]);
      return std::nan("");
    };
    // shared points on refinement edges, preferring edges created by switches
    std::vector<int> cand;
    for (int x = 0; x < static_cast<int>(hes.size()); x += 2)
      if (hes[x].alive && hes[x].face != kNone && hes[x ^ 1].face != kNone) cand.push_back(x);
    std::shuffle(cand.begin(), cand.end(), rng);
    std::stable_partition(cand.begin(), cand.end(), [&](int x) {
      return r.vertices()[hes[x].origin].kind == RefinementSurface::Kind::Crossing ||
             r.vertices()[hes[x ^ 1].origin].kind == RefinementSurface::Kind::Crossing;
    });
    for (int i = 0; i < std::min<int>(100, static_cast<int>(cand.size())); ++i) {
      const int x = cand[i];
      const double t = U(rng);
      const auto ma = map_point_in_face(r, s.mesh, s.base, s.w, hes[x].face, point_in(x, t));
      const auto mb = map_point_in_face(r, s.mesh, s.base, s.w, hes[x ^ 1].face, point_in(x ^ 1, 1 - t));
      double err;
      if (ma.face == mb.face) {
        int shift = 0;
        for (int he = mb.he; he != ma.he; he = s.mesh.next(he)) ++shift;
        Eigen::Vector3d b;
        for (int j = 0; j < 3; ++j) b[j] = mb.bary[(j + shift) % 3];
        const auto tri = tp_tri(ma.he);
        auto at = [&](const Eigen::Vector3d& c) { return Eigen::Vector2d(c[0] * tri[0] + c[1] * tri[1] + c[2] * tri[2]); };
        err = (at(ma.bary) - at(b)).norm();
      } else {
        const int hp = hes[x].parent_tp;
        const double l = scaled_length(s.base[hp >> 1], s.w[s.mesh.origin(hp)], s.w[s.mesh.dest(hp)]);
        err = l * std::abs(param_along(ma, hp) - (1 - param_along(mb, hp ^ 1)));
      }
      if (!(err <= kContinuityTol)) fail(o, fmt("continuity error %.3g", err));
      cont = std::max(cont, err);
      ++points;
    }
    // Original vertices map to themselves
    const auto& T = r.base();
    for (int f = 0; f < T.num_faces(); ++f) {
      const auto h = T.face_halfedges(f);
      for (int i = 0; i < 3; ++i) {
        const auto m = map_point(r, s.mesh, s.base, s.w, f, Eigen::Vector3d::Unit(i));
        int he = m.he, hit = kNone;
        for (int j = 0; j < 3; ++j, he = s.mesh.next(he))
          if (m.bary[j] == 1.0) hit = s.mesh.origin(he);
        vertex_misses += hit != T.origin(h[i]);
      }
    }
  }
  if (states == 0) fail(o, "no deformed state with switches");
  if (vertex_misses) fail(o, fmt("%d vertex images are not exact", vertex_misses));
  if (o.pass)
    o.detail = fmt("identity error %.1e; %d shared points on %d deformed states, max gap %.2e; vertices exact", id_err,
                   points, states, cont);
  return o;
}

// --- criterion 8 ---------------------------------------------------------------------------

Outcome cap_convergence() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> d2, dinf;
  std::vector<int> nv;
  for (int n : {1000, 4000, 16000}) {
    auto cap = generate_spherical_cap(n, 1.0, 1);
    ObjMesh in{cap.metric, cap.pos, cap.triangles};
    PipelineConfig c;
    c.preset = PresetKind::DiskToTriangle;
    c.t_edge_overlay = false;
    try {
      auto r = run_pipeline(c, in);
      d2.push_back(r.report.d2.value_or(NAN));
      dinf.push_back(r.report.d_inf.value_or(NAN));
      nv.push_back(static_cast<int>(cap.pos.size()));
    } catch (const std::exception& e) {
      fail(o, e.what());
      return o;
    }
  }
  const double secs = seconds_since(t0);
  const double r1 = d2[0] / d2[1], r2 = d2[1] / d2[2];
  for (double r : {r1, r2})
    if (!(r >= kRateLo && r <= kRateHi)) fail(o, fmt("d2 rate %.3f outside [%.1f, %.1f]", r, kRateLo, kRateHi));
  if (!(dinf[1] < dinf[0] && dinf[2] < dinf[1])) fail(o, "d_inf not monotone");
  if (secs > kCapSeconds) fail(o, fmt("%.1f s", secs));
  const std::string vals = fmt("V %d/%d/%d: d2 %.4f/%.4f/%.4f (rates %.2f, %.2f), d_inf %.4f/%.4f/%.4f, %.1f s", nv[0],
                               nv[1], nv[2], d2[0], d2[1], d2[2], r1, r2, dinf[0], dinf[1], dinf[2], secs);
  o.detail = o.pass ? vals : o.detail + "; " + vals;
  return o;
}

// --- criterion 9 ---------------------------------------------------------------------------

Outcome boundary_pipeline() {
  Outcome o;
  auto cap = generate_spherical_cap(2000, 1.2, 9);
  ObjMesh in{cap.metric, cap.pos, cap.triangles};
  PipelineConfig c;
  c.preset = PresetKind::DiskToTriangle;
  c.t_edge_overlay = false;
  PipelineResult r;
  try {
    r = run_pipeline(c, in);
  } catch (const std::exception& e) {
    fail(o, e.what());
    return o;
  }
  const auto preset = make_preset(in.metric.mesh, PresetKind::DiskToTriangle);
  const int nin = in.metric.mesh.num_vertices();
  const double asym = r.symmetry ? r.symmetry->max_w_asymmetry : 1e300;
  if (!(asym < kSymmetryTol)) fail(o, fmt("w asymmetry %.3g", asym));
  if (!r.disk || !r.layout) {
    fail(o, "no layout");
    return o;
  }
  const auto& disk = *r.disk;
  const auto& L = *r.layout;
  auto is_mark = [&](int v) {
    const int src = disk.source_vertex[v];
    return src < nin && std::find(preset.vertices.begin(), preset.vertices.end(), src) != preset.vertices.end();
  };
  double k_err = 0, turn_err = 0;
  int marks = 0;
  const auto loops = boundary_loops(disk.metric.mesh);
  if (loops.size() != 1) fail(o, "cut surface is not a disk");
  for (const auto& loop : loops) {
    const int n = static_cast<int>(loop.size());
    for (int i = 0; i < n; ++i) {
      const int h0 = loop[(i + n - 1) % n], h1 = loop[i];
      const int v = disk.metric.mesh.origin(h1);
      const double want = is_mark(v) ? 2 * pi / 3 : 0.0;
      marks += is_mark(v);
      k_err = std::max(k_err, std::abs(vertex_curvature(disk.metric, v) - want));
      const Eigen::Vector2d a = L.uv[v] - L.uv[disk.metric.mesh.origin(h0)];
      const Eigen::Vector2d b = L.uv[disk.metric.mesh.dest(h1)] - L.uv[v];
      // boundary halfedges run clockwise, so each corner turns by minus its curvature
      const double turn = -std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
      turn_err = std::max(turn_err, std::abs(turn - want));
    }
  }
  if (marks != 3) fail(o, fmt("%d marked corners on the boundary", marks));
  if (k_err > kBoundaryCurvatureTol) fail(o, fmt("boundary curvature error %.3g", k_err));
  if (turn_err > kTurningTol) fail(o, fmt("turning angle error %.3g", turn_err));
  if (o.pass)
    o.detail = fmt("%d vertices, w asymmetry %.1e, boundary curvature error %.1e, turning error %.1e", nin, asym, k_err,
                   turn_err);
  return o;
}

// --- criterion 10 --------------------------------------------------------------------------

Outcome refinement_bookkeeping() {
  Outcome o;
  if (audit.runs == 0) fail(o, "no runs audited");
  if (audit.worst_area > kAreaTol) fail(o, fmt("area partition error %.3g", audit.worst_area));
  if (audit.worst_excess > 0) fail(o, fmt("face growth exceeds 4 per switch by %d", audit.worst_excess));
  if (o.pass)
    o.detail = fmt("%d runs, max area partition error %.2e, face growth within 4 per switch", audit.runs,
                   audit.worst_area);
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto guarded = [](auto&& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      Outcome o;
      fail(o, std::string("exception: ") + e.what());
      return o;
    }
  };
  report(1, "curvature attainment", guarded(curvature_attainment));
  const auto states = hundred_vertex_states();
  report(2, "Hessian correctness", guarded([&] { return hessian_correctness(states); }));
  report(3, "convexity structure", guarded([&] { return convexity_structure(states); }));
  report(4, "switch correctness", guarded(switch_correctness));
  report(5, "path independence", guarded(path_independence));
  report(6, "flip isometry", guarded(flip_isometry));
  report(7, "discrete conformal map", guarded(conformal_map));
  report(8, "spherical-cap convergence", guarded(cap_convergence));
  report(9, "boundary pipeline", guarded(boundary_pipeline));
  report(10, "refinement bookkeeping", guarded(refinement_bookkeeping));
  return failures == 0 ? 0 : 1;
}
