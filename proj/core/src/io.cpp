#include "dcm/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

namespace dcm {

namespace {

using Clock = std::chrono::steady_clock;
double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

int parse_index(const std::string& tok, int nv, int line) {
  const std::string head = tok.substr(0, tok.find('/'));
  std::size_t used = 0;
  long idx = 0;
  try {
    idx = std::stol(head, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != head.size() || head.empty() || idx == 0)
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad vertex reference '" + tok + "'");
  const long v = idx > 0 ? idx - 1 : nv + idx;
  if (v < 0 || v >= nv)
    throw Error(ErrorCode::IndexOutOfRange, "line " + std::to_string(line) + ": vertex " + tok + " out of range");
  return static_cast<int>(v);
}

std::string fmt9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x == 0.0 ? 0.0 : x);
  return buf;
}

}  // namespace

ObjMesh parse_obj(std::istream& in) {
  ObjMesh out;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z = 0;
      if (!(ls >> x >> y)) throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": bad vertex");
      if (!(ls >> z)) z = 0;
      out.pos.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> f;
      std::string tok;
      while (ls >> tok) f.push_back(parse_index(tok, static_cast<int>(out.pos.size()), ln));
      if (f.size() > 3)
        throw Error(ErrorCode::NonTriangleFace, "line " + std::to_string(ln) + ": face with " + std::to_string(f.size()) + " vertices");
      if (f.size() < 3) throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": face with fewer than 3 vertices");
      out.triangles.push_back({f[0], f[1], f[2]});
    }
  }
  if (out.triangles.empty()) throw Error(ErrorCode::ParseError, "no faces");
  std::vector<char> used(out.pos.size(), 0);
  for (const auto& t : out.triangles)
    for (int v : t) used[v] = 1;
  for (std::size_t v = 0; v < used.size(); ++v)
    if (!used[v]) throw Error(ErrorCode::ParseError, "vertex " + std::to_string(v + 1) + " is not used by any face");
  out.metric.mesh = build_from_triangles(out.triangles, static_cast<int>(out.pos.size()));
  std::vector<std::array<double, 3>> p(out.pos.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = {out.pos[i].x(), out.pos[i].y(), out.pos[i].z()};
  out.metric.length = edge_lengths_from_positions(out.metric.mesh, p);
  for (int f = 0; f < out.metric.mesh.num_faces(); ++f) {
    auto hs = out.metric.mesh.face_halfedges(f);
    check_triangle(out.metric(hs[0]), out.metric(hs[1]), out.metric(hs[2]));
  }
  return out;
}

ObjMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path);
  return parse_obj(in);
}

std::string obj_string(const std::vector<Eigen::Vector3d>& pos, const std::vector<std::array<int, 3>>& triangles) {
  std::string s;
  char buf[128];
  for (const auto& p : pos) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    s += buf;
  }
  for (const auto& t : triangles) {
    std::snprintf(buf, sizeof buf, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    s += buf;
  }
  return s;
}

void write_obj(const std::string& path, const std::vector<Eigen::Vector3d>& pos,
               const std::vector<std::array<int, 3>>& triangles) {
  atomic_write(path, obj_string(pos, triangles));
}

CurvatureTarget parse_curvature(const std::string& text, const HalfedgeSurface& m, double sum_tol) {
  CurvatureTarget t;
  t.values.assign(m.num_vertices(), 0.0);
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("curvature file: ") + e.what());
    }
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "curvature file must hold a JSON list");
    for (const auto& item : j) {
      if (!item.is_object() || !item.contains("vertex") || !item.contains("curvature") ||
          !item["vertex"].is_number_integer() || !item["curvature"].is_number())
        throw Error(ErrorCode::ParseError, "curvature entries need integer 'vertex' and numeric 'curvature'");
      const long v = item["vertex"].get<long>();
      if (v < 0 || v >= m.num_vertices())
        throw Error(ErrorCode::IndexOutOfRange, "curvature entry for vertex " + std::to_string(v) + " of " +
                                                    std::to_string(m.num_vertices()));
      t.values[v] = item["curvature"].get<double>();
    }
  }
  double sum = 0;
  for (double k : t.values) sum += k;
  t.residual = sum - 2 * std::numbers::pi * m.euler_characteristic();
  if (std::abs(t.residual) > sum_tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "curvatures sum to %.12g, expected 2*pi*chi = %.12g (residual %.6g)", sum,
                  2 * std::numbers::pi * m.euler_characteristic(), t.residual);
    throw Error(ErrorCode::BadTargetSum, buf);
  }
  return t;
}

CurvatureTarget read_curvature(const std::string& path, const HalfedgeSurface& m, double sum_tol) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_curvature(ss.str(), m, sum_tol);
}

std::string svg_string(const PlanarLayout& L, const HalfedgeSurface& disk, const std::vector<Polyline>& overlays) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : L.uv) {
    if (!std::isfinite(p.x()) || !std::isfinite(p.y())) continue;
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  if (xmin > xmax) xmin = xmax = ymin = ymax = 0;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  const double pad = 0.02 * span, stroke = 0.002 * span;
  // y grows downwards in SVG
  auto X = [&](const Eigen::Vector2d& p) { return fmt9(p.x()); };
  auto Y = [&](const Eigen::Vector2d& p) { return fmt9(-p.y()); };
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"" + fmt9(xmin - pad) + " " +
       fmt9(-ymax - pad) + " " + fmt9(xmax - xmin + 2 * pad) + " " + fmt9(ymax - ymin + 2 * pad) + "\">\n";
  s += "<g id=\"faces\" fill=\"#f4f4f4\" stroke=\"none\">\n";
  for (int f = 0; f < disk.num_faces(); ++f) {
    auto c = disk.face_vertices(f);
    s += "<path d=\"M" + X(L.uv[c[0]]) + " " + Y(L.uv[c[0]]) + "L" + X(L.uv[c[1]]) + " " + Y(L.uv[c[1]]) + "L" +
         X(L.uv[c[2]]) + " " + Y(L.uv[c[2]]) + "Z\"/>\n";
  }
  s += "</g>\n";
  for (auto cls : {OverlayClass::T0Edges, OverlayClass::TEdges, OverlayClass::TPrime, OverlayClass::Cut}) {
    bool open = false;
    for (const auto& pl : overlays) {
      if (pl.cls != cls || pl.pts.size() < 2) continue;
      if (!open) {
        s += std::string("<g fill=\"none\" stroke=\"") + overlay_color(cls) + "\" stroke-width=\"" + fmt9(stroke) +
             "\">\n";
        open = true;
      }
      s += "<polyline points=\"";
      for (std::size_t i = 0; i < pl.pts.size(); ++i) {
        if (i) s += ' ';
        s += X(pl.pts[i]) + "," + Y(pl.pts[i]);
      }
      s += "\"/>\n";
    }
    if (open) s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

void write_svg(const std::string& path, const PlanarLayout& L, const HalfedgeSurface& disk,
               const std::vector<Polyline>& overlays) {
  atomic_write(path, svg_string(L, disk, overlays));
}

std::string report_json(const ErrorReport& r, bool with_timings) {
  nlohmann::ordered_json j;
  auto opt = [&](const char* k, const std::optional<double>& v) {
    if (v) j[k] = *v;
  };
  opt("e2", r.e2);
  opt("e_inf", r.e_inf);
  opt("d2", r.d2);
  opt("d_inf", r.d_inf);
  if (r.e2) j["alignment"] = r.alignment;
  j["vertices_included"] = r.vertices_included;
  j["faces_included"] = r.faces_included;
  j["max_curvature_error"] = r.max_curvature_error;
  j["faces_in"] = r.stats.faces_in;
  j["faces_out"] = r.stats.faces_out;
  j["delaunay_switches"] = r.stats.delaunay_switches;
  j["cocircular_switches"] = r.stats.cocircular_switches;
  j["newton_iters"] = r.stats.newton_iters;
  if (with_timings) {
    j["timings_ms"] = {{"delaunay", r.stats.t_delaunay_ms},
                       {"cocircular", r.stats.t_cocircular_ms},
                       {"newton", r.stats.t_newton_ms},
                       {"total", r.stats.t_total_ms}};
  }
  return j.dump(2) + "\n";
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IOError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IOError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IOError, "cannot rename onto " + path);
  }
}

void validate_config(const PipelineConfig& c) {
  if (!(c.epsilon > 0 && c.epsilon <= 1e-2)) throw Error(ErrorCode::BadTarget, "epsilon must lie in (0, 1e-2]");
  if (int(c.preset.has_value()) + int(c.curvature_path.has_value()) + int(c.curvature.has_value()) != 1)
    throw Error(ErrorCode::BadTarget, "give exactly one of a preset or a curvature file");
  if (!(c.damping > 0 && c.damping <= 1)) throw Error(ErrorCode::BadTarget, "damping must lie in (0, 1]");
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::NonTriangleFace:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::IOError:
    case ErrorCode::NonManifold:
    case ErrorCode::InconsistentOrientation:
    case ErrorCode::DegenerateTriangle:
    case ErrorCode::BadTarget:
    case ErrorCode::BadTargetSum:
    case ErrorCode::TopologyMismatch:
    case ErrorCode::NoBoundary:
      return 2;
    case ErrorCode::SymmetryViolation:
      return 4;
    default:
      return 3;
  }
}

namespace {

template <class F>
auto phase(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw PhaseError(name, e);
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& c) {
  validate_config(c);
  const ObjMesh in = phase("read", [&] { return read_obj(c.input); });
  return run_pipeline(c, in);
}

PipelineResult run_pipeline(const PipelineConfig& c, const ObjMesh& input) {
  phase("config", [&] { validate_config(c); });
  const auto t_start = Clock::now();
  PipelineResult res;
  const auto& im = input.metric.mesh;

  std::vector<int> singular_in;
  const std::vector<double> target_in = phase("target", [&] {
    if (c.preset) {
      auto p = make_preset(im, *c.preset);
      singular_in = p.vertices;
      return p.dense(im.num_vertices());
    }
    CurvatureTarget t;
    if (c.curvature) {
      if (c.curvature->size() != static_cast<std::size_t>(im.num_vertices()))
        throw Error(ErrorCode::IndexOutOfRange, "curvature vector size differs from the vertex count");
      t.values = *c.curvature;
    } else {
      t = read_curvature(*c.curvature_path, im);
    }
    for (int v = 0; v < im.num_vertices(); ++v)
      if (t.values[v] != 0) singular_in.push_back(v);
    return t.values;
  });

  res.doubled = im.has_boundary();
  std::optional<DoubledSurface> dbl;
  PLMetric metric;
  std::vector<double> target;
  if (res.doubled) {
    phase("double", [&] {
      dbl = double_surface(input.metric);
      target = doubled_target(*dbl, im, target_in);
    });
    metric = dbl->metric;
  } else {
    metric = input.metric;
    target = target_in;
  }
  phase("target", [&] { check_target(metric.mesh, target); });

  const PLMetric t0 = metric;
  auto t = Clock::now();
  const auto flips = phase("delaunay", [&] { return make_delaunay(metric); });
  res.report.stats.t_delaunay_ms = ms_since(t);
  res.report.stats.delaunay_switches = static_cast<int>(flips.size());

  DeformState s = make_state(metric, true);
  DeformOptions opt;
  opt.epsilon = c.epsilon;
  opt.damping = c.damping;
  opt.max_iters = c.max_iters;
  if (dbl) {
    opt.symmetrize = true;
    opt.mirror = &dbl->mirror;
  }
  res.deform = phase("deform", [&] { return deform(s, target, opt); });
  auto& st = res.report.stats;
  st.faces_in = metric.mesh.num_faces();
  st.faces_out = s.refinement->num_live_faces();
  st.cocircular_switches = res.deform.switches;
  st.t_cocircular_ms = res.deform.switch_ms;
  st.newton_iters = res.deform.iterations;
  st.t_newton_ms = res.deform.newton_ms;
  {
    const auto K = curvature_map(s);
    for (std::size_t v = 0; v < K.size(); ++v)
      res.report.max_curvature_error = std::max(res.report.max_curvature_error, std::abs(K[v] - target[v]));
  }

  // Source vertex of each vertex of the deformed surface, and whether it lies on the kept copy.
  std::vector<int> src_vertex(metric.mesh.num_vertices());
  std::vector<char> kept(metric.mesh.num_vertices(), 1);
  for (int v = 0; v < metric.mesh.num_vertices(); ++v) {
    src_vertex[v] = dbl ? dbl->source_vertex[v] : v;
    if (dbl && dbl->vertex_copy[v] == Copy::B) kept[v] = 0;
  }

  std::optional<CutSurface> half;
  if (dbl) {
    res.symmetry = check_symmetry(s, *dbl);
    if (!res.symmetry->ok(c.symmetry_tol)) {
      std::string why = res.symmetry->violations.empty() ? "w asymmetry " + std::to_string(res.symmetry->max_w_asymmetry)
                                                         : res.symmetry->violations.front();
      throw PhaseError("symmetry", Error(ErrorCode::SymmetryViolation, why));
    }
    half = phase("cut", [&] { return cut_half(s, *dbl, c.symmetry_tol); });
  }

  // ground truth for inputs sampled from a spherical cap
  std::optional<std::vector<Eigen::Vector2d>> gt;
  {
    const auto loops = boundary_loops(im);
    if (loops.size() == 1 && input.pos.size() == static_cast<std::size_t>(im.num_vertices())) {
      std::vector<int> bnd;
      for (int h : loops[0]) bnd.push_back(im.origin(h));
      try {
        gt = spherical_cap_ground_truth(input.pos, bnd);
      } catch (const Error&) {
      }
    }
  }

  // distortion over refinement faces whose host triangle sits on the kept copy (and inside
  // the inclusion disk when a ground truth exists)
  {
    const auto& r = *s.refinement;
    const auto& T = r.base();
    std::vector<char> host_ok(T.num_faces(), 1);
    for (int f = 0; f < T.num_faces(); ++f)
      for (int v : T.face_vertices(f)) {
        if (!kept[v]) host_ok[f] = 0;
        if (gt && (*gt)[src_vertex[v]].norm() > c.inclusion_radius) host_ok[f] = 0;
      }
    std::vector<char> inc(r.faces().size(), 0);
    int count = 0;
    for (std::size_t f = 0; f < inc.size(); ++f)
      if (r.faces()[f].alive && host_ok[r.faces()[f].host_t]) {
        inc[f] = 1;
        ++count;
      }
    res.report.faces_included = count;
    if (count > 0) {
      const auto d = d_errors(s, inc);
      res.report.d2 = d.d2;
      res.report.d_inf = d.d_inf;
    }
  }

  if (c.flatten) {
    phase("flatten", [&] {
      PLMetric flat;
      std::vector<int> singular;
      FaceSource src;
      if (half) {
        flat = half->metric;
        for (int v = 0; v < flat.mesh.num_vertices(); ++v) {
          const int sv = half->source_vertex[v];
          if (sv != kNone && target_in[sv] != 0) singular.push_back(v);
        }
        src.face = half->source_face;
        src.bary = half->source_bary;
      } else {
        flat = scaled_metric(s);
        for (int v : singular_in) singular.push_back(v);
        src = FaceSource::identity(flat.mesh.num_faces());
      }
      const CutGraph cut = build_cut(flat, singular);
      CutMesh disk = cut_along(flat, cut);
      PlanarLayout L = layout(disk.metric);
      res.folds = L.folds;

      if (gt) {
        // layout position of every input vertex
        const int nin = im.num_vertices();
        std::vector<Eigen::Vector2d> u(nin, Eigen::Vector2d::Zero());
        std::vector<char> seen(nin, 0);
        for (int v = 0; v < disk.metric.mesh.num_vertices(); ++v) {
          int sv = disk.source_vertex[v];
          sv = half ? half->source_vertex[sv] : src_vertex[sv];
          if (sv == kNone || seen[sv]) continue;
          seen[sv] = 1;
          u[sv] = L.uv[v];
        }
        auto inc = include_within_radius(*gt, c.inclusion_radius);
        for (int v = 0; v < nin; ++v) inc[v] = inc[v] && seen[v];
        const auto A = vertex_areas(input.metric);
        const Similarity sim = fit_similarity(u, *gt, A, inc);
        for (auto& x : u) x = sim(x);
        const auto e = e_errors(u, *gt, A, inc);
        res.report.e2 = e.e2;
        res.report.e_inf = e.e_inf;
        res.report.vertices_included = static_cast<int>(std::count(inc.begin(), inc.end(), 1));
      }

      if (c.svg_out) {
        auto overlays = export_overlay(L, disk, src, s, c.t_edge_overlay);
        if (c.t_edge_overlay && !flips.empty()) {
          auto more = export_t0_overlay(L, disk, src, s, t0, flips);
          overlays.insert(overlays.end(), more.begin(), more.end());
        }
        write_svg(*c.svg_out, L, disk.metric.mesh, overlays);
      }
      if (c.obj_out) {
        std::vector<Eigen::Vector3d> p(L.uv.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = Eigen::Vector3d(L.uv[i].x(), L.uv[i].y(), 0.0);
        std::vector<std::array<int, 3>> tris(disk.metric.mesh.num_faces());
        for (int f = 0; f < disk.metric.mesh.num_faces(); ++f) tris[f] = disk.metric.mesh.face_vertices(f);
        write_obj(*c.obj_out, p, tris);
      }
      res.disk = std::move(disk);
      res.layout = std::move(L);
    });
  }

  st.t_total_ms = ms_since(t_start);
  if (c.report_out) phase("write", [&] { atomic_write(*c.report_out, report_json(res.report)); });
  return res;
}

}  // namespace dcm
