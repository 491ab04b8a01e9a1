#include "dcm/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <unordered_map>

#include "dcm/errors.hpp"

namespace dcm {

bool HalfedgeSurface::has_boundary() const {
  for (int f : face_)
    if (f == kNone) return true;
  return false;
}

std::vector<int> HalfedgeSurface::outgoing(int v) const {
  std::vector<int> out;
  int start = vertex_he_[v];
  if (start == kNone) return out;
  int h = start;
  do {
    out.push_back(h);
    h = rotate_ccw(h);
  } while (h != start && out.size() <= next_.size());
  return out;
}

std::array<int, 3> HalfedgeSurface::face_vertices(int f) const {
  int h = face_he_[f];
  return {origin_[h], origin_[next_[h]], origin_[prev_[h]]};
}

std::array<int, 3> HalfedgeSurface::face_halfedges(int f) const {
  int h = face_he_[f];
  return {h, next_[h], prev_[h]};
}

HalfedgeSurface HalfedgeSurface::from_gluing(int num_vertices,
                                             const std::vector<std::array<int, 3>>& tris,
                                             const std::vector<int>& glue) {
  const int nf = static_cast<int>(tris.size());
  if (static_cast<int>(glue.size()) != 3 * nf)
    throw Error(ErrorCode::NonManifold, "gluing table size mismatch");
  for (const auto& t : tris)
    for (int v : t)
      if (v < 0 || v >= num_vertices) throw Error(ErrorCode::IndexOutOfRange, "vertex index");

  // slot -> interior halfedge id
  std::vector<int> slot_he(3 * nf, kNone);
  int ne = 0;
  for (int s = 0; s < 3 * nf; ++s) {
    int g = glue[s];
    if (g == kNone) {
      slot_he[s] = 2 * ne++;
      continue;
    }
    if (g < 0 || g >= 3 * nf || g == s || glue[g] != s)
      throw Error(ErrorCode::NonManifold, "asymmetric gluing at slot " + std::to_string(s));
    int a = tris[s / 3][s % 3], b = tris[s / 3][(s % 3 + 1) % 3];
    int c = tris[g / 3][g % 3], d = tris[g / 3][(g % 3 + 1) % 3];
    if (a != d || b != c)
      throw Error(ErrorCode::InconsistentOrientation, "glued sides disagree at slot " + std::to_string(s));
    if (s < g) {
      slot_he[s] = 2 * ne;
      slot_he[g] = 2 * ne + 1;
      ++ne;
    }
  }

  HalfedgeSurface m;
  const int nh = 2 * ne;
  m.next_.assign(nh, kNone);
  m.prev_.assign(nh, kNone);
  m.origin_.assign(nh, kNone);
  m.face_.assign(nh, kNone);
  m.face_he_.assign(nf, kNone);
  m.vertex_he_.assign(num_vertices, kNone);

  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      int h = slot_he[3 * f + k];
      m.origin_[h] = tris[f][k];
      m.face_[h] = f;
      m.next_[h] = slot_he[3 * f + (k + 1) % 3];
      m.prev_[h] = slot_he[3 * f + (k + 2) % 3];
      if (glue[3 * f + k] == kNone) m.origin_[h ^ 1] = tris[f][(k + 1) % 3];
    }
    m.face_he_[f] = slot_he[3 * f];
  }

  std::vector<int> bdry_out(num_vertices, kNone);
  for (int h = 0; h < nh; ++h) {
    if (m.face_[h] != kNone) continue;
    int v = m.origin_[h];
    if (bdry_out[v] != kNone)
      throw Error(ErrorCode::NonManifold, "vertex " + std::to_string(v) + " has two boundary wedges");
    bdry_out[v] = h;
  }
  for (int h = 0; h < nh; ++h) {
    if (m.face_[h] != kNone) continue;
    int nx = bdry_out[m.origin_[h ^ 1]];
    m.next_[h] = nx;
    m.prev_[nx] = h;
  }

  std::vector<int> count(num_vertices, 0);
  for (int h = 0; h < nh; ++h) {
    ++count[m.origin_[h]];
    if (m.vertex_he_[m.origin_[h]] == kNone) m.vertex_he_[m.origin_[h]] = h;
  }
  for (int v = 0; v < num_vertices; ++v) {
    if (bdry_out[v] != kNone) m.vertex_he_[v] = bdry_out[v];
    if (m.vertex_he_[v] == kNone)
      throw Error(ErrorCode::NonManifold, "isolated vertex " + std::to_string(v));
    if (static_cast<int>(m.outgoing(v).size()) != count[v])
      throw Error(ErrorCode::NonManifold, "vertex " + std::to_string(v) + " is not a single fan");
  }
  return m;
}

std::string HalfedgeSurface::validate() const {
  std::ostringstream err;
  const int nh = num_halfedges();
  if (nh % 2) err << "odd halfedge count; ";
  for (int h = 0; h < nh; ++h) {
    if (next_[h] < 0 || next_[h] >= nh || prev_[h] < 0 || prev_[h] >= nh) {
      err << "dangling pointer at " << h << "; ";
      continue;
    }
    if (prev_[next_[h]] != h || next_[prev_[h]] != h) err << "next/prev mismatch at " << h << "; ";
    if (origin_[next_[h]] != dest(h)) err << "origin(next) != dest at " << h << "; ";
    if (face_[next_[h]] != face_[h]) err << "face mismatch along next at " << h << "; ";
    if (face_[h] != kNone && next_[next_[next_[h]]] != h) err << "face " << face_[h] << " is not a triangle; ";
  }
  for (int f = 0; f < num_faces(); ++f)
    if (face_[face_he_[f]] != f) err << "face_he of " << f << " inconsistent; ";
  std::vector<int> count(num_vertices(), 0);
  std::vector<int> bcount(num_vertices(), 0);
  for (int h = 0; h < nh; ++h) {
    ++count[origin_[h]];
    if (face_[h] == kNone) ++bcount[origin_[h]];
  }
  for (int v = 0; v < num_vertices(); ++v) {
    if (vertex_he_[v] == kNone || origin_[vertex_he_[v]] != v) {
      err << "vertex_he of " << v << " invalid; ";
      continue;
    }
    auto orbit = outgoing(v);
    for (int h : orbit)
      if (origin_[h] != v) err << "orbit of " << v << " leaves the vertex; ";
    if (static_cast<int>(orbit.size()) != count[v]) err << "vertex " << v << " orbit is not a single cycle; ";
    if (bcount[v] > 1) err << "vertex " << v << " has several boundary wedges; ";
    if (bcount[v] == 1 && face_[vertex_he_[v]] != kNone) err << "boundary vertex " << v << " without boundary he; ";
  }
  return err.str();
}

EdgeQuad edge_quad(const HalfedgeSurface& m, int e) {
  EdgeQuad q;
  q.e = e;
  q.h = HalfedgeSurface::halfedge(e);
  int t = q.h ^ 1;
  q.f = m.face(q.h);
  q.fp = m.face(t);
  if (q.f == kNone || q.fp == kNone) return q;
  q.e1 = m.next(q.h);
  q.e2 = m.prev(q.h);
  q.e1p = m.next(t);
  q.e2p = m.prev(t);
  q.u = m.origin(q.h);
  q.v = m.dest(q.h);
  q.up = m.origin(q.e2);
  q.vp = m.origin(q.e2p);
  q.flippable = q.f != q.fp;
  return q;
}

HalfedgeSurface build_from_triangles(const std::vector<std::array<int, 3>>& tris, int num_vertices) {
  int nv = num_vertices;
  if (nv < 0) {
    nv = 0;
    for (const auto& t : tris)
      for (int v : t) nv = std::max(nv, v + 1);
  }
  auto key = [](int a, int b) { return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b); };
  std::unordered_map<std::uint64_t, int> directed;
  std::unordered_map<std::uint64_t, int> undirected;
  directed.reserve(tris.size() * 3);
  for (std::size_t f = 0; f < tris.size(); ++f) {
    const auto& t = tris[f];
    if (t[0] == t[1] || t[1] == t[2] || t[2] == t[0])
      throw Error(ErrorCode::NonManifold, "triangle " + std::to_string(f) + " repeats a vertex");
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (++undirected[key(std::min(a, b), std::max(a, b))] > 2)
        throw Error(ErrorCode::NonManifold, "edge (" + std::to_string(a) + "," + std::to_string(b) + ") in 3+ triangles");
    }
  }
  for (std::size_t f = 0; f < tris.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = tris[f][k], b = tris[f][(k + 1) % 3];
      if (!directed.emplace(key(a, b), static_cast<int>(3 * f + k)).second)
        throw Error(ErrorCode::InconsistentOrientation,
                    "directed edge (" + std::to_string(a) + "," + std::to_string(b) + ") appears twice");
    }
  }
  std::vector<int> glue(3 * tris.size(), kNone);
  for (std::size_t f = 0; f < tris.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = tris[f][k], b = tris[f][(k + 1) % 3];
      auto it = directed.find(key(b, a));
      if (it != directed.end()) glue[3 * f + k] = it->second;
    }
  }
  return HalfedgeSurface::from_gluing(nv, tris, glue);
}

int euler_characteristic(const HalfedgeSurface& m) { return m.euler_characteristic(); }

std::vector<std::vector<int>> boundary_loops(const HalfedgeSurface& m) {
  std::vector<std::vector<int>> loops;
  std::vector<char> seen(m.num_halfedges(), 0);
  for (int h = 0; h < m.num_halfedges(); ++h) {
    if (!m.is_boundary_halfedge(h) || seen[h]) continue;
    std::vector<int> loop;
    int x = h;
    do {
      seen[x] = 1;
      loop.push_back(x);
      x = m.next(x);
    } while (x != h);
    loops.push_back(std::move(loop));
  }
  return loops;
}

void flip_edge(HalfedgeSurface& m, int e) {
  EdgeQuad q = edge_quad(m, e);
  if (q.f == kNone || q.fp == kNone) throw Error(ErrorCode::BoundaryEdge, "edge " + std::to_string(e));
  if (!q.flippable) throw Error(ErrorCode::UnflippableConfiguration, "edge " + std::to_string(e) + " has f == f'");
  const int h = q.h, t = h ^ 1;
  const int a = q.e1, b = q.e2, c = q.e1p, d = q.e2p;

  if (m.vertex_he_[q.u] == h) m.vertex_he_[q.u] = c;
  if (m.vertex_he_[q.v] == t) m.vertex_he_[q.v] = a;

  m.origin_[h] = q.vp;
  m.origin_[t] = q.up;
  // f: h -> b -> c, f': t -> d -> a
  m.next_[h] = b; m.next_[b] = c; m.next_[c] = h;
  m.prev_[h] = c; m.prev_[c] = b; m.prev_[b] = h;
  m.next_[t] = d; m.next_[d] = a; m.next_[a] = t;
  m.prev_[t] = a; m.prev_[a] = d; m.prev_[d] = t;
  m.face_[c] = q.f;
  m.face_[a] = q.fp;
  m.face_he_[q.f] = h;
  m.face_he_[q.fp] = t;
}

}  // namespace dcm
