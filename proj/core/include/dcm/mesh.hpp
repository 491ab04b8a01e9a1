#pragma once

#include <array>
#include <string>
#include <vector>

namespace dcm {

inline constexpr int kNone = -1;

// Halfedge connectivity of a triangulated surface, possibly with boundary.
// Halfedges come in pairs: twin(h) == h ^ 1 and edge(h) == h >> 1.
// Loop edges and parallel edges are allowed; nothing is keyed on vertex pairs.
// Boundary halfedges have face == kNone and are chained into loops by next/prev.
class HalfedgeSurface {
 public:
  HalfedgeSurface() = default;

  int num_vertices() const { return static_cast<int>(vertex_he_.size()); }
  int num_halfedges() const { return static_cast<int>(next_.size()); }
  int num_edges() const { return num_halfedges() / 2; }
  int num_faces() const { return static_cast<int>(face_he_.size()); }

  static int twin(int h) { return h ^ 1; }
  static int edge(int h) { return h >> 1; }
  static int halfedge(int e) { return 2 * e; }

  int next(int h) const { return next_[h]; }
  int prev(int h) const { return prev_[h]; }
  int origin(int h) const { return origin_[h]; }
  int dest(int h) const { return origin_[h ^ 1]; }
  int face(int h) const { return face_[h]; }
  int face_halfedge(int f) const { return face_he_[f]; }
  // Outgoing halfedge; for boundary vertices this is the outgoing boundary halfedge.
  int vertex_halfedge(int v) const { return vertex_he_[v]; }

  bool is_boundary_halfedge(int h) const { return face_[h] == kNone; }
  bool is_boundary_edge(int e) const {
    return face_[2 * e] == kNone || face_[2 * e + 1] == kNone;
  }
  bool is_boundary_vertex(int v) const {
    int h = vertex_he_[v];
    return h != kNone && face_[h] == kNone;
  }
  bool has_boundary() const;

  // Next outgoing halfedge counterclockwise around origin(h).
  int rotate_ccw(int h) const { return twin(prev_[h]); }

  std::vector<int> outgoing(int v) const;
  std::array<int, 3> face_vertices(int f) const;
  std::array<int, 3> face_halfedges(int f) const;

  int euler_characteristic() const { return num_vertices() - num_edges() + num_faces(); }

  // Returns an empty string when all invariants hold, otherwise a description.
  std::string validate() const;

  // Raw construction. triangles[f] lists vertices; glue[3f+k] is the slot 3g+j of the
  // side glued to side k of face f (side k runs from corner k to corner k+1), or kNone.
  static HalfedgeSurface from_gluing(int num_vertices, const std::vector<std::array<int, 3>>& triangles,
                                     const std::vector<int>& glue);

  friend void flip_edge(HalfedgeSurface& m, int e);

 private:
  std::vector<int> next_, prev_, origin_, face_;
  std::vector<int> vertex_he_;
  std::vector<int> face_he_;
};

// Side labelling of an interior edge e with h = halfedge(e) in face f:
// u = origin(h), v = dest(h), u' apex of f, v' apex of f' = face(twin(h)).
// e1 = next(h) (v->u'), e2 = prev(h) (u'->u), e1p = next(twin) (u->v'), e2p = prev(twin) (v'->v).
struct EdgeQuad {
  int e = kNone;
  int h = kNone;
  int f = kNone, fp = kNone;
  int e1 = kNone, e2 = kNone, e1p = kNone, e2p = kNone;
  int u = kNone, v = kNone, up = kNone, vp = kNone;
  bool flippable = false;
};

EdgeQuad edge_quad(const HalfedgeSurface& m, int e);

HalfedgeSurface build_from_triangles(const std::vector<std::array<int, 3>>& triangles,
                                     int num_vertices = -1);

int euler_characteristic(const HalfedgeSurface& m);

// Each loop is the cyclic sequence of boundary halfedges linked by next().
std::vector<std::vector<int>> boundary_loops(const HalfedgeSurface& m);

// Combinatorial flip. The edge record is reused for the new diagonal: afterwards
// halfedge(e) runs v'->u' inside f and twin(halfedge(e)) runs u'->v' inside f'.
void flip_edge(HalfedgeSurface& m, int e);

}  // namespace dcm
