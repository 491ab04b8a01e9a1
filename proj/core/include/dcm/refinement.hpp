#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dcm/mesh.hpp"

namespace dcm {

// Geometry of a diagonal switch in the current metric, captured before the flip.
// Halfedge names follow EdgeQuad (h = u->v before the flip); the flip reuses h
// and its twin for the new diagonal.
struct SwitchInfo {
  int e = kNone;
  int h = kNone;
  int a = kNone, b = kNone, c = kNone, d = kNone;  // e1, e2, e1p, e2p
  int f = kNone, fp = kNone;
  int u = kNone, v = kNone, up = kNone, vp = kNone;
  // chart positions of u, v, u', v'
  Eigen::Vector2d pu, pv, pup, pvp;
};

// Builds the quad chart from the scaled lengths of the diagonal and the four sides.
SwitchInfo make_switch_info(const HalfedgeSurface& tp, int e, double le, double l1, double l2, double l1p,
                            double l2p);

// Common refinement of a fixed triangulation T (metric d) and an evolving triangulation T'.
class RefinementSurface {
 public:
  enum class Kind { Original, Crossing };

  struct Vertex {
    bool alive = true;
    Kind kind = Kind::Original;
    int orig = kNone;  // vertex id of the surface (Original only)
    int t_he = kNone;  // host halfedge in T (Crossing only)
    double s = 0;      // parameter along t_he, frozen
    int tp_he = kNone; // host halfedge in T' (Crossing only)
    double sp = 0;     // parameter along tp_he in the current metric
    double kappa = 0;  // logit(sp) + 2(w(dest) - w(origin)); constant between switches
  };
  struct Halfedge {
    bool alive = true;
    int next = kNone, prev = kNone, origin = kNone, face = kNone;
    int parent_t = kNone;   // halfedge of T this piece lies on
    int parent_tp = kNone;  // halfedge of T' this piece lies on
  };
  struct Face {
    bool alive = true;
    int he = kNone;
    int host_t = kNone;
    int host_tp = kNone;
    int tp_he = kNone;  // corner reference of host_tp: mapping-triangle vertex i <-> i-th corner from tp_he
    // columns: mapping-triangle vertices in barycentric coordinates of host_t
    // (corner order from T.face_halfedge(host_t))
    Eigen::Matrix3d mt_bary = Eigen::Matrix3d::Identity();
    std::array<double, 3> mt_len{};  // |v0v1|, |v1v2|, |v2v0| in metric d
  };

  const HalfedgeSurface& base() const { return t_; }
  const std::vector<double>& base_lengths() const { return t_len_; }

  const std::vector<Vertex>& vertices() const { return verts_; }
  const std::vector<Halfedge>& halfedges() const { return hes_; }
  const std::vector<Face>& faces() const { return faces_; }
  int first_sub_t(int t_he) const { return first_t_[t_he]; }
  int first_sub_tp(int tp_he) const { return first_tp_[tp_he]; }

  int num_live_faces() const;
  int num_live_vertices() const;
  int num_crossings() const;
  std::vector<int> face_cycle(int face) const;
  // Sub-halfedges of a parent halfedge in order (T when on_tp is false, else T').
  std::vector<int> chain(int parent, bool on_tp) const;

  // Barycentric positions (w.r.t. host_t corners) of the origins of face_cycle(face).
  std::vector<Eigen::Vector3d> polygon_t(int face) const;
  // Barycentric positions (w.r.t. the corners from tp_he) of the origins of face_cycle(face).
  std::vector<Eigen::Vector3d> polygon_tp(int face, const HalfedgeSurface& tp) const;

  friend RefinementSurface init_refinement(const HalfedgeSurface& T, const std::vector<double>& lengths);
  friend void apply_switch(RefinementSurface& r, const SwitchInfo& info, const HalfedgeSurface& tp_after,
                           const std::vector<double>& w);
  friend void update_positions(RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& w);

  std::vector<std::vector<int>> faces_by_host_t() const;

  // Empty when the structure is consistent with tp, otherwise a description of the first problem.
  std::string validate(const HalfedgeSurface& tp) const;
  int snapped_crossings() const { return snapped_; }

 private:
  int new_vertex();
  int new_edge();
  int new_face();

  HalfedgeSurface t_;
  std::vector<double> t_len_;
  std::vector<Vertex> verts_;
  std::vector<Halfedge> hes_;
  std::vector<Face> faces_;
  std::vector<int> first_t_;
  std::vector<int> first_tp_;
  int snapped_ = 0;
};

RefinementSurface init_refinement(const HalfedgeSurface& T, const std::vector<double>& lengths);

// Call after the combinatorial flip of T' (tp_after) with info captured before it.
// w is the conformal factor at the switch instant.
void apply_switch(RefinementSurface& r, const SwitchInfo& info, const HalfedgeSurface& tp_after,
                  const std::vector<double>& w);

void update_positions(RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& w);

// Circumcircle preserving projective map in barycentric coordinates.
Eigen::Vector3d projective_map_eval(double wa, double wb, double wc, const Eigen::Vector3d& bary);

// Projective weights lambda_i = e^{-2 w_i} taking a triangle with sides d to one with sides dp
// (sides ordered |01|, |12|, |20|).
Eigen::Vector3d projective_weights(const std::array<double, 3>& d, const std::array<double, 3>& dp);

struct MappedPoint {
  int face = kNone;  // face of T'
  int he = kNone;    // corner reference: bary[i] belongs to the i-th corner from he
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();
};

// Current side lengths of a T' face in the order |01|, |12|, |20| starting at corner he.
std::array<double, 3> tp_face_lengths(const HalfedgeSurface& tp, const std::vector<double>& base,
                                      const std::vector<double>& w, int he);

// Evaluates the map on a given refinement face (the point need not lie inside it).
MappedPoint map_point_in_face(const RefinementSurface& r, const HalfedgeSurface& tp,
                              const std::vector<double>& base, const std::vector<double>& w, int face,
                              const Eigen::Vector3d& bary_t);

// Locates the refinement face containing the point of T face t_face and maps it.
// The result uses T'.face_halfedge(face) as corner reference.
MappedPoint map_point(const RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& base,
                      const std::vector<double>& w, int t_face, const Eigen::Vector3d& bary_t);

// Conformal distortion (|a|+|b|)/(|a|-|b|) of the linear map between two triangles given by sides.
double linear_distortion(const std::array<double, 3>& from, const std::array<double, 3>& to);
double face_distortion(const RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& base,
                       const std::vector<double>& w, int face);

// Areas of refinement faces: in metric d and in the current metric of T'.
double face_area_t(const RefinementSurface& r, int face);
double face_area_tp(const RefinementSurface& r, const HalfedgeSurface& tp, const std::vector<double>& base,
                    const std::vector<double>& w, int face);

// 2D layout helpers shared by the modules.
std::array<Eigen::Vector2d, 3> layout_triangle(double l01, double l12, double l20);
Eigen::Vector3d bary_of_point(const std::array<Eigen::Vector2d, 3>& tri, const Eigen::Vector2d& p);

}  // namespace dcm
