#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "dcm/deform.hpp"
#include "dcm/metric.hpp"

namespace dcm {

enum class Copy { A, B, Seam };

// Two copies of a surface with boundary glued along the boundary.
// Copy A keeps the input vertex ids; boundary vertices are shared; copy B interior
// vertices are appended. Face f of the input is face f (copy A) and face F + f (copy B).
struct DoubledSurface {
  PLMetric metric;
  int input_vertices = 0;
  int input_faces = 0;
  std::vector<int> mirror;            // vertex involution
  std::vector<Copy> vertex_copy;
  std::vector<int> source_vertex;     // vertex of the input surface
  std::vector<int> edge_mirror;       // for the initial triangulation only
  std::vector<int> face_mirror;       // for the initial triangulation only
};

// Throws NoBoundary for closed input.
DoubledSurface double_surface(const PLMetric& m);

// K on the double: interior entries copied to both copies, boundary entries doubled.
// Throws BadTarget (boundary entry >= pi) or BadTargetSum.
std::vector<double> doubled_target(const DoubledSurface& d, const HalfedgeSurface& input,
                                   const std::vector<double>& target);

struct SymmetryReport {
  double max_w_asymmetry = 0;
  double max_mirror_length_error = 0;  // relative, over faces paired with a mirror face
  double max_cocircularity = 0;        // |alpha + alpha' - pi| over seam-crossing quads
  int crossing_faces = 0;
  int paired_quads = 0;
  std::vector<std::string> violations;
  bool ok(double tol) const {
    return violations.empty() && max_w_asymmetry <= tol && max_mirror_length_error <= tol &&
           max_cocircularity <= std::max(tol, 1e-8);
  }
};

SymmetryReport check_symmetry(const DeformState& s, const DoubledSurface& d);

// One copy cut out of a deformed double. Vertices 0..input_vertices-1 are the input vertices;
// later vertices are inserted on the seam (rung midpoints and diagonal centers).
struct CutSurface {
  PLMetric metric;
  std::vector<int> source_vertex;  // input vertex id or kNone for inserted vertices
  std::vector<int> source_face;    // face of the deformed double containing each face
  // corner positions in barycentric coordinates of source_face (face_halfedges order)
  std::vector<std::array<Eigen::Vector3d, 3>> source_bary;
};

// Throws SymmetryViolation when check_symmetry fails at sym_tol.
CutSurface cut_half(const DeformState& s, const DoubledSurface& d, double sym_tol = 1e-6);

}  // namespace dcm
