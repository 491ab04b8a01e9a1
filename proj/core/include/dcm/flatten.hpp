#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dcm/deform.hpp"
#include "dcm/metric.hpp"

namespace dcm {

enum class PresetKind { DiskToTriangle, DiskToRectangle, Sphere3Cones, GenusCones, Custom };

const char* preset_name(PresetKind k);
PresetKind parse_preset(const std::string& s);  // throws ParseError

struct FlatteningPreset {
  PresetKind kind = PresetKind::Custom;
  std::vector<int> vertices;
  std::vector<double> curvature;
  std::vector<double> dense(int num_vertices) const;
};

// Singular vertices are spread out: along the boundary loop for disk presets (by edge
// count, starting at the lowest boundary vertex id), by farthest-point sampling in
// hop distance otherwise. Throws TopologyMismatch.
FlatteningPreset make_preset(const HalfedgeSurface& m, PresetKind kind);

struct CutGraph {
  std::vector<char> in_cut;  // per edge
  int num_edges() const;
};

// Tree-cotree cut: shortest-path tree (edge lengths as weights) rooted at the first singular
// vertex, or at all of one boundary loop; leftover loops closed through the tree; then
// dangling branches ending at interior non-singular vertices are pruned.
CutGraph build_cut(const PLMetric& m, const std::vector<int>& singular);

// Splits vertices along the cut; faces keep their ids.
struct CutMesh {
  PLMetric metric;
  std::vector<int> source_vertex;
  std::vector<char> cut_edge;  // boundary edge created by cutting
};
CutMesh cut_along(const PLMetric& m, const CutGraph& cut);

struct PlanarLayout {
  std::vector<Eigen::Vector2d> uv;  // per vertex of the laid out (disk) mesh
  std::vector<int> folds;           // faces with non-positive signed area
};

// Breadth-first unrolling; the seed face holds the longest edge, placed on +x from the origin.
PlanarLayout layout(const PLMetric& disk);

double signed_area(const PlanarLayout& L, const HalfedgeSurface& m, int f);

// Which face of T' (and where) each laid out face comes from.
struct FaceSource {
  std::vector<int> face;
  std::vector<std::array<Eigen::Vector3d, 3>> bary;  // corners in T' face_halfedges order
  static FaceSource identity(int num_faces);
};

enum class OverlayClass { TPrime, TEdges, T0Edges, Cut };
const char* overlay_color(OverlayClass c);

struct Polyline {
  OverlayClass cls;
  std::vector<Eigen::Vector2d> pts;
};

// Maps a point of a T' face into the layout; none when that part of T' is not laid out.
class LayoutLocator {
 public:
  LayoutLocator(const PlanarLayout& L, const HalfedgeSurface& disk, const FaceSource& src, int num_tp_faces);
  std::optional<Eigen::Vector2d> locate(int tp_face, const Eigen::Vector3d& bary) const;

 private:
  const PlanarLayout& L_;
  const HalfedgeSurface& disk_;
  const FaceSource& src_;
  std::vector<std::vector<int>> by_tp_;
};

// T' edges, cut edges and (with a refinement) the T edges that are not T' edges, in layout
// coordinates. T0 edges are added from t0_pieces when given.
std::vector<Polyline> export_overlay(const PlanarLayout& L, const CutMesh& disk, const FaceSource& src,
                                     const DeformState& s, bool with_t_edges);

// Edges of an earlier triangulation T0 of the same surface drawn through T (metric d) and T'.
// Each T0 edge is sampled per T face it crosses and mapped with the discrete conformal map.
std::vector<Polyline> export_t0_overlay(const PlanarLayout& L, const CutMesh& disk, const FaceSource& src,
                                        const DeformState& s, const PLMetric& t0,
                                        const std::vector<FlipRecord>& flips, int samples_per_piece = 8);

}  // namespace dcm
