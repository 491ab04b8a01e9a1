#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcm/deform.hpp"
#include "dcm/metric.hpp"

namespace dcm {

// Triangulated spherical cap on the unit sphere around +z with polar radius cap_angle.
struct SphericalCap {
  PLMetric metric;  // 3D chord lengths, Delaunay
  std::vector<Eigen::Vector3d> pos;
  std::vector<std::array<int, 3>> triangles;  // before Delaunay flips
  int delaunay_flips = 0;
  std::uint64_t seed = 0;
};

// Jittered rings, evenly spaced in arc length, about target_vertices vertices in total.
SphericalCap generate_spherical_cap(int target_vertices, double cap_angle, std::uint64_t seed);

// Stereographic projection from the antipode of the cap center, scaled so the boundary
// circle lands on the unit circle. Throws NotOnSphere.
std::vector<Eigen::Vector2d> spherical_cap_ground_truth(const std::vector<Eigen::Vector3d>& pts,
                                                        const std::vector<int>& boundary);

// Target that turns the single boundary loop into a circle when the conformal factor is
// constant along it: boundary curvature proportional to the adjacent boundary length.
std::vector<double> circle_boundary_target(const PLMetric& m);

// A third of the incident face areas.
std::vector<double> vertex_areas(const PLMetric& m);

struct Similarity {
  std::complex<double> a{1, 0}, b{0, 0};  // z -> a z + b
  Eigen::Vector2d operator()(const Eigen::Vector2d& p) const;
};

// Weighted least-squares similarity taking u onto u_gt over included vertices.
Similarity fit_similarity(const std::vector<Eigen::Vector2d>& u, const std::vector<Eigen::Vector2d>& u_gt,
                          const std::vector<double>& weight, const std::vector<char>& include);

struct EErrors {
  double e2 = 0, e_inf = 0;
};
// Throws EmptyInclusion.
EErrors e_errors(const std::vector<Eigen::Vector2d>& u, const std::vector<Eigen::Vector2d>& u_gt,
                 const std::vector<double>& weight, const std::vector<char>& include);

struct DErrors {
  double d2 = 0, d_inf = 0;
};
// Aggregates of (D - 1) over faces with the given areas. Throws EmptyInclusion.
DErrors d_errors(const std::vector<double>& distortion, const std::vector<double>& area,
                 const std::vector<char>& include);
// Same over the refinement faces of s, areas in metric d; include is indexed by refinement face.
DErrors d_errors(const DeformState& s, const std::vector<char>& include);

// Vertices whose point lies within radius r of the origin.
std::vector<char> include_within_radius(const std::vector<Eigen::Vector2d>& u, double r);
// Vertices farther than delta from the sources (graph distance along edges); delta <= 0 keeps all.
std::vector<char> include_away_from(const PLMetric& m, const std::vector<int>& sources, double delta);
std::vector<double> graph_distance(const PLMetric& m, const std::vector<int>& sources);
// Two-sweep estimate of the edge-graph diameter.
double graph_diameter(const PLMetric& m);

struct RunStatistics {
  int faces_in = 0;
  int faces_out = 0;
  int delaunay_switches = 0;
  double t_delaunay_ms = 0;
  int cocircular_switches = 0;
  double t_cocircular_ms = 0;
  int newton_iters = 0;
  double t_newton_ms = 0;
  double t_total_ms = 0;
};

struct ErrorReport {
  std::optional<double> e2, e_inf;
  std::optional<double> d2, d_inf;
  int vertices_included = 0;
  int faces_included = 0;
  std::string alignment = "similarity-lsq";
  RunStatistics stats;
  double max_curvature_error = 0;
};

std::string to_text(const ErrorReport& r);

}  // namespace dcm
