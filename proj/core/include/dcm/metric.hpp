#pragma once

#include <array>
#include <vector>

#include "dcm/mesh.hpp"

namespace dcm {

// PL metric: one positive length per edge of the owned surface.
struct PLMetric {
  HalfedgeSurface mesh;
  std::vector<double> length;

  double operator()(int h) const { return length[HalfedgeSurface::edge(h)]; }
};

struct FlipRecord {
  int edge = kNone;
  double old_length = 0;
  double new_length = 0;
  // quad side lengths at flip time, labelled as in EdgeQuad
  double l1 = 0, l2 = 0, l1p = 0, l2p = 0;
};

// Throws DegenerateTriangle when some triangle inequality has slack below 1e-14 * perimeter.
void check_triangle(double a, double b, double c);

// Angle opposite side a in a triangle with sides a, b, c.
double angle_from_lengths(double a, double b, double c);
double cot_from_lengths(double a, double b, double c);
double triangle_area(double a, double b, double c);

// Angle at origin(h) inside face(h).
double corner_angle(const PLMetric& m, int h);
// Angle at the corner of face(h) opposite to h.
double opposite_angle(const PLMetric& m, int h);

double vertex_curvature(const PLMetric& m, int v);
std::vector<double> curvatures(const PLMetric& m);
double gauss_bonnet_defect(const PLMetric& m);

// Boundary edges are Delaunay by convention.
bool is_delaunay_edge(const PLMetric& m, int e, double tol);

void geometric_flip(PLMetric& m, int e, FlipRecord* record = nullptr);

// FIFO flip queue; throws FlipCapExceeded after 50*|E| flips.
std::vector<FlipRecord> make_delaunay(PLMetric& m, double tol = 1e-12);

std::vector<double> edge_lengths_from_positions(const HalfedgeSurface& mesh,
                                                const std::vector<std::array<double, 3>>& pos);

}  // namespace dcm
