#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "dcm/metric.hpp"
#include "dcm/refinement.hpp"

namespace dcm {

struct DeformState {
  HalfedgeSurface mesh;       // T'
  std::vector<double> base;   // l_{T'}
  std::vector<double> w;      // conformal factor per vertex
  std::optional<RefinementSurface> refinement;
};

// State with w = 0 on the given metric; tracks T u T' when with_refinement is set.
DeformState make_state(const PLMetric& metric, bool with_refinement = true);

double scaled_length(double l, double wu, double wv);
std::vector<double> scaled_lengths(const DeformState& s);
PLMetric scaled_metric(const DeformState& s);

double length_cross_ratio(const PLMetric& m, int e);

std::vector<double> curvature_map(const DeformState& s);
Eigen::SparseMatrix<double> curvature_jacobian(const DeformState& s);
std::vector<double> energy_gradient(const DeformState& s, const std::vector<double>& target);

// Coefficients of the linear Delaunay functional of an interior edge, with x = e^{-2w}:
// L = cu x(u) + cv x(v) - cup x(u') - cvp x(v').
struct DelaunayFunctional {
  int u = kNone, v = kNone, up = kNone, vp = kNone;
  double cu = 0, cv = 0, cup = 0, cvp = 0;
  double eval(const std::vector<double>& x) const { return cu * x[u] + cv * x[v] - cup * x[up] - cvp * x[vp]; }
  double scale(const std::vector<double>& x) const;
};
DelaunayFunctional delaunay_functional(const HalfedgeSurface& m, const std::vector<double>& base, int e);

std::optional<std::pair<double, int>> first_violation_on_segment(const DeformState& s,
                                                                  const std::vector<double>& x_start,
                                                                  const std::vector<double>& x_end);

// Switches e at the current w; the quad must be cocircular in the scaled metric.
void ptolemy_switch(DeformState& s, int e);

struct SwitchObserver {
  std::function<void(const DeformState&, int edge, double t)> before;
  std::function<void(const DeformState&, int edge, double t)> after;
};

struct MoveStats {
  int switches = 0;
};

MoveStats move_to(DeformState& s, const std::vector<double>& w_target, const SwitchObserver* obs = nullptr);

Eigen::VectorXd newton_solve(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g);

struct DeformOptions {
  double epsilon = 1e-5;
  int max_iters = 100;
  double damping = 1.0;
  bool symmetrize = false;                 // average w over mirror orbits each step
  const std::vector<int>* mirror = nullptr; // vertex involution, used with symmetrize
  const SwitchObserver* observer = nullptr;
};

struct DeformStats {
  int iterations = 0;
  int switches = 0;
  double residual = 0;
  double newton_ms = 0;
  double switch_ms = 0;
};

// Checks the target hypotheses; throws BadTarget or BadTargetSum.
void check_target(const HalfedgeSurface& m, const std::vector<double>& target, double sum_tol = 1e-6);

DeformStats deform(DeformState& s, const std::vector<double>& target, const DeformOptions& opt = {});

}  // namespace dcm
