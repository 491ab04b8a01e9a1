#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcm/deform.hpp"
#include "dcm/doubling.hpp"
#include "dcm/errors.hpp"
#include "dcm/flatten.hpp"
#include "dcm/metric.hpp"
#include "dcm/report.hpp"

namespace dcm {

struct ObjMesh {
  PLMetric metric;
  std::vector<Eigen::Vector3d> pos;
  std::vector<std::array<int, 3>> triangles;
};

// Throws ParseError, NonTriangleFace, NonManifold, InconsistentOrientation, DegenerateTriangle, IOError.
ObjMesh read_obj(const std::string& path);
ObjMesh parse_obj(std::istream& in);

std::string obj_string(const std::vector<Eigen::Vector3d>& pos, const std::vector<std::array<int, 3>>& triangles);
void write_obj(const std::string& path, const std::vector<Eigen::Vector3d>& pos,
               const std::vector<std::array<int, 3>>& triangles);

struct CurvatureTarget {
  std::vector<double> values;
  double residual = 0;  // sum - 2 pi chi
};

// JSON list of {"vertex": i, "curvature": k}; an empty file means all zeros.
// Throws ParseError, IndexOutOfRange, BadTargetSum (message carries the residual).
CurvatureTarget parse_curvature(const std::string& text, const HalfedgeSurface& m, double sum_tol = 1e-6);
CurvatureTarget read_curvature(const std::string& path, const HalfedgeSurface& m, double sum_tol = 1e-6);

// Faces of the laid out mesh plus overlay polylines; 9 significant digits, deterministic.
std::string svg_string(const PlanarLayout& L, const HalfedgeSurface& disk, const std::vector<Polyline>& overlays);
void write_svg(const std::string& path, const PlanarLayout& L, const HalfedgeSurface& disk,
               const std::vector<Polyline>& overlays);

std::string report_json(const ErrorReport& r, bool with_timings = true);

// Writes to a temporary sibling, then renames over path. Throws IOError.
void atomic_write(const std::string& path, const std::string& content);

struct PipelineConfig {
  std::string input;
  std::optional<PresetKind> preset;
  std::optional<std::string> curvature_path;
  std::optional<std::vector<double>> curvature;  // in-memory alternative to curvature_path
  double epsilon = 1e-5;
  double damping = 1.0;
  int max_iters = 100;
  double symmetry_tol = 1e-6;
  double inclusion_radius = 0.8;
  bool flatten = true;
  bool t_edge_overlay = true;
  std::optional<std::string> svg_out, obj_out, report_out;
  std::uint64_t seed = 1;
};

// Checks epsilon range and that exactly one target source is given. Throws BadTarget.
void validate_config(const PipelineConfig& c);

struct PipelineResult {
  ErrorReport report;
  DeformStats deform;
  std::optional<SymmetryReport> symmetry;
  std::optional<CutMesh> disk;
  std::optional<PlanarLayout> layout;
  std::vector<int> folds;
  bool doubled = false;
};

// Error tagged with the pipeline phase it came from.
class PhaseError : public std::runtime_error {
 public:
  PhaseError(std::string phase, const Error& e)
      : std::runtime_error(phase + ": " + e.what()), phase_(std::move(phase)), code_(e.code()) {}
  const std::string& phase() const { return phase_; }
  ErrorCode code() const { return code_; }

 private:
  std::string phase_;
  ErrorCode code_;
};

// Double (bounded input), Delaunay, Deform, symmetry check and Cut (bounded input), then
// flatten and write the selected outputs. Throws PhaseError.
PipelineResult run_pipeline(const PipelineConfig& c);
PipelineResult run_pipeline(const PipelineConfig& c, const ObjMesh& input);

// Process exit code for an error: 2 bad input, 3 solver failure, 4 symmetry violation.
int exit_code_for(ErrorCode c);

}  // namespace dcm
