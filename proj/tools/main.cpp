#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "dcm/io.hpp"

namespace {

struct TargetOpts {
  std::string preset, curvature;
};

void add_run_options(CLI::App* cmd, dcm::PipelineConfig& c, TargetOpts& t, bool outputs) {
  cmd->add_option("input", c.input, "triangle mesh (OBJ)")->required();
  auto* p = cmd->add_option("--preset", t.preset,
                            "disk-to-triangle | disk-to-rectangle | sphere-3-cones | genus-g-cones");
  auto* k = cmd->add_option("--curvature", t.curvature, "JSON list of {vertex, curvature}");
  p->excludes(k);
  cmd->add_option("--epsilon", c.epsilon, "curvature tolerance")->capture_default_str();
  cmd->add_option("--damping", c.damping, "Newton step scale in (0, 1]")->capture_default_str();
  cmd->add_option("--report-out", c.report_out, "JSON report");
  cmd->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  if (outputs) {
    cmd->add_option("--svg-out", c.svg_out, "SVG of the layout with overlays");
    cmd->add_option("--obj-out", c.obj_out, "layout as OBJ (z = 0)");
  }
}

void resolve_target(dcm::PipelineConfig& c, const TargetOpts& t) {
  if (!t.preset.empty()) c.preset = dcm::parse_preset(t.preset);
  if (!t.curvature.empty()) c.curvature_path = t.curvature;
}

void print_summary(const dcm::PipelineResult& r) {
  const auto& s = r.report.stats;
  std::printf("newton_iters %d  cocircular_switches %d  delaunay_switches %d  faces %d -> %d  |K-K*|inf %.3g\n",
              s.newton_iters, s.cocircular_switches, s.delaunay_switches, s.faces_in, s.faces_out,
              r.report.max_curvature_error);
  if (!r.folds.empty()) std::fprintf(stderr, "warning: FoldDetected in %zu faces\n", r.folds.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete conformal deformation and flattening of triangle meshes"};
  app.require_subcommand(1);

  dcm::PipelineConfig flat_cfg, def_cfg, rep_cfg;
  TargetOpts flat_t, def_t, rep_t;
  auto* flatten = app.add_subcommand("flatten", "deform to a preset or prescribed curvature and lay out in the plane");
  add_run_options(flatten, flat_cfg, flat_t, true);
  auto* deform = app.add_subcommand("deform", "deform to the prescribed curvature only");
  add_run_options(deform, def_cfg, def_t, false);
  auto* report = app.add_subcommand("report", "flatten and print the error report");
  add_run_options(report, rep_cfg, rep_t, false);

  std::string del_input;
  std::optional<std::string> del_report;
  auto* delaunay = app.add_subcommand("delaunay", "intrinsic Delaunay flips under the input metric");
  delaunay->add_option("input", del_input, "triangle mesh (OBJ)")->required();
  delaunay->add_option("--report-out", del_report, "JSON report");

  int cap_vertices = 1000;
  double cap_angle = 1.0;
  std::uint64_t cap_seed = 1;
  std::string cap_out;
  auto* gencap = app.add_subcommand("gen-cap", "write a triangulated spherical cap");
  gencap->add_option("--vertices", cap_vertices, "approximate vertex count")->capture_default_str();
  gencap->add_option("--cap-angle", cap_angle, "polar radius in radians")->capture_default_str();
  gencap->add_option("--seed", cap_seed, "RNG seed")->capture_default_str();
  gencap->add_option("--obj-out", cap_out, "output OBJ")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (flatten->parsed() || deform->parsed() || report->parsed()) {
      auto& c = flatten->parsed() ? flat_cfg : deform->parsed() ? def_cfg : rep_cfg;
      const auto& t = flatten->parsed() ? flat_t : deform->parsed() ? def_t : rep_t;
      resolve_target(c, t);
      c.flatten = !deform->parsed();
      const auto r = dcm::run_pipeline(c);
      if (report->parsed())
        std::cout << dcm::to_text(r.report);
      else
        print_summary(r);
    } else if (delaunay->parsed()) {
      auto in = dcm::read_obj(del_input);
      dcm::ErrorReport rep;
      rep.stats.faces_in = in.metric.mesh.num_faces();
      const auto flips = dcm::make_delaunay(in.metric);
      rep.stats.delaunay_switches = static_cast<int>(flips.size());
      rep.stats.faces_out = rep.stats.faces_in;
      std::printf("delaunay_switches %zu\n", flips.size());
      if (del_report) dcm::atomic_write(*del_report, dcm::report_json(rep, false));
    } else if (gencap->parsed()) {
      const auto cap = dcm::generate_spherical_cap(cap_vertices, cap_angle, cap_seed);
      dcm::write_obj(cap_out, cap.pos, cap.triangles);
      std::printf("vertices %zu  faces %zu\n", cap.pos.size(), cap.triangles.size());
    }
  } catch (const dcm::PhaseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return dcm::exit_code_for(e.code());
  } catch (const dcm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return dcm::exit_code_for(e.code());
  }
  return 0;
}
