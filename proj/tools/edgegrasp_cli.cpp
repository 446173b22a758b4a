// Command-line front end: plan grasps for a single depth image, evaluate a
// synthetic scene suite, render scenes, or dump pipeline intermediates.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "edgegrasp/edgegrasp.hpp"

namespace fs = std::filesystem;
using namespace edgegrasp;

namespace {

PipelineConfig load_config_opt(const std::string& path) {
  if (path.empty()) return PipelineConfig{};
  return load_config_file(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw input_error("cannot write output: " + path);
  f << text;
}

void dump_stage(const PipelineResult& res, const std::string& stage, const fs::path& dir) {
  fs::create_directories(dir);
  if (stage == "filled" || stage == "all")
    save_depth_pgm16_file(res.filled, (dir / "filled.pgm").string(), 1000.0);
  if (stage == "smoothed" || stage == "all")
    save_depth_pgm16_file(res.smoothed, (dir / "smoothed.pgm").string(), 1000.0);
  if (stage == "dd" || stage == "all") save_pbm_file(res.dd_edges, (dir / "dd_edges.pbm").string());
  if (stage == "cd" || stage == "all") save_pbm_file(res.cd_edges, (dir / "cd_edges.pbm").string());
  if (stage == "merged" || stage == "all") save_pbm_file(res.merged, (dir / "merged_edges.pbm").string());
  if (stage == "segments" || stage == "all")
    save_ppm_file(segments_overlay(res.filled, res.segments), (dir / "segments.ppm").string());
  if (stage == "pairs" || stage == "all")
    save_ppm_file(pairs_overlay(res.filled, res.pairs), (dir / "pairs.ppm").string());
}

void write_overlays(const PipelineResult& res, const fs::path& dir) {
  fs::create_directories(dir);
  save_ppm_file(edges_overlay(res.filled, res.merged), (dir / "edges.ppm").string());
  save_ppm_file(segments_overlay(res.filled, res.segments), (dir / "segments.ppm").string());
  save_ppm_file(pairs_overlay(res.filled, res.pairs), (dir / "pairs.ppm").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-edge grasp synthesis toolkit"};
  app.require_subcommand(1);

  std::string input, config_path, output, overlay_dir, suite, scene_path, debug_stage_name, truth_out;
  std::optional<uint32_t> seed;
  std::optional<double> sigma;

  auto* plan = app.add_subcommand("plan", "Plan grasps for a single depth image");
  plan->add_option("--input", input, "16-bit graymap depth image")->required();
  plan->add_option("--config", config_path, "pipeline config file");
  plan->add_option("--output", output, "grasp report JSON path (default stdout)");
  plan->add_option("--overlay-dir", overlay_dir, "write overlay images here");
  plan->add_option("--seed", seed, "override the RANSAC seed");
  plan->add_option("--debug-stage", debug_stage_name, "dump an intermediate stage (filled|smoothed|dd|cd|merged|segments|pairs|all)");

  auto* eval = app.add_subcommand("eval", "Run the detection-rate evaluation over a scene suite");
  eval->add_option("--suite", suite, "directory of .scene files")->required();
  eval->add_option("--config", config_path, "pipeline config file");
  eval->add_option("--output", output, "evaluation JSON path");
  eval->add_option("--sigma", sigma, "override scene noise sigma (meters)");
  eval->add_option("--seed", seed, "override scene noise seed");

  auto* render_cmd = app.add_subcommand("render", "Render a synthetic scene to a depth image");
  render_cmd->add_option("--scene", scene_path, "scene description file")->required();
  render_cmd->add_option("--output", output, "output 16-bit graymap")->required();
  render_cmd->add_option("--truth", truth_out, "also write ground-truth JSON here");
  render_cmd->add_option("--sigma", sigma, "override scene noise sigma (meters)");
  render_cmd->add_option("--seed", seed, "override scene noise seed");

  auto* debug = app.add_subcommand("debug-stage", "Run the pipeline and dump intermediates");
  debug->add_option("--input", input, "16-bit graymap depth image")->required();
  debug->add_option("--config", config_path, "pipeline config file");
  debug->add_option("--stage", debug_stage_name, "stage name (filled|smoothed|dd|cd|merged|segments|pairs|all)")
      ->required();
  debug->add_option("--output", output, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      PipelineConfig cfg = load_config_opt(config_path);
      if (seed) cfg.seed = *seed;
      const DepthImage img = load_depth_file(input, cfg.depth_scale);
      const PipelineResult res = run_pipeline(img, cfg);
      const std::string json = report_json(res, cfg, fs::path(input).filename().string()).dump(2) + "\n";
      if (output.empty())
        std::cout << json;
      else
        write_text(output, json);
      if (!overlay_dir.empty()) write_overlays(res, overlay_dir);
      if (!debug_stage_name.empty()) dump_stage(res, debug_stage_name, overlay_dir.empty() ? "." : overlay_dir);
      std::cerr << res.candidates.size() << " grasp candidate(s)\n";
      return 0;
    }
    if (eval->parsed()) {
      PipelineConfig cfg = load_config_opt(config_path);
      const EvalResult result = run_eval(suite, cfg, sigma, seed);
      std::cout << eval_table(result);
      if (!output.empty()) write_text(output, eval_json(result, cfg).dump(2) + "\n");
      return 0;
    }
    if (render_cmd->parsed()) {
      SceneSpec spec = load_scene_file(scene_path);
      if (sigma) spec.noise_sigma = *sigma;
      if (seed) spec.seed = *seed;
      auto [depth, truth] = render(spec);
      save_depth_pgm16_file(depth, output, 1000.0);
      if (!truth_out.empty()) {
        nlohmann::ordered_json doc;
        doc["objects"] = truth.object_count;
        doc["graspable_edges"] = truth.graspable_edges.size();
        nlohmann::ordered_json edges = nlohmann::ordered_json::array();
        for (const GroundTruthEdge& e : truth.graspable_edges) {
          nlohmann::ordered_json poly = nlohmann::ordered_json::array();
          for (const Vec2& p : e.polyline) poly.push_back({p.x(), p.y()});
          edges.push_back({{"object", e.object_id},
                           {"label", e.label == GtLabel::DD ? "DD" : "CD"},
                           {"pixel_length", e.pixel_length},
                           {"polyline", std::move(poly)}});
        }
        doc["edges"] = std::move(edges);
        write_text(truth_out, doc.dump(2) + "\n");
      }
      std::cerr << "rendered " << spec.name << ": " << truth.graspable_edges.size() << " graspable edge(s)\n";
      return 0;
    }
    if (debug->parsed()) {
      PipelineConfig cfg = load_config_opt(config_path);
      const DepthImage img = load_depth_file(input, cfg.depth_scale);
      const PipelineResult res = run_pipeline(img, cfg);
      dump_stage(res, debug_stage_name, output);
      return 0;
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
