#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "edgegrasp/geometry.hpp"
#include "edgegrasp/grasp3d.hpp"
#include "edgegrasp/keyval.hpp"

namespace edgegrasp {

// Every tunable of the pipeline with its shipped default. Values load from a
// sectioned key-value file; anything absent keeps the default.
struct PipelineConfig {
  // [camera]
  CameraModel cam;
  // [depth]
  double depth_scale = 0.001;  // raw units -> meters
  int shadow_window = 5;
  int shadow_max_passes = 16;
  double smooth_sigma = 0.8;  // px, pre-gradient smoothing; 0 disables
  // [edges] thresholds are discontinuity sizes (step height / direction jump)
  double dd_low = 0.005;   // meters
  double dd_high = 0.015;  // meters
  double cd_low = 0.12;    // radians
  double cd_high = 0.35;   // radians
  int speck_min = 5;       // pixels
  // [segments]
  double dev_tol = 1.5;  // px
  double min_len = 8.0;  // px, chains and fitted segments below are dropped
  // [features]
  int w0 = 5;                   // side-mask width, px
  double mask_min_valid = 0.30;
  int reloc_search_w = 7;       // px
  double reloc_shift = 2.0;     // px
  // [gripper]
  double mu = 0.4;       // friction coefficient; alpha_f = atan(mu)
  double eps_min = 0.02;  // meters
  double eps_max = 0.07;  // meters
  double eps_d = 0.08;    // finger length, meters
  // [pairing]
  bool gate = true;
  double gate_factor = 1.5;
  double fallback_w_max = 60.0;  // px, used when no depth is available
  // [plane]
  double t_max = 0.008;  // meters
  int ransac_iterations = 256;
  int ransac_min_inliers = 10;
  uint32_t seed = 0;
  // [ranking]
  double rank_w_region = 0.01;
  double rank_w_inliers = 1.0;
  double rank_w_rms = 10.0;
  double dedup_pos = 0.01;      // meters
  double dedup_angle_deg = 10.0;
  // [eval]
  double match_tol = 3.0;  // px
  double gt_dd_gap = 0.02;  // meters
  double gt_min_edge_px = 12.0;

  double alpha_f() const { return std::atan(mu); }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw config_error(std::string("config: ") + name + " must be positive");
    };
    positive(cam.fx, "camera.fx");
    positive(cam.fy, "camera.fy");
    positive(depth_scale, "depth.scale");
    if (shadow_window < 3 || shadow_window % 2 == 0) throw config_error("config: depth.shadow_window must be odd >= 3");
    if (!(dd_low < dd_high)) throw config_error("config: edges.dd_low must be < edges.dd_high");
    if (!(cd_low < cd_high)) throw config_error("config: edges.cd_low must be < edges.cd_high");
    positive(dd_low, "edges.dd_low");
    positive(cd_low, "edges.cd_low");
    positive(dev_tol, "segments.dev_tol");
    positive(min_len, "segments.min_len");
    if (w0 < 1) throw config_error("config: features.w0 must be >= 1");
    positive(mu, "gripper.mu");
    positive(eps_min, "gripper.eps_min");
    if (!(eps_min < eps_max)) throw config_error("config: gripper.eps_min must be < gripper.eps_max");
    positive(eps_d, "gripper.eps_d");
    positive(t_max, "plane.t_max");
    if (ransac_iterations < 1) throw config_error("config: plane.iterations must be >= 1");
    positive(match_tol, "eval.match_tol");
  }
};

inline PipelineConfig parse_config(const KeyValFile& kv) {
  PipelineConfig c;
  const KeyValSection& cam = kv.section("camera");
  c.cam.fx = cam.get_double("fx", c.cam.fx);
  c.cam.fy = cam.get_double("fy", c.cam.fy);
  c.cam.cx = cam.get_double("cx", c.cam.cx);
  c.cam.cy = cam.get_double("cy", c.cam.cy);
  const KeyValSection& depth = kv.section("depth");
  c.depth_scale = depth.get_double("scale", c.depth_scale);
  c.shadow_window = depth.get_int("shadow_window", c.shadow_window);
  c.shadow_max_passes = depth.get_int("shadow_max_passes", c.shadow_max_passes);
  c.smooth_sigma = depth.get_double("smooth_sigma", c.smooth_sigma);
  const KeyValSection& edges = kv.section("edges");
  c.dd_low = edges.get_double("dd_low", c.dd_low);
  c.dd_high = edges.get_double("dd_high", c.dd_high);
  c.cd_low = edges.get_double("cd_low", c.cd_low);
  c.cd_high = edges.get_double("cd_high", c.cd_high);
  c.speck_min = edges.get_int("speck_min", c.speck_min);
  const KeyValSection& segments = kv.section("segments");
  c.dev_tol = segments.get_double("dev_tol", c.dev_tol);
  c.min_len = segments.get_double("min_len", c.min_len);
  const KeyValSection& features = kv.section("features");
  c.w0 = features.get_int("w0", c.w0);
  c.mask_min_valid = features.get_double("mask_min_valid", c.mask_min_valid);
  c.reloc_search_w = features.get_int("reloc_search_w", c.reloc_search_w);
  c.reloc_shift = features.get_double("reloc_shift", c.reloc_shift);
  const KeyValSection& gripper = kv.section("gripper");
  c.mu = gripper.get_double("mu", c.mu);
  c.eps_min = gripper.get_double("eps_min", c.eps_min);
  c.eps_max = gripper.get_double("eps_max", c.eps_max);
  c.eps_d = gripper.get_double("eps_d", c.eps_d);
  const KeyValSection& pairing = kv.section("pairing");
  c.gate = pairing.get_bool("gate", c.gate);
  c.gate_factor = pairing.get_double("gate_factor", c.gate_factor);
  c.fallback_w_max = pairing.get_double("fallback_w_max", c.fallback_w_max);
  const KeyValSection& plane = kv.section("plane");
  c.t_max = plane.get_double("t_max", c.t_max);
  c.ransac_iterations = plane.get_int("iterations", c.ransac_iterations);
  c.ransac_min_inliers = plane.get_int("min_inliers", c.ransac_min_inliers);
  c.seed = static_cast<uint32_t>(plane.get_int("seed", static_cast<int>(c.seed)));
  const KeyValSection& ranking = kv.section("ranking");
  c.rank_w_region = ranking.get_double("w_region", c.rank_w_region);
  c.rank_w_inliers = ranking.get_double("w_inliers", c.rank_w_inliers);
  c.rank_w_rms = ranking.get_double("w_rms", c.rank_w_rms);
  c.dedup_pos = ranking.get_double("dedup_pos", c.dedup_pos);
  c.dedup_angle_deg = ranking.get_double("dedup_angle_deg", c.dedup_angle_deg);
  const KeyValSection& eval = kv.section("eval");
  c.match_tol = eval.get_double("match_tol", c.match_tol);
  c.gt_dd_gap = eval.get_double("gt_dd_gap", c.gt_dd_gap);
  c.gt_min_edge_px = eval.get_double("gt_min_edge_px", c.gt_min_edge_px);
  c.validate();
  return c;
}

inline PipelineConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open config file: " + path);
  KeyValFile kv;
  try {
    kv = parse_keyval(f);
  } catch (const input_error& e) {
    throw config_error(e.what());
  }
  return parse_config(kv);
}

// Canonical text dump: stable field order, full precision. Basis of the
// config hash in reports.
inline std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "[camera]\nfx = " << c.cam.fx << "\nfy = " << c.cam.fy << "\ncx = " << c.cam.cx << "\ncy = " << c.cam.cy
      << "\n[depth]\nscale = " << c.depth_scale << "\nshadow_window = " << c.shadow_window
      << "\nshadow_max_passes = " << c.shadow_max_passes << "\nsmooth_sigma = " << c.smooth_sigma
      << "\n[edges]\ndd_low = " << c.dd_low << "\ndd_high = " << c.dd_high << "\ncd_low = " << c.cd_low
      << "\ncd_high = " << c.cd_high << "\nspeck_min = " << c.speck_min << "\n[segments]\ndev_tol = " << c.dev_tol
      << "\nmin_len = " << c.min_len << "\n[features]\nw0 = " << c.w0 << "\nmask_min_valid = " << c.mask_min_valid
      << "\nreloc_search_w = " << c.reloc_search_w << "\nreloc_shift = " << c.reloc_shift
      << "\n[gripper]\nmu = " << c.mu << "\neps_min = " << c.eps_min << "\neps_max = " << c.eps_max
      << "\neps_d = " << c.eps_d << "\n[pairing]\ngate = " << (c.gate ? "true" : "false")
      << "\ngate_factor = " << c.gate_factor << "\nfallback_w_max = " << c.fallback_w_max
      << "\n[plane]\nt_max = " << c.t_max << "\niterations = " << c.ransac_iterations
      << "\nmin_inliers = " << c.ransac_min_inliers << "\nseed = " << c.seed
      << "\n[ranking]\nw_region = " << c.rank_w_region << "\nw_inliers = " << c.rank_w_inliers
      << "\nw_rms = " << c.rank_w_rms << "\ndedup_pos = " << c.dedup_pos
      << "\ndedup_angle_deg = " << c.dedup_angle_deg << "\n[eval]\nmatch_tol = " << c.match_tol
      << "\ngt_dd_gap = " << c.gt_dd_gap << "\ngt_min_edge_px = " << c.gt_min_edge_px << "\n";
  return out.str();
}

inline std::string config_hash(const PipelineConfig& c) {
  // FNV-1a 64
  uint64_t h = 1469598103934665603ull;
  for (const char ch : serialize_config(c)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace edgegrasp
