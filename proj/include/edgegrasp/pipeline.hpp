#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgegrasp/config.hpp"
#include "edgegrasp/depth_image.hpp"
#include "edgegrasp/edge_detect.hpp"
#include "edgegrasp/features.hpp"
#include "edgegrasp/grasp3d.hpp"
#include "edgegrasp/pairing.hpp"
#include "edgegrasp/scenegen.hpp"
#include "edgegrasp/segments.hpp"

namespace edgegrasp {

struct StageStats {
  size_t invalid_pixels_in = 0;
  size_t invalid_pixels_after_fill = 0;
  size_t dd_pixels = 0;
  size_t cd_pixels = 0;
  size_t chains = 0;
  size_t chains_dropped_short = 0;
  size_t segments_fitted = 0;
  size_t segments_dropped_short = 0;
  size_t segments_unclassifiable = 0;
  size_t segments_split = 0;
  size_t featured_segments = 0;
  size_t pairs = 0;
  std::map<std::string, int> drop_reasons;  // 3D stage
};

struct PipelineResult {
  std::vector<FeaturedSegment> segments;
  std::vector<CandidatePair> pairs;
  std::vector<GraspCandidate> candidates;
  StageStats stats;
  // intermediates kept for overlays and stage dumps
  DepthImage filled;
  DepthImage smoothed;
  GradientField grad;      // of the smoothed depth; drives DD detection
  GradientField grad_raw;  // of the unsmoothed depth; smoothing drags the
                           // direction image toward whichever side has the
                           // stronger gradient, so I_theta uses raw depth
  BinaryImage dd_edges;
  BinaryImage cd_edges;
  BinaryImage merged;
};

// Runs the full chain: shadow repair, gradients, DD/CD detection and
// cleanup, chaining and line fitting, feature classification with ambiguity
// splitting and DD relocation, pair formation, 3D lifting, and ranking.
inline PipelineResult run_pipeline(const DepthImage& input, const PipelineConfig& cfg) {
  PipelineResult res;
  StageStats& st = res.stats;
  st.invalid_pixels_in = input.invalid_count();

  res.filled = fill_shadows(input, cfg.shadow_window, cfg.shadow_max_passes);
  st.invalid_pixels_after_fill = res.filled.invalid_count();
  res.smoothed = gaussian_smooth(res.filled, cfg.smooth_sigma);
  res.grad = compute_gradients(res.smoothed);
  res.grad_raw = cfg.smooth_sigma > 0.0 ? compute_gradients(res.filled) : res.grad;

  res.dd_edges = detect_dd_edges(res.smoothed, res.grad, cfg.dd_low, cfg.dd_high);
  res.cd_edges = detect_cd_edges(res.grad_raw, cfg.cd_low, cfg.cd_high);
  // a depth discontinuity also breaks the direction image, so the CD
  // detector shadows every DD chain; drop CD responses inside the dilated DD
  // footprint to keep one response per physical edge
  {
    const BinaryImage dd_zone = dilate3x3(dilate3x3(res.dd_edges));
    for (size_t i = 0; i < res.cd_edges.bits.size(); ++i)
      if (dd_zone.bits[i]) res.cd_edges.bits[i] = 0;
  }
  st.dd_pixels = res.dd_edges.count();
  st.cd_pixels = res.cd_edges.count();
  res.merged = morphological_cleanup(merge_edges(res.dd_edges, res.cd_edges), cfg.speck_min);

  const auto chains = connect_components(res.merged);
  st.chains = chains.size();

  std::vector<LineSegment> raw_segments;
  for (const PixelChain& chain : chains) {
    if (static_cast<double>(chain.size()) < cfg.min_len) {
      ++st.chains_dropped_short;
      continue;
    }
    for (LineSegment& seg : fit_line_segments(chain, cfg.dev_tol)) {
      ++st.segments_fitted;
      if (seg.length() < cfg.min_len) {
        ++st.segments_dropped_short;
        continue;
      }
      raw_segments.push_back(std::move(seg));
    }
  }

  const ClassifyParams cls{cfg.w0, cfg.mask_min_valid, 2.5, cfg.gt_dd_gap};
  const SplitParams split{cfg.dd_high, cfg.cd_high, 4};
  const RelocateParams reloc{cfg.reloc_search_w, cfg.reloc_shift, cfg.dd_low, cfg.dd_high};
  for (const LineSegment& seg : raw_segments) {
    auto classified = classify_edge(seg, res.filled, res.grad, res.dd_edges, res.cd_edges, cls);
    if (!classified) {
      ++st.segments_unclassifiable;
      continue;
    }
    auto pieces = split_ambiguous(*classified, res.filled, res.grad, res.dd_edges, res.cd_edges, split, cls);
    if (pieces.size() > 1) ++st.segments_split;
    for (FeaturedSegment& piece : pieces) {
      if (piece.segment.length() < cfg.min_len) {
        ++st.segments_dropped_short;
        continue;
      }
      if (piece.is_dd()) piece = relocate_dd_pixels(piece, res.filled, res.grad, reloc);
      piece.id = static_cast<int>(res.segments.size());
      res.segments.push_back(std::move(piece));
    }
  }
  st.featured_segments = res.segments.size();

  PairingParams pairing;
  pairing.alpha_f = cfg.alpha_f();
  pairing.img_width = input.width;
  pairing.img_height = input.height;
  pairing.eps_max = cfg.eps_max;
  pairing.fx = cfg.cam.fx;
  pairing.fallback_w_max = cfg.fallback_w_max;
  pairing.gate = cfg.gate;
  pairing.gate_factor = cfg.gate_factor;
  res.pairs = enumerate_pairs(res.segments, pairing);
  st.pairs = res.pairs.size();

  auto drop = [&st](const char* reason) { ++st.drop_reasons[reason]; };
  std::vector<GraspCandidate> raw_candidates;
  for (size_t pi = 0; pi < res.pairs.size(); ++pi) {
    const CandidatePair& pair = res.pairs[pi];
    const auto bp_a = backproject(pair.a.sub_segment.member_pixels, res.filled, cfg.cam);
    const auto bp_b = backproject(pair.b.sub_segment.member_pixels, res.filled, cfg.cam);
    if (bp_a.points.size() < 2 || bp_b.points.size() < 2) {
      drop("too_few_3d_points");
      continue;
    }
    std::vector<Vec3> joint = bp_a.points;
    joint.insert(joint.end(), bp_b.points.begin(), bp_b.points.end());

    PlaneFit plane;
    try {
      plane = fit_plane_ransac(joint, cfg.t_max, cfg.ransac_iterations,
                               cfg.seed + static_cast<uint32_t>(pi) * 2654435761u,
                               std::min<int>(cfg.ransac_min_inliers, static_cast<int>(joint.size())));
    } catch (const input_error&) {
      drop("plane_fit_failed");
      continue;
    }
    // a single common plane must cover both regions
    std::vector<Vec3> in_a, in_b;
    for (int i : plane.inliers) {
      if (static_cast<size_t>(i) < bp_a.points.size())
        in_a.push_back(joint[i]);
      else
        in_b.push_back(joint[i]);
    }
    if (in_a.size() < std::max<size_t>(2, bp_a.points.size() / 3) ||
        in_b.size() < std::max<size_t>(2, bp_b.points.size() / 3)) {
      drop("no_common_plane");
      continue;
    }
    Vec3 mean_a = Vec3::Zero(), mean_b = Vec3::Zero();
    for (const Vec3& p : in_a) mean_a += p;
    for (const Vec3& p : in_b) mean_b += p;
    mean_a /= static_cast<double>(in_a.size());
    mean_b /= static_cast<double>(in_b.size());
    if (!width_check(mean_a, mean_b, cfg.eps_min, cfg.eps_max)) {
      drop("width_out_of_range");
      continue;
    }

    GraspCandidate cand;
    try {
      cand = grasp_parameters(in_a, in_b, plane, cfg.eps_d, cfg.eps_max);
    } catch (const input_error&) {
      drop("degenerate_geometry");
      continue;
    }
    cand.plane_inlier_ratio = static_cast<double>(plane.inliers.size()) / static_cast<double>(joint.size());
    cand.region_px_length = pair.a.sub_segment.length() + pair.b.sub_segment.length();
    cand.seg_a = pair.seg_a;
    cand.seg_b = pair.seg_b;

    // emit only candidates meeting the declared pose invariants
    const double ortho = (cand.rotation.transpose() * cand.rotation - Mat3::Identity()).norm();
    const double recon = (cand.position - 0.5 * (cand.contact_a + cand.contact_b) + cfg.eps_d * cand.approach).norm();
    if (ortho > 1e-9 || std::abs(cand.rotation.determinant() - 1.0) > 1e-9 || recon > 1e-9 ||
        std::abs(cand.approach.dot(cand.closing)) > 1e-6) {
      drop("pose_invariant");
      continue;
    }
    raw_candidates.push_back(std::move(cand));
  }

  RankingParams ranking{cfg.rank_w_region, cfg.rank_w_inliers, cfg.rank_w_rms, cfg.dedup_pos, cfg.dedup_angle_deg};
  res.candidates = rank_candidates(std::move(raw_candidates), ranking);
  return res;
}

// ---------------------------------------------------------------------------
// JSON report

namespace detail {

inline nlohmann::ordered_json vec3_json(const Vec3& v) { return nlohmann::ordered_json::array({v.x(), v.y(), v.z()}); }
inline nlohmann::ordered_json vec2_json(const Vec2& v) { return nlohmann::ordered_json::array({v.x(), v.y()}); }

}  // namespace detail

inline nlohmann::ordered_json report_json(const PipelineResult& res, const PipelineConfig& cfg,
                                          const std::string& input_name) {
  nlohmann::ordered_json doc;
  doc["metadata"] = {{"input", input_name},
                     {"config_hash", config_hash(cfg)},
                     {"seed", cfg.seed},
                     {"width", res.filled.width},
                     {"height", res.filled.height}};
  doc["stage_stats"] = {{"invalid_pixels_in", res.stats.invalid_pixels_in},
                        {"invalid_pixels_after_fill", res.stats.invalid_pixels_after_fill},
                        {"dd_pixels", res.stats.dd_pixels},
                        {"cd_pixels", res.stats.cd_pixels},
                        {"chains", res.stats.chains},
                        {"chains_dropped_short", res.stats.chains_dropped_short},
                        {"segments_fitted", res.stats.segments_fitted},
                        {"segments_dropped_short", res.stats.segments_dropped_short},
                        {"segments_unclassifiable", res.stats.segments_unclassifiable},
                        {"segments_split", res.stats.segments_split},
                        {"featured_segments", res.stats.featured_segments},
                        {"pairs", res.stats.pairs},
                        {"candidates", res.candidates.size()},
                        {"drop_reasons", res.stats.drop_reasons}};

  nlohmann::ordered_json segs = nlohmann::ordered_json::array();
  for (const FeaturedSegment& f : res.segments) {
    segs.push_back({{"id", f.id},
                    {"label", to_string(f.label)},
                    {"start", detail::vec2_json(f.segment.p_start)},
                    {"end", detail::vec2_json(f.segment.p_end)},
                    {"length_px", f.segment.length()},
                    {"angle_deg", f.segment.length() > 0 ? segment_angle(f.segment) : 0.0},
                    {"depth", f.seg_depth}});
  }
  doc["segments"] = std::move(segs);

  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (size_t i = 0; i < res.candidates.size(); ++i) {
    const GraspCandidate& g = res.candidates[i];
    nlohmann::ordered_json rot = nlohmann::ordered_json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(g.rotation(r, c));
    cands.push_back({{"id", i},
                     {"position", detail::vec3_json(g.position)},
                     {"rotation_row_major", std::move(rot)},
                     {"approach", detail::vec3_json(g.approach)},
                     {"closing", detail::vec3_json(g.closing)},
                     {"contacts", nlohmann::ordered_json::array(
                                      {detail::vec3_json(g.contact_a), detail::vec3_json(g.contact_b)})},
                     {"width", g.width},
                     {"opening_pre", g.opening_pre},
                     {"score", g.score},
                     {"plane", {{"rms", g.plane_rms}, {"inlier_ratio", g.plane_inlier_ratio}}},
                     {"segments", nlohmann::ordered_json::array({g.seg_a, g.seg_b})},
                     {"region_px_length", g.region_px_length}});
  }
  doc["candidates"] = std::move(cands);
  return doc;
}

// ---------------------------------------------------------------------------
// suite evaluation

struct SceneEvalRow {
  std::string name;
  bool skipped = false;
  DetectionReport report;
};

struct EvalResult {
  std::vector<SceneEvalRow> rows;
  int g_edges = 0, d_edges = 0, g_surfaces = 0, d_surfaces = 0, g_objects = 0, d_objects = 0;

  double edge_rate() const { return DetectionReport::rate(d_edges, g_edges); }
  double surface_rate() const { return DetectionReport::rate(d_surfaces, g_surfaces); }
  double object_rate() const { return DetectionReport::rate(d_objects, g_objects); }
};

inline GtParams gt_params_from_config(const PipelineConfig& cfg) {
  GtParams p;
  p.dd_gap = cfg.gt_dd_gap;
  p.min_edge_px = cfg.gt_min_edge_px;
  p.alpha_f = cfg.alpha_f();
  p.eps_max = cfg.eps_max;
  return p;
}

// Renders one scene, runs the pipeline on it, and scores detection.
inline std::pair<DetectionReport, PipelineResult> evaluate_scene(const SceneSpec& spec, PipelineConfig cfg) {
  cfg.cam = spec.cam;  // the scene defines the intrinsics
  auto [depth, truth] = render(spec, gt_params_from_config(cfg));
  PipelineResult res = run_pipeline(depth, cfg);
  DetectionReport report = evaluate_detection(res.segments, res.pairs, truth, cfg.match_tol);
  return {std::move(report), std::move(res)};
}

// Evaluates every *.scene file in the suite directory (sorted by name).
// sigma/seed overrides replace the per-scene noise settings when given.
inline EvalResult run_eval(const std::string& suite_dir, const PipelineConfig& cfg,
                           std::optional<double> sigma_override = std::nullopt,
                           std::optional<uint32_t> seed_override = std::nullopt) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(suite_dir)) throw input_error("suite directory not found: " + suite_dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(suite_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".scene") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw input_error("no .scene files in: " + suite_dir);

  EvalResult out;
  for (const std::string& file : files) {
    SceneEvalRow row;
    row.name = fs::path(file).stem().string();
    try {
      SceneSpec spec = load_scene_file(file);
      if (sigma_override) spec.noise_sigma = *sigma_override;
      if (seed_override) spec.seed = *seed_override;
      row.report = evaluate_scene(spec, cfg).first;
    } catch (const std::exception&) {
      row.skipped = true;
    }
    if (!row.skipped) {
      out.g_edges += row.report.graspable_edges;
      out.d_edges += row.report.detected_edges;
      out.g_surfaces += row.report.graspable_surfaces;
      out.d_surfaces += row.report.detected_surfaces;
      out.g_objects += row.report.graspable_objects;
      out.d_objects += row.report.detected_objects;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline std::string eval_table(const EvalResult& eval) {
  std::ostringstream out;
  out << "Scene            G.Obj  D.Obj  G.Surf  D.Surf  G.Edge  D.Edge\n";
  for (const SceneEvalRow& row : eval.rows) {
    if (row.skipped) {
      out << row.name << "  [skipped]\n";
      continue;
    }
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %5d  %5d  %6d  %6d  %6d  %6d\n", row.name.c_str(),
                  row.report.graspable_objects, row.report.detected_objects, row.report.graspable_surfaces,
                  row.report.detected_surfaces, row.report.graspable_edges, row.report.detected_edges);
    out << line;
  }
  char avg[160];
  std::snprintf(avg, sizeof(avg),
                "Average detection accuracy rate: object %.1f%% | surface %.1f%% | edge %.1f%%\n",
                100.0 * eval.object_rate(), 100.0 * eval.surface_rate(), 100.0 * eval.edge_rate());
  out << avg;
  return out.str();
}

inline nlohmann::ordered_json eval_json(const EvalResult& eval, const PipelineConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["metadata"] = {{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}};
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const SceneEvalRow& row : eval.rows) {
    if (row.skipped) {
      rows.push_back({{"scene", row.name}, {"skipped", true}});
      continue;
    }
    rows.push_back({{"scene", row.name},
                    {"graspable_objects", row.report.graspable_objects},
                    {"detected_objects", row.report.detected_objects},
                    {"graspable_surfaces", row.report.graspable_surfaces},
                    {"detected_surfaces", row.report.detected_surfaces},
                    {"graspable_edges", row.report.graspable_edges},
                    {"detected_edges", row.report.detected_edges}});
  }
  doc["scenes"] = std::move(rows);
  doc["summary"] = {{"object_rate", eval.object_rate()},
                    {"surface_rate", eval.surface_rate()},
                    {"edge_rate", eval.edge_rate()}};
  return doc;
}

}  // namespace edgegrasp
