// hopose: synthetic scenes, pose solving and evaluation from the shell.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hopose/errors.hpp"
#include "hopose/io.hpp"
#include "hopose/metrics.hpp"
#include "hopose/pipeline.hpp"
#include "hopose/synth.hpp"

namespace {

using namespace hopose;

template <typename T>
void override_with(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

std::string default_output_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "hopose_out";
}

void print_report(const SequenceReport& r) {
  const char* mark = r.partial ? " (partial: means over recovered frames)" : "";
  std::printf("%-14s %-12s %-13s %-14s %-14s\n", "rot_error_deg", "trans_error", "det_rate_pct",
              "acc_15_15_pct", "acc_30_30_pct");
  std::printf("%-14.6g %-12.6g %-13.6g %-14.6g %-14.6g%s\n", r.rot_error_deg, r.trans_error,
              r.det_rate_pct, r.acc_15_15_pct, r.acc_30_30_pct, mark);
  if (r.rotation_only) std::printf("alignment failed: rotation-only metrics\n");
}

struct SynthFlags {
  std::string config;
  std::string out;
  bool dump = false;
  std::optional<int> n_points, n_views, width, height, window;
  std::optional<std::string> shape, trajectory, pair_policy;
  std::optional<double> scale, focal_min, focal_max, depth_noise, outliers, occlusion, point_noise,
      pair_outliers;
  std::optional<std::uint64_t> seed;
};

struct SolveFlags {
  std::string config;
  std::string pair_validity;
  bool dump = false;
  std::optional<std::string> manifest, out, weight_mode, pair_policy, alignment;
  std::optional<int> workers, n_keep, iterations, window, max_rank;
  std::optional<double> threshold_px, confidence, quality;
  std::optional<bool> staircase;
  std::optional<std::uint64_t> seed;
};

struct EvalFlags {
  std::string est;
  std::string gt;
  std::string out;
  std::string alignment = "rigid";
  Thresholds thresholds;
};

int run_synth(const SynthFlags& f) {
  SynthConfig cfg;
  if (!f.config.empty()) cfg = parse_synth_config(read_file(f.config));
  SceneSpec& s = cfg.scene;
  override_with(f.n_points, s.n_points);
  override_with(f.n_views, s.n_views);
  override_with(f.width, s.width);
  override_with(f.height, s.height);
  override_with(f.scale, s.scene_scale);
  override_with(f.focal_min, s.focal_min);
  override_with(f.focal_max, s.focal_max);
  override_with(f.depth_noise, s.depth_noise_sigma);
  override_with(f.outliers, s.outlier_fraction);
  override_with(f.occlusion, s.occlusion_fraction);
  override_with(f.seed, s.rng_seed);
  override_with(f.point_noise, cfg.point_noise_sigma);
  override_with(f.pair_outliers, cfg.pair_outlier_fraction);
  override_with(f.window, cfg.window);
  if (f.shape) s.object_shape = parse_object_shape(*f.shape);
  if (f.trajectory) s.trajectory = parse_trajectory(*f.trajectory);
  if (f.pair_policy) cfg.pair_policy = parse_pair_policy(*f.pair_policy);
  if (f.dump) {
    std::cout << format_synth_config(cfg);
    return 0;
  }
  s.validate();
  const std::string dir = default_output_dir(f.out);
  const SceneBundle bundle = generate(s);
  write_scene(bundle, cfg, dir);
  std::printf("wrote %d views to %s (coverage %.3f)\n", s.n_views, dir.c_str(), bundle.coverage);
  return 0;
}

int run_solve(const SolveFlags& f) {
  PipelineConfig cfg;
  if (!f.config.empty()) cfg = parse_config(read_file(f.config));
  override_with(f.manifest, cfg.manifest);
  override_with(f.out, cfg.output_dir);
  override_with(f.seed, cfg.seed);
  override_with(f.workers, cfg.workers);
  override_with(f.n_keep, cfg.n_keep);
  override_with(f.iterations, cfg.ransac.max_iterations);
  override_with(f.threshold_px, cfg.ransac.inlier_threshold_px);
  override_with(f.confidence, cfg.ransac.confidence);
  override_with(f.quality, cfg.filter.quality_threshold);
  override_with(f.window, cfg.filter.window);
  override_with(f.max_rank, cfg.rotation.max_rank);
  override_with(f.staircase, cfg.rotation.staircase);
  if (!f.pair_validity.empty()) cfg.pair_validity_file = f.pair_validity;
  if (f.weight_mode) cfg.filter.weight_mode = parse_weight_mode(*f.weight_mode);
  if (f.pair_policy) cfg.filter.pair_policy = parse_pair_policy(*f.pair_policy);
  if (f.alignment) cfg.alignment = parse_alignment_mode(*f.alignment);
  if (f.dump) {
    std::cout << format_config(cfg);
    return 0;
  }
  cfg.validate();
  const std::string dir = default_output_dir(cfg.output_dir);
  const SolveOutput out = solve_manifest(cfg);
  write_solve_outputs(out, dir);
  for (const auto& w : out.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::size_t recovered = 0;
  for (auto r : out.poses.recovered) recovered += r ? 1 : 0;
  std::printf("recovered %zu/%zu frames from %zu/%zu pairs; objective %s\n", recovered,
              out.poses.size(), out.pairs_solved, out.pairs_attempted,
              format_double(out.sra_objective).c_str());
  if (out.truth) {
    const SequenceReport report =
        evaluate_sequence(out.poses, *out.truth, cfg.alignment, cfg.thresholds);
    write_file(std::string(dir) + "/report.txt", format_report(report));
    print_report(report);
  }
  return 0;
}

int run_eval(const EvalFlags& f) {
  const GlobalPoses est = parse_poses(read_file(f.est));
  const GlobalPoses gt = parse_poses(read_file(f.gt));
  const SequenceReport report =
      evaluate_sequence(est, gt, parse_alignment_mode(f.alignment), f.thresholds);
  print_report(report);
  if (!f.out.empty()) write_file(f.out, format_report(report));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-graph structure from motion over dense pointmaps"};
  app.require_subcommand(1);

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene bundle");
  synth->add_option("-c,--config", sf.config, "Scene config file (key = value)");
  synth->add_option("-o,--out", sf.out, "Output directory (default $HOPOSE_OUT)");
  synth->add_flag("--dump-config", sf.dump, "Print the effective config and exit");
  synth->add_option("--n-points", sf.n_points);
  synth->add_option("--n-views", sf.n_views);
  synth->add_option("--width", sf.width);
  synth->add_option("--height", sf.height);
  synth->add_option("--object-shape", sf.shape, "sphere-cluster | box-cluster | blob");
  synth->add_option("--trajectory", sf.trajectory, "orbit | random-hemisphere");
  synth->add_option("--scene-scale", sf.scale);
  synth->add_option("--focal-min", sf.focal_min);
  synth->add_option("--focal-max", sf.focal_max);
  synth->add_option("--depth-noise", sf.depth_noise, "Depth noise std, fraction of scene scale");
  synth->add_option("--outlier-fraction", sf.outliers);
  synth->add_option("--occlusion-fraction", sf.occlusion);
  synth->add_option("--point-noise", sf.point_noise, "Pair pointmap noise std");
  synth->add_option("--pair-outliers", sf.pair_outliers, "Pair pointmap outlier fraction");
  synth->add_option("--pair-policy", sf.pair_policy, "auto | all | window");
  synth->add_option("--window", sf.window);
  synth->add_option("--seed", sf.seed);

  SolveFlags pf;
  auto* solve_cmd = app.add_subcommand("solve", "Relative poses, graph and pose averaging");
  solve_cmd->add_option("-c,--config", pf.config, "Pipeline config file (key = value)");
  solve_cmd->add_option("-m,--manifest", pf.manifest, "Input manifest");
  solve_cmd->add_option("-o,--out", pf.out, "Output directory (default $HOPOSE_OUT)");
  solve_cmd->add_flag("--dump-config", pf.dump, "Print the effective config and exit");
  solve_cmd->add_option("--seed", pf.seed);
  solve_cmd->add_option("-j,--workers", pf.workers, "Pair-solve threads (0: all cores)");
  solve_cmd->add_option("--n-keep", pf.n_keep, "Evenly subsample to this many frames");
  solve_cmd->add_option("--ransac-iterations", pf.iterations);
  solve_cmd->add_option("--inlier-threshold", pf.threshold_px, "Reprojection threshold, px");
  solve_cmd->add_option("--ransac-confidence", pf.confidence);
  solve_cmd->add_option("--quality-threshold", pf.quality, "Minimum inlier ratio per edge");
  solve_cmd->add_option("--weight-mode", pf.weight_mode, "inliers | constant");
  solve_cmd->add_option("--pair-policy", pf.pair_policy, "auto | all | window");
  solve_cmd->add_option("--window", pf.window);
  solve_cmd->add_option("--pair-validity", pf.pair_validity, "File of 'i j 0|1' verdicts");
  solve_cmd->add_option("--staircase", pf.staircase, "Rank staircase on/off");
  solve_cmd->add_option("--max-rank", pf.max_rank);
  solve_cmd->add_option("--alignment", pf.alignment, "none | rigid | similarity");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "Score estimated poses against ground truth");
  eval->add_option("est", ef.est, "Estimated poses")->required();
  eval->add_option("gt", ef.gt, "Ground-truth poses")->required();
  eval->add_option("-o,--out", ef.out, "Write the report file here");
  eval->add_option("--alignment", ef.alignment, "none | rigid | similarity");
  eval->add_option("--trans-tight", ef.thresholds.trans_tight);
  eval->add_option("--rot-tight", ef.thresholds.rot_tight_deg);
  eval->add_option("--trans-loose", ef.thresholds.trans_loose);
  eval->add_option("--rot-loose", ef.thresholds.rot_loose_deg);

  auto* formats = app.add_subcommand("formats", "Print the file format reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return run_synth(sf);
    if (*solve_cmd) return run_solve(pf);
    if (*eval) return run_eval(ef);
    if (*formats) {
      std::cout << formats_text();
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e);
  }
  return 1;
}
