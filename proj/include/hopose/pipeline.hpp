#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hopose/metrics.hpp"
#include "hopose/pose_graph.hpp"
#include "hopose/relative_pose.hpp"
#include "hopose/synth.hpp"

namespace hopose {

std::string to_string(WeightMode mode);
std::string to_string(PairPolicy policy);
std::string to_string(AlignmentMode mode);
WeightMode parse_weight_mode(const std::string& s);
PairPolicy parse_pair_policy(const std::string& s);
AlignmentMode parse_alignment_mode(const std::string& s);

/// Everything `solve` and `eval` need. Round-trips losslessly through
/// format_config / parse_config.
struct PipelineConfig {
  std::string manifest;
  RansacConfig ransac;
  /// Quality threshold, weights and candidate-pair policy. `pair_validity`
  /// is filled from `pair_validity_file` at solve time.
  EdgeFilterConfig filter;
  std::string pair_validity_file;
  RotationAveragingOptions rotation;
  AlignmentMode alignment = AlignmentMode::kRigid;
  Thresholds thresholds;
  /// Frames kept by subsample_frames; 0 keeps every frame.
  int n_keep = 0;
  std::string output_dir;
  /// Per-pair RANSAC seeds derive from this and the pair's frame ids.
  std::uint64_t seed = 0;
  /// Pair-solve worker threads; 0 uses every logical core.
  int workers = 0;

  void validate() const;
};

std::string format_config(const PipelineConfig& cfg);
/// `key = value` lines; unknown keys are ParseErrors, omitted keys keep
/// their defaults.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});

/// Generation settings for `synth`.
struct SynthConfig {
  SceneSpec scene;
  /// Negative values fall back to the scene's depth noise / outlier fraction.
  double point_noise_sigma = -1.0;
  double pair_outlier_fraction = -1.0;
  PairPolicy pair_policy = PairPolicy::kAuto;
  int window = 10;

  PairKnobs knobs() const;
};

std::string format_synth_config(const SynthConfig& cfg);
SynthConfig parse_synth_config(std::string_view text, SynthConfig base = {});

/// Both pointmaps of pair (i, j), in frame i.
struct PairData {
  Pointmap x11;
  Pointmap x21;
};

/// Loads pair (i, j) by original frame index. May throw; parse, I/O and
/// data errors skip the pair with a warning.
using PairSource = std::function<PairData(int i, int j)>;

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct SolveOutput {
  int n_frames_total = 0;
  /// Original indices of the frames that were kept.
  std::vector<int> frames;
  GlobalPoses poses;
  PoseGraph graph{0};
  RotationAveragingResult rotation;
  TranslationAveragingResult translation;
  std::size_t pairs_attempted = 0;
  std::size_t pairs_solved = 0;
  /// Rotation averaging objective re-evaluated on the saved poses and graph.
  double sra_objective = 0.0;
  std::vector<std::string> warnings;
  std::vector<StageTiming> timings;
  /// Ground truth of the kept frames, when the input carries it.
  std::optional<GlobalPoses> truth;
};

/// subsample -> per-pair focal + PnP-RANSAC -> build_graph -> rotation and
/// translation averaging -> assemble_global. `available` lists the pairs the
/// source can produce; the candidate policy picks among them.
SolveOutput solve(int n_frames, const std::vector<std::pair<int, int>>& available,
                  const PairSource& source, const PipelineConfig& cfg);

/// Resolves the manifest in `cfg` and runs `solve` over its pair files.
SolveOutput solve_manifest(const PipelineConfig& cfg);

/// Writes poses.txt, graph.txt and run.log (plus gt_poses.txt when `truth`
/// is set) into `dir`.
void write_solve_outputs(const SolveOutput& out, const std::filesystem::path& dir);

std::string format_run_log(const SolveOutput& out);

/// Pair pointmaps straight from a generated scene.
PairSource scene_source(const SceneBundle& bundle, const PairKnobs& knobs);

/// Writes depth maps, ground-truth poses, pair pointmaps and manifest.txt.
void write_scene(const SceneBundle& bundle, const SynthConfig& cfg,
                 const std::filesystem::path& dir);

/// Ground truth of a bundle as world-to-camera poses, all recovered.
GlobalPoses scene_poses(const SceneBundle& bundle);

/// Picks `frames` out of `poses`.
GlobalPoses select_frames(const GlobalPoses& poses, const std::vector<int>& frames);

/// CLI exit status for an exception: 2 config, 3 insufficient data,
/// 4 disconnected graph, 5 I/O or parse, 1 anything else.
int exit_code(const std::exception& e);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "HOPOSE_OUT";

/// Printed by `hopose formats`.
std::string_view formats_text();

}  // namespace hopose
