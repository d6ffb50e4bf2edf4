#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hopose/geometry.hpp"
#include "hopose/metrics.hpp"
#include "hopose/pose_graph.hpp"

namespace hopose {

// Binary containers (see FORMATS.md). Values are stored as little-endian
// float32, so doubles are rounded on write; a decoded file re-encodes to the
// identical bytes.

struct PointmapFile {
  Pointmap pointmap;
  bool has_confidence = true;
  bool has_mask = true;
};

std::string encode_pointmap(const PointmapFile& file);
/// Throws BadMagicError, TruncatedFileError or InvalidValueError, each
/// carrying the byte offset of the problem.
PointmapFile decode_pointmap(std::string_view bytes);

std::string encode_depth(const DepthMap& depth);
DepthMap decode_depth(std::string_view bytes);

// Line-oriented text documents. Numbers are written in shortest round-trip
// form and parsed exactly; ParseError offsets are 1-based line numbers.

std::string format_poses(const GlobalPoses& poses);
GlobalPoses parse_poses(std::string_view text);

std::string format_graph(const PoseGraph& graph);
PoseGraph parse_graph(std::string_view text);

std::string format_report(const SequenceReport& report);
SequenceReport parse_report(std::string_view text);

/// Lines of `i j 0|1`; keys are normalized to (min, max).
std::map<std::pair<int, int>, bool> parse_pair_validity(std::string_view text);
std::string format_pair_validity(const std::map<std::pair<int, int>, bool>& verdicts);

/// Index of a stored scene or of externally produced pair pointmaps.
/// Paths are kept as written (relative to the manifest's directory).
struct Manifest {
  struct View {
    int frame = 0;
    std::string depth;
  };
  struct Pair {
    int i = 0;
    int j = 0;
    /// X^{i,i} and X^{j,i} pointmap files.
    std::string x11;
    std::string x21;
  };
  int width = 0;
  int height = 0;
  int n_frames = 0;
  std::string gt_poses;
  std::vector<View> views;
  std::vector<Pair> pairs;
};

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);

/// Shortest round-trip decimal, locale independent.
std::string format_double(double v);
/// Whole-token exact parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view token);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename.
void write_file(const std::filesystem::path& path, std::string_view bytes);

PointmapFile read_pointmap(const std::filesystem::path& path);
void write_pointmap(const std::filesystem::path& path, const PointmapFile& file);
DepthMap read_depth(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace hopose
