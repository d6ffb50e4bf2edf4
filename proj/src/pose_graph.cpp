#include "hopose/pose_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "hopose/errors.hpp"

namespace hopose {

namespace {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

std::string describe_components(const std::vector<std::vector<int>>& comps) {
  std::ostringstream os;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    os << (c ? " " : "") << "{";
    for (std::size_t k = 0; k < comps[c].size(); ++k) os << (k ? "," : "") << comps[c][k];
    os << "}";
  }
  return os.str();
}

}  // namespace

PoseGraph::PoseGraph(int n_vertices, std::vector<PoseEdge> edges)
    : n_vertices_(n_vertices), edges_(std::move(edges)) {
  if (n_vertices < 0) throw ValidationError("pose graph vertex count is negative");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n_vertices || e.j >= n_vertices) {
      throw ValidationError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                            ") references a missing vertex");
    }
    if (e.i == e.j) {
      throw ValidationError("self-loop on vertex " + std::to_string(e.i));
    }
    if (!seen.insert({std::min(e.i, e.j), std::max(e.i, e.j)}).second) {
      throw ValidationError("duplicate edge between " + std::to_string(e.i) + " and " +
                            std::to_string(e.j));
    }
    if (!is_rotation(e.rotation)) {
      throw ValidationError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                            ") rotation is not in SO(3)");
    }
    if (!e.translation.allFinite()) {
      throw ValidationError("edge translation is not finite");
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ValidationError("edge weight must be positive and finite");
    }
  }
}

std::vector<std::uint8_t> PoseGraph::active_vertices() const {
  std::vector<std::uint8_t> active(n_vertices_, 0);
  for (const auto& e : edges_) active[e.i] = active[e.j] = 1;
  return active;
}

std::vector<std::vector<int>> PoseGraph::components() const {
  UnionFind uf(n_vertices_);
  for (const auto& e : edges_) uf.unite(e.i, e.j);
  const auto active = active_vertices();
  std::map<int, std::vector<int>> by_root;
  for (int v = 0; v < n_vertices_; ++v) {
    if (active[v]) by_root[uf.find(v)].push_back(v);
  }
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : by_root) out.push_back(std::move(members));
  return out;
}

void PoseGraph::require_connected() const {
  if (edges_.empty()) throw InsufficientDataError("pose graph has no edges");
  auto comps = components();
  if (comps.size() > 1) {
    const std::string names = describe_components(comps);
    throw DisconnectedGraphError("pose graph is disconnected: " + names, std::move(comps));
  }
}

std::vector<std::pair<int, int>> candidate_pairs(int n_frames, const EdgeFilterConfig& cfg) {
  PairPolicy policy = cfg.pair_policy;
  if (policy == PairPolicy::kAuto) {
    policy = n_frames > 60 ? PairPolicy::kWindow : PairPolicy::kAllPairs;
  }
  if (policy == PairPolicy::kWindow && cfg.window < 1) {
    throw ValidationError("pair window must be >= 1");
  }
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < n_frames; ++i) {
    for (int j = i + 1; j < n_frames; ++j) {
      if (policy == PairPolicy::kWindow && j - i > cfg.window) break;
      out.emplace_back(i, j);
    }
  }
  return out;
}

PoseGraph build_graph(std::span<const PairMeasurement> pairs, int n_frames,
                      const EdgeFilterConfig& cfg) {
  if (!(cfg.max_weight > 0.0)) throw ValidationError("max_weight must be positive");

  struct Candidate {
    PoseEdge edge;
    bool passes = false;
    std::size_t inliers = 0;
  };
  std::vector<Candidate> candidates;
  for (const auto& m : pairs) {
    Candidate c;
    c.edge.i = m.i;
    c.edge.j = m.j;
    // PnP yields x_j = R x_i + t; the edge stores the pose of j in i's frame.
    const RigidTransform rel = inverse(m.result.transform);
    c.edge.rotation = rel.rotation();
    c.edge.translation = rel.translation();
    c.edge.quality = m.result.valid_count
                         ? static_cast<double>(m.result.inlier_count) / m.result.valid_count
                         : 0.0;
    c.inliers = m.result.inlier_count;
    const auto key = std::make_pair(std::min(m.i, m.j), std::max(m.i, m.j));
    const auto verdict = cfg.pair_validity.find(key);
    c.passes = verdict != cfg.pair_validity.end() ? verdict->second
                                                  : c.edge.quality >= cfg.quality_threshold;
    if (c.inliers == 0) c.passes = false;
    candidates.push_back(c);
  }

  UnionFind uf(std::max(n_frames, 0));
  for (const auto& c : candidates) {
    if (c.passes && c.edge.i >= 0 && c.edge.j >= 0 && c.edge.i < n_frames &&
        c.edge.j < n_frames) {
      uf.unite(c.edge.i, c.edge.j);
    }
  }
  for (auto& c : candidates) {
    if (c.passes || c.inliers == 0 || std::abs(c.edge.i - c.edge.j) != 1) continue;
    if (c.edge.i < 0 || c.edge.j < 0 || c.edge.i >= n_frames || c.edge.j >= n_frames) continue;
    if (uf.find(c.edge.i) != uf.find(c.edge.j)) {
      c.passes = true;
      c.edge.rescued = true;
    }
  }

  std::size_t max_inliers = 0;
  for (const auto& c : candidates) {
    if (c.passes) max_inliers = std::max(max_inliers, c.inliers);
  }
  std::vector<PoseEdge> edges;
  for (auto& c : candidates) {
    if (!c.passes) continue;
    c.edge.weight = cfg.weight_mode == WeightMode::kConstant
                        ? cfg.max_weight
                        : cfg.max_weight * static_cast<double>(c.inliers) / max_inliers;
    edges.push_back(c.edge);
  }
  PoseGraph graph(n_frames, std::move(edges));
  graph.require_connected();
  return graph;
}

GlobalPoses assemble_global(std::span<const Mat3> rotations,
                            std::span<const Vec3> translations,
                            std::span<const std::uint8_t> recovered) {
  if (rotations.size() != translations.size() || rotations.size() != recovered.size()) {
    throw ShapeError("assemble_global: rotation, translation and flag counts differ");
  }
  GlobalPoses out;
  out.poses.reserve(rotations.size());
  for (std::size_t k = 0; k < rotations.size(); ++k) {
    out.recovered.push_back(recovered[k] ? 1 : 0);
    if (!recovered[k]) {
      out.poses.emplace_back();
      continue;
    }
    const Mat3 r_wc = rotations[k].transpose();
    Vec3 t_wc = -(r_wc * translations[k]);
    if (translations[k].isZero(0.0)) t_wc.setZero();
    out.poses.emplace_back(r_wc, t_wc);
  }
  return out;
}

}  // namespace hopose
