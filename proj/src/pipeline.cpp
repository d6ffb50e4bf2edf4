#include "hopose/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "hopose/errors.hpp"
#include "hopose/io.hpp"

namespace hopose {

namespace {

// ---- key = value documents -------------------------------------------------

struct Entry {
  std::size_t line;
  std::string value;
};

std::map<std::string, Entry> parse_key_values(std::string_view text) {
  std::map<std::string, Entry> out;
  std::size_t number = 0;
  while (!text.empty()) {
    ++number;
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", number);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("empty key", number);
    if (!out.emplace(key, Entry{number, std::string(trim(line.substr(eq + 1)))}).second) {
      throw ParseError("duplicate key '" + key + "'", number);
    }
  }
  return out;
}

class KeyValues {
 public:
  explicit KeyValues(std::string_view text) : entries_(parse_key_values(text)) {}

  template <typename F>
  void take(const std::string& key, F&& apply) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return;
    try {
      apply(it->second.value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(key + ": " + e.what(), it->second.line);
    }
    entries_.erase(it);
  }

  void real(const std::string& key, double& v) {
    take(key, [&](const std::string& s) {
      const auto parsed = parse_double(s);
      if (!parsed) throw ValidationError("not a number");
      v = *parsed;
    });
  }

  template <typename Int>
  void integer(const std::string& key, Int& v) {
    take(key, [&](const std::string& s) {
      Int parsed{};
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), parsed);
      if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("not an integer");
      v = parsed;
    });
  }

  void boolean(const std::string& key, bool& v) {
    take(key, [&](const std::string& s) {
      if (s == "1" || s == "true") {
        v = true;
      } else if (s == "0" || s == "false") {
        v = false;
      } else {
        throw ValidationError("expected 0 or 1");
      }
    });
  }

  void string(const std::string& key, std::string& v) {
    take(key, [&](const std::string& s) { v = s; });
  }

  void finish() const {
    if (!entries_.empty()) {
      const auto& [key, entry] = *entries_.begin();
      throw ParseError("unknown key '" + key + "'", entry.line);
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

class KeyValueWriter {
 public:
  explicit KeyValueWriter(std::string header) : out_("# " + header + "\n") {}
  void put(const std::string& key, const std::string& value) {
    out_ += key + " = " + value + "\n";
  }
  void put(const std::string& key, double v) { put(key, format_double(v)); }
  void put(const std::string& key, int v) { put(key, std::to_string(v)); }
  void put(const std::string& key, std::uint64_t v) { put(key, std::to_string(v)); }
  void put(const std::string& key, bool v) { put(key, std::string(v ? "1" : "0")); }
  std::string str() const { return out_; }

 private:
  std::string out_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string pair_name(int i, int j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace

// ---- enums -----------------------------------------------------------------

std::string to_string(WeightMode mode) {
  return mode == WeightMode::kConstant ? "constant" : "inliers";
}

std::string to_string(PairPolicy policy) {
  switch (policy) {
    case PairPolicy::kAuto: return "auto";
    case PairPolicy::kAllPairs: return "all";
    case PairPolicy::kWindow: return "window";
  }
  return "?";
}

std::string to_string(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::kNone: return "none";
    case AlignmentMode::kRigid: return "rigid";
    case AlignmentMode::kSimilarity: return "similarity";
  }
  return "?";
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "inliers") return WeightMode::kInlierCount;
  if (s == "constant") return WeightMode::kConstant;
  throw ValidationError("weight_mode: expected inliers or constant, got '" + s + "'");
}

PairPolicy parse_pair_policy(const std::string& s) {
  if (s == "auto") return PairPolicy::kAuto;
  if (s == "all") return PairPolicy::kAllPairs;
  if (s == "window") return PairPolicy::kWindow;
  throw ValidationError("pair_policy: expected auto, all or window, got '" + s + "'");
}

AlignmentMode parse_alignment_mode(const std::string& s) {
  if (s == "none") return AlignmentMode::kNone;
  if (s == "rigid") return AlignmentMode::kRigid;
  if (s == "similarity") return AlignmentMode::kSimilarity;
  throw ValidationError("alignment: expected none, rigid or similarity, got '" + s + "'");
}

// ---- configs ---------------------------------------------------------------

void PipelineConfig::validate() const {
  ransac.validate();
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError(field + ": " + why);
  };
  if (!(filter.quality_threshold >= 0.0 && filter.quality_threshold <= 1.0)) {
    fail("quality_threshold", "must lie in [0, 1]");
  }
  if (!(filter.max_weight > 0.0) || !std::isfinite(filter.max_weight)) {
    fail("max_weight", "must be positive");
  }
  if (filter.window < 1) fail("window", "must be >= 1");
  if (rotation.max_sweeps < 1) fail("max_sweeps", "must be >= 1");
  if (!(rotation.relative_tolerance >= 0.0)) fail("rotation_tolerance", "must be >= 0");
  if (rotation.max_rank < 3) fail("max_rank", "must be >= 3");
  if (!(thresholds.trans_tight > 0.0 && thresholds.trans_loose > 0.0 &&
        thresholds.rot_tight_deg > 0.0 && thresholds.rot_loose_deg > 0.0)) {
    fail("thresholds", "must be positive");
  }
  if (n_keep < 0) fail("n_keep", "must be >= 0");
  if (workers < 0) fail("workers", "must be >= 0");
}

std::string format_config(const PipelineConfig& c) {
  KeyValueWriter w("hopose pipeline config");
  w.put("manifest", c.manifest);
  w.put("output_dir", c.output_dir);
  w.put("seed", c.seed);
  w.put("workers", c.workers);
  w.put("n_keep", c.n_keep);
  w.put("ransac_iterations", c.ransac.max_iterations);
  w.put("inlier_threshold_px", c.ransac.inlier_threshold_px);
  w.put("ransac_confidence", c.ransac.confidence);
  w.put("min_sample", c.ransac.min_sample);
  w.put("quality_threshold", c.filter.quality_threshold);
  w.put("weight_mode", to_string(c.filter.weight_mode));
  w.put("max_weight", c.filter.max_weight);
  w.put("pair_policy", to_string(c.filter.pair_policy));
  w.put("window", c.filter.window);
  w.put("pair_validity", c.pair_validity_file);
  w.put("staircase", c.rotation.staircase);
  w.put("max_rank", c.rotation.max_rank);
  w.put("max_sweeps", c.rotation.max_sweeps);
  w.put("rotation_tolerance", c.rotation.relative_tolerance);
  w.put("staircase_tolerance", c.rotation.staircase_tolerance);
  w.put("alignment", to_string(c.alignment));
  w.put("trans_tight", c.thresholds.trans_tight);
  w.put("rot_tight_deg", c.thresholds.rot_tight_deg);
  w.put("trans_loose", c.thresholds.trans_loose);
  w.put("rot_loose_deg", c.thresholds.rot_loose_deg);
  return w.str();
}

PipelineConfig parse_config(std::string_view text, PipelineConfig c) {
  KeyValues kv(text);
  kv.string("manifest", c.manifest);
  kv.string("output_dir", c.output_dir);
  kv.integer("seed", c.seed);
  kv.integer("workers", c.workers);
  kv.integer("n_keep", c.n_keep);
  kv.integer("ransac_iterations", c.ransac.max_iterations);
  kv.real("inlier_threshold_px", c.ransac.inlier_threshold_px);
  kv.real("ransac_confidence", c.ransac.confidence);
  kv.integer("min_sample", c.ransac.min_sample);
  kv.real("quality_threshold", c.filter.quality_threshold);
  kv.take("weight_mode", [&](const std::string& s) { c.filter.weight_mode = parse_weight_mode(s); });
  kv.real("max_weight", c.filter.max_weight);
  kv.take("pair_policy", [&](const std::string& s) { c.filter.pair_policy = parse_pair_policy(s); });
  kv.integer("window", c.filter.window);
  kv.string("pair_validity", c.pair_validity_file);
  kv.boolean("staircase", c.rotation.staircase);
  kv.integer("max_rank", c.rotation.max_rank);
  kv.integer("max_sweeps", c.rotation.max_sweeps);
  kv.real("rotation_tolerance", c.rotation.relative_tolerance);
  kv.real("staircase_tolerance", c.rotation.staircase_tolerance);
  kv.take("alignment", [&](const std::string& s) { c.alignment = parse_alignment_mode(s); });
  kv.real("trans_tight", c.thresholds.trans_tight);
  kv.real("rot_tight_deg", c.thresholds.rot_tight_deg);
  kv.real("trans_loose", c.thresholds.trans_loose);
  kv.real("rot_loose_deg", c.thresholds.rot_loose_deg);
  kv.finish();
  return c;
}

PairKnobs SynthConfig::knobs() const {
  PairKnobs k = PairKnobs::from_spec(scene);
  if (point_noise_sigma >= 0.0) k.point_noise_sigma = point_noise_sigma;
  if (pair_outlier_fraction >= 0.0) k.outlier_fraction = pair_outlier_fraction;
  return k;
}

std::string format_synth_config(const SynthConfig& c) {
  KeyValueWriter w("hopose synthetic scene");
  const SceneSpec& s = c.scene;
  w.put("n_points", s.n_points);
  w.put("object_shape", to_string(s.object_shape));
  w.put("scene_scale", s.scene_scale);
  w.put("n_views", s.n_views);
  w.put("trajectory", to_string(s.trajectory));
  w.put("focal_min", s.focal_min);
  w.put("focal_max", s.focal_max);
  w.put("width", s.width);
  w.put("height", s.height);
  w.put("depth_noise_sigma", s.depth_noise_sigma);
  w.put("outlier_fraction", s.outlier_fraction);
  w.put("occlusion_fraction", s.occlusion_fraction);
  w.put("seed", s.rng_seed);
  w.put("point_noise_sigma", c.point_noise_sigma);
  w.put("pair_outlier_fraction", c.pair_outlier_fraction);
  w.put("pair_policy", to_string(c.pair_policy));
  w.put("window", c.window);
  return w.str();
}

SynthConfig parse_synth_config(std::string_view text, SynthConfig c) {
  KeyValues kv(text);
  SceneSpec& s = c.scene;
  kv.integer("n_points", s.n_points);
  kv.take("object_shape", [&](const std::string& v) { s.object_shape = parse_object_shape(v); });
  kv.real("scene_scale", s.scene_scale);
  kv.integer("n_views", s.n_views);
  kv.take("trajectory", [&](const std::string& v) { s.trajectory = parse_trajectory(v); });
  kv.real("focal_min", s.focal_min);
  kv.real("focal_max", s.focal_max);
  kv.integer("width", s.width);
  kv.integer("height", s.height);
  kv.real("depth_noise_sigma", s.depth_noise_sigma);
  kv.real("outlier_fraction", s.outlier_fraction);
  kv.real("occlusion_fraction", s.occlusion_fraction);
  kv.integer("seed", s.rng_seed);
  kv.real("point_noise_sigma", c.point_noise_sigma);
  kv.real("pair_outlier_fraction", c.pair_outlier_fraction);
  kv.take("pair_policy", [&](const std::string& v) { c.pair_policy = parse_pair_policy(v); });
  kv.integer("window", c.window);
  kv.finish();
  return c;
}

// ---- solve -----------------------------------------------------------------

SolveOutput solve(int n_frames, const std::vector<std::pair<int, int>>& available,
                  const PairSource& source, const PipelineConfig& cfg) {
  cfg.validate();
  SolveOutput out;
  out.n_frames_total = n_frames;
  auto t0 = Clock::now();

  if (n_frames < 2) {
    throw InsufficientDataError("need at least 2 frames, input has " + std::to_string(n_frames));
  }
  FrameSelection sel;
  if (cfg.n_keep > 0) {
    sel = subsample_frames(n_frames, cfg.n_keep);
    if (sel.clamped) {
      out.warnings.push_back("n_keep " + std::to_string(cfg.n_keep) + " exceeds " +
                             std::to_string(n_frames) + " frames; keeping all");
    }
  } else {
    for (int k = 0; k < n_frames; ++k) sel.indices.push_back(k);
  }
  out.frames = sel.indices;
  const int n_kept = static_cast<int>(out.frames.size());
  if (n_kept < 2) throw InsufficientDataError("fewer than 2 frames after subsampling");
  std::map<int, int> position;
  for (int p = 0; p < n_kept; ++p) position[out.frames[p]] = p;

  EdgeFilterConfig filter = cfg.filter;
  filter.pair_validity.clear();
  for (const auto& [key, ok] : cfg.filter.pair_validity) {
    const auto a = position.find(key.first);
    const auto b = position.find(key.second);
    if (a != position.end() && b != position.end()) {
      filter.pair_validity[std::minmax(a->second, b->second)] = ok;
    }
  }
  out.timings.push_back({"subsample", seconds_since(t0)});

  // Candidate pairs in kept-frame positions, oriented as the source has them.
  t0 = Clock::now();
  const std::set<std::pair<int, int>> have(available.begin(), available.end());
  struct Job {
    int a, b;  // positions
    int fi, fj;
  };
  std::vector<Job> jobs;
  for (const auto& [a, b] : candidate_pairs(n_kept, filter)) {
    const int fa = out.frames[a];
    const int fb = out.frames[b];
    if (have.count({fa, fb})) {
      jobs.push_back({a, b, fa, fb});
    } else if (have.count({fb, fa})) {
      jobs.push_back({b, a, fb, fa});
    }
  }
  out.pairs_attempted = jobs.size();

  std::vector<std::optional<RelativePoseResult>> results(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      const Job& job = jobs[k];
      try {
        const PairData data = source(job.fi, job.fj);
        RansacConfig rc = cfg.ransac;
        rc.rng_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(job.fi),
                               static_cast<std::uint64_t>(job.fj));
        results[k] = relative_pose(data.x11, data.x21, rc);
      } catch (const Error& e) {
        failures[k] = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers = std::min<std::size_t>(
      cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers) : hw, std::max<std::size_t>(1, jobs.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  std::vector<PairMeasurement> measurements;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (results[k]) {
      measurements.push_back({jobs[k].a, jobs[k].b, std::move(*results[k])});
    } else {
      out.warnings.push_back("pair " + pair_name(jobs[k].fi, jobs[k].fj) +
                             " skipped: " + failures[k]);
    }
  }
  out.pairs_solved = measurements.size();
  out.timings.push_back({"pairs", seconds_since(t0)});

  t0 = Clock::now();
  try {
    out.graph = build_graph(measurements, n_kept, filter);
  } catch (const DisconnectedGraphError& e) {
    std::vector<std::vector<int>> frames;
    std::string msg = "pose graph is disconnected; frame components:";
    for (const auto& comp : e.components()) {
      frames.emplace_back();
      msg += " {";
      for (std::size_t k = 0; k < comp.size(); ++k) {
        frames.back().push_back(out.frames[comp[k]]);
        msg += (k ? " " : "") + std::to_string(out.frames[comp[k]]);
      }
      msg += "}";
    }
    throw DisconnectedGraphError(msg, std::move(frames));
  }
  out.timings.push_back({"graph", seconds_since(t0)});

  t0 = Clock::now();
  out.rotation = rotation_averaging(out.graph, cfg.rotation);
  if (out.rotation.monotonicity_violations > 0) {
    out.warnings.push_back("rotation averaging objective increased in " +
                           std::to_string(out.rotation.monotonicity_violations) + " sweeps");
  }
  if (!out.rotation.converged) out.warnings.push_back("rotation averaging hit the sweep limit");
  out.timings.push_back({"rotation", seconds_since(t0)});

  t0 = Clock::now();
  out.translation = translation_averaging(out.graph, out.rotation.rotations);
  if (out.translation.rank_deficient) {
    out.warnings.push_back("translation system is rank deficient; least-norm solution used");
  }
  out.timings.push_back({"translation", seconds_since(t0)});

  t0 = Clock::now();
  const auto active = out.graph.active_vertices();
  out.poses = assemble_global(out.rotation.rotations, out.translation.translations, active);
  for (int p = 0; p < n_kept; ++p) {
    if (!active[p]) {
      out.warnings.push_back("frame " + std::to_string(out.frames[p]) + " not recovered");
    }
  }
  std::vector<Mat3> c2w;
  for (const auto& pose : out.poses.poses) c2w.push_back(pose.rotation().transpose());
  out.sra_objective = rotation_objective(out.graph, c2w);
  out.timings.push_back({"assemble", seconds_since(t0)});
  return out;
}

SolveOutput solve_manifest(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.manifest.empty()) throw ValidationError("manifest: no manifest given");
  const std::filesystem::path manifest_path(cfg.manifest);
  const Manifest m = parse_manifest(read_file(manifest_path));
  const std::filesystem::path base = manifest_path.parent_path();

  for (const auto& p : m.pairs) {
    for (const auto& f : {p.x11, p.x21}) {
      if (!std::filesystem::exists(base / f)) {
        throw IoError("manifest references missing file " + (base / f).string());
      }
    }
  }
  PipelineConfig run = cfg;
  if (!cfg.pair_validity_file.empty()) {
    run.filter.pair_validity = parse_pair_validity(read_file(cfg.pair_validity_file));
  }

  std::map<std::pair<int, int>, const Manifest::Pair*> files;
  std::vector<std::pair<int, int>> available;
  for (const auto& p : m.pairs) {
    if (!files.emplace(std::make_pair(p.i, p.j), &p).second) {
      throw ValidationError("manifest lists pair " + pair_name(p.i, p.j) + " twice");
    }
    available.emplace_back(p.i, p.j);
  }
  PairSource source = [&](int i, int j) {
    const Manifest::Pair* p = files.at({i, j});
    const Pointmap x11 = read_pointmap(base / p->x11).pointmap;
    const Pointmap x21 = read_pointmap(base / p->x21).pointmap;
    if (x11.width() != x21.width() || x11.height() != x21.height()) {
      throw ShapeError("pointmaps of one pair differ in size");
    }
    return PairData{x11, x21};
  };
  SolveOutput out = solve(m.n_frames, available, source, run);
  if (!m.gt_poses.empty()) {
    const GlobalPoses gt = parse_poses(read_file(base / m.gt_poses));
    if (static_cast<int>(gt.size()) != m.n_frames) {
      throw ShapeError("ground-truth poses list " + std::to_string(gt.size()) + " frames, manifest " +
                       std::to_string(m.n_frames));
    }
    out.truth = select_frames(gt, out.frames);
  }
  return out;
}

std::string format_run_log(const SolveOutput& out) {
  std::string s = "# hopose run log\n";
  auto kv = [&](const std::string& key, const std::string& value) {
    s += key + " " + value + "\n";
  };
  kv("frames_total", std::to_string(out.n_frames_total));
  kv("frames_kept", std::to_string(out.frames.size()));
  std::string kept;
  for (std::size_t k = 0; k < out.frames.size(); ++k) {
    kept += (k ? " " : "") + std::to_string(out.frames[k]);
  }
  kv("kept_frames", kept);
  std::size_t recovered = 0;
  for (auto r : out.poses.recovered) recovered += r ? 1 : 0;
  kv("frames_recovered", std::to_string(recovered));
  kv("pairs_attempted", std::to_string(out.pairs_attempted));
  kv("pairs_solved", std::to_string(out.pairs_solved));
  std::size_t rescued = 0;
  for (const auto& e : out.graph.edges()) rescued += e.rescued ? 1 : 0;
  kv("edges", std::to_string(out.graph.edges().size()));
  kv("rescued_edges", std::to_string(rescued));
  kv("sra_objective", format_double(out.sra_objective));
  kv("chordal_objective", format_double(out.rotation.chordal_objective));
  kv("rotation_sweeps", std::to_string(out.rotation.sweeps));
  kv("rotation_converged", out.rotation.converged ? "1" : "0");
  kv("monotonicity_violations", std::to_string(out.rotation.monotonicity_violations));
  kv("accepted_rank", std::to_string(out.rotation.accepted_rank));
  kv("translation_residual", format_double(out.translation.relative_residual));
  kv("rank_deficient", out.translation.rank_deficient ? "1" : "0");
  for (const auto& t : out.timings) kv("stage_seconds", t.stage + " " + format_double(t.seconds));
  for (const auto& w : out.warnings) kv("warning", w);
  return s;
}

void write_solve_outputs(const SolveOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "poses.txt", format_poses(out.poses));
  write_file(dir / "graph.txt", format_graph(out.graph));
  write_file(dir / "run.log", format_run_log(out));
  if (out.truth) write_file(dir / "gt_poses.txt", format_poses(*out.truth));
}

// ---- scenes ----------------------------------------------------------------

PairSource scene_source(const SceneBundle& bundle, const PairKnobs& knobs) {
  return [&bundle, knobs](int i, int j) {
    PointmapPair p = make_pair_pointmaps(bundle, i, j, knobs);
    return PairData{std::move(p.x11), std::move(p.x21)};
  };
}

GlobalPoses scene_poses(const SceneBundle& bundle) {
  GlobalPoses out;
  for (const auto& v : bundle.views) {
    out.poses.push_back(v.pose);
    out.recovered.push_back(1);
  }
  return out;
}

GlobalPoses select_frames(const GlobalPoses& poses, const std::vector<int>& frames) {
  GlobalPoses out;
  for (int f : frames) {
    if (f < 0 || static_cast<std::size_t>(f) >= poses.size()) {
      throw ShapeError("frame " + std::to_string(f) + " out of range");
    }
    out.poses.push_back(poses.poses[f]);
    out.recovered.push_back(poses.recovered[f]);
  }
  return out;
}

void write_scene(const SceneBundle& bundle, const SynthConfig& cfg,
                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  char name[64];
  Manifest m;
  m.width = bundle.spec.width;
  m.height = bundle.spec.height;
  m.n_frames = static_cast<int>(bundle.views.size());
  m.gt_poses = "gt_poses.txt";
  write_file(dir / m.gt_poses, format_poses(scene_poses(bundle)));
  write_file(dir / "scene.cfg", format_synth_config(cfg));
  for (int v = 0; v < m.n_frames; ++v) {
    std::snprintf(name, sizeof name, "depth_%03d.dmap", v);
    write_depth(dir / name, bundle.views[v].depth);
    m.views.push_back({v, name});
  }
  EdgeFilterConfig policy;
  policy.pair_policy = cfg.pair_policy;
  policy.window = cfg.window;
  const PairKnobs knobs = cfg.knobs();
  for (const auto& [i, j] : candidate_pairs(m.n_frames, policy)) {
    const PointmapPair p = make_pair_pointmaps(bundle, i, j, knobs);
    Manifest::Pair entry{i, j, "", ""};
    std::snprintf(name, sizeof name, "pair_%03d_%03d_x11.pmap", i, j);
    entry.x11 = name;
    std::snprintf(name, sizeof name, "pair_%03d_%03d_x21.pmap", i, j);
    entry.x21 = name;
    write_pointmap(dir / entry.x11, {p.x11, true, true});
    write_pointmap(dir / entry.x21, {p.x21, true, true});
    m.pairs.push_back(std::move(entry));
  }
  write_file(dir / "manifest.txt", format_manifest(m));
}

// ---- errors ----------------------------------------------------------------

int exit_code(const std::exception& e) {
  if (dynamic_cast<const DisconnectedGraphError*>(&e)) return 4;
  if (dynamic_cast<const InsufficientDataError*>(&e) || dynamic_cast<const NoPoseFoundError*>(&e) ||
      dynamic_cast<const EmptyDomainError*>(&e) || dynamic_cast<const DegenerateScaleError*>(&e) ||
      dynamic_cast<const AlignmentError*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const IoError*>(&e)) return 5;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return 2;
  return 1;
}

}  // namespace hopose
