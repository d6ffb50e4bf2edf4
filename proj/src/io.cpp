#include "hopose/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "hopose/errors.hpp"

namespace hopose {

namespace {

constexpr std::string_view kPointmapMagic = "PMAP1";
constexpr std::string_view kDepthMagic = "DMAP1";
constexpr std::uint32_t kFlagConfidence = 1u;
constexpr std::uint32_t kFlagMask = 2u;
constexpr std::size_t kHeaderSize = 5 + 3 * 4;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

void put_f32(std::string& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedFileError("truncated file: need " + std::to_string(n) + " more bytes",
                               bytes_.size());
    }
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }

  void magic(std::string_view expected) {
    const std::size_t n = std::min(expected.size(), bytes_.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (bytes_[k] != expected[k]) {
        throw BadMagicError("bad magic, expected " + std::string(expected), k);
      }
    }
    need(expected.size());
    pos_ = expected.size();
  }

  void finish() const {
    if (pos_ != bytes_.size()) {
      throw InvalidValueError(std::to_string(bytes_.size() - pos_) + " trailing bytes", pos_);
    }
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct Dims {
  std::uint32_t width;
  std::uint32_t height;
  std::uint32_t flags;
  std::size_t pixels;
};

Dims read_header(Reader& in, std::string_view magic) {
  in.magic(magic);
  Dims d{};
  const std::size_t at = in.offset();
  d.width = in.u32();
  d.height = in.u32();
  if (d.width == 0 || d.height == 0 || d.width > (1u << 20) || d.height > (1u << 20)) {
    throw InvalidValueError("image size out of range", at);
  }
  d.pixels = static_cast<std::size_t>(d.width) * d.height;
  d.flags = in.u32();
  return d;
}

// ---- text helpers ----------------------------------------------------------

struct Line {
  std::size_t number;
  std::vector<std::string_view> tokens;
};

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> out;
  std::size_t number = 0;
  while (!text.empty()) {
    ++number;
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    Line l{number, {}};
    std::size_t k = 0;
    while (k < line.size()) {
      while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
      const std::size_t start = k;
      while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
      if (k > start) l.tokens.push_back(line.substr(start, k - start));
    }
    if (!l.tokens.empty()) out.push_back(std::move(l));
  }
  return out;
}

void expect_count(const Line& l, std::size_t n) {
  if (l.tokens.size() != n) {
    throw ParseError("'" + std::string(l.tokens[0]) + "' expects " + std::to_string(n - 1) +
                         " fields, got " + std::to_string(l.tokens.size() - 1),
                     l.number);
  }
}

double number(const Line& l, std::size_t k) {
  const auto v = parse_double(l.tokens[k]);
  if (!v) throw ParseError("bad number '" + std::string(l.tokens[k]) + "'", l.number);
  return *v;
}

double finite_number(const Line& l, std::size_t k) {
  const double v = number(l, k);
  if (!std::isfinite(v)) throw InvalidValueError("non-finite value", l.number);
  return v;
}

long integer(const Line& l, std::size_t k) {
  long v = 0;
  const auto tok = l.tokens[k];
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("bad integer '" + std::string(tok) + "'", l.number);
  }
  return v;
}

int index_field(const Line& l, std::size_t k) {
  const long v = integer(l, k);
  if (v < 0 || v > (1L << 30)) throw InvalidValueError("index out of range", l.number);
  return static_cast<int>(v);
}

bool flag(const Line& l, std::size_t k) {
  const long v = integer(l, k);
  if (v != 0 && v != 1) throw InvalidValueError("flag must be 0 or 1", l.number);
  return v == 1;
}

[[noreturn]] void unknown(const Line& l) {
  throw ParseError("unknown record '" + std::string(l.tokens[0]) + "'", l.number);
}

void append(std::string& out, double v) {
  out += ' ';
  out += format_double(v);
}

}  // namespace

// ---- binary ----------------------------------------------------------------

std::string encode_pointmap(const PointmapFile& file) {
  const Pointmap& pm = file.pointmap;
  if (!file.has_mask && pm.valid_count() != pm.size()) {
    throw ValidationError("pointmap has masked pixels but the file would carry no mask");
  }
  std::string out;
  out.reserve(kHeaderSize + pm.size() * 17);
  out += kPointmapMagic;
  put_u32(out, static_cast<std::uint32_t>(pm.width()));
  put_u32(out, static_cast<std::uint32_t>(pm.height()));
  put_u32(out, (file.has_confidence ? kFlagConfidence : 0u) | (file.has_mask ? kFlagMask : 0u));
  for (std::size_t k = 0; k < pm.size(); ++k) {
    const Vec3& p = pm.point(k);
    if (pm.valid(k)) {
      for (int a = 0; a < 3; ++a) {
        if (!std::isfinite(static_cast<float>(p[a]))) {
          throw ValidationError("non-finite point in valid pixel " + std::to_string(k));
        }
      }
    }
    for (int a = 0; a < 3; ++a) put_f32(out, p[a]);
  }
  if (file.has_confidence) {
    for (double c : pm.confidences()) {
      const float f = static_cast<float>(c);
      if (!(f > 0.0f) || !std::isfinite(f)) {
        throw ValidationError("confidence not representable as positive float32");
      }
      put_f32(out, c);
    }
  }
  if (file.has_mask) {
    for (std::uint8_t m : pm.mask()) out.push_back(static_cast<char>(m ? 1 : 0));
  }
  return out;
}

PointmapFile decode_pointmap(std::string_view bytes) {
  Reader in(bytes);
  const Dims d = read_header(in, kPointmapMagic);
  if (d.flags & ~(kFlagConfidence | kFlagMask)) {
    throw InvalidValueError("unknown flag bits", kHeaderSize - 4);
  }
  const bool has_conf = d.flags & kFlagConfidence;
  const bool has_mask = d.flags & kFlagMask;
  in.need(d.pixels * (12 + (has_conf ? 4 : 0) + (has_mask ? 1 : 0)));

  const std::size_t points_at = in.offset();
  std::vector<Vec3> points(d.pixels);
  for (auto& p : points) {
    for (int a = 0; a < 3; ++a) p[a] = in.f32();
  }
  std::vector<double> conf;
  if (has_conf) {
    conf.resize(d.pixels);
    for (std::size_t k = 0; k < d.pixels; ++k) {
      const std::size_t at = in.offset();
      const float c = in.f32();
      if (!(c > 0.0f) || !std::isfinite(c)) {
        throw InvalidValueError("confidence must be positive and finite", at);
      }
      conf[k] = c;
    }
  }
  std::vector<std::uint8_t> mask(d.pixels, 1);
  if (has_mask) {
    for (auto& m : mask) {
      const std::size_t at = in.offset();
      m = in.u8();
      if (m > 1) throw InvalidValueError("mask byte must be 0 or 1", at);
    }
  }
  in.finish();
  for (std::size_t k = 0; k < d.pixels; ++k) {
    if (mask[k] && !points[k].allFinite()) {
      std::size_t at = points_at + 12 * k;
      for (int a = 0; a < 3 && std::isfinite(points[k][a]); ++a) at += 4;
      throw InvalidValueError("non-finite value in valid pixel", at);
    }
  }
  return {Pointmap(static_cast<int>(d.width), static_cast<int>(d.height), std::move(points),
                   std::move(conf), std::move(mask)),
          has_conf, has_mask};
}

std::string encode_depth(const DepthMap& depth) {
  std::string out;
  out.reserve(kHeaderSize + depth.size() * 4);
  out += kDepthMagic;
  put_u32(out, static_cast<std::uint32_t>(depth.width()));
  put_u32(out, static_cast<std::uint32_t>(depth.height()));
  put_u32(out, 0u);
  for (double v : depth.depths()) {
    if (!std::isfinite(static_cast<float>(v))) {
      throw ValidationError("depth not representable as float32");
    }
    put_f32(out, v);
  }
  return out;
}

DepthMap decode_depth(std::string_view bytes) {
  Reader in(bytes);
  const Dims d = read_header(in, kDepthMagic);
  if (d.flags != 0) throw InvalidValueError("depth files carry no flags", kHeaderSize - 4);
  in.need(d.pixels * 4);
  std::vector<double> depth(d.pixels);
  for (auto& v : depth) {
    const std::size_t at = in.offset();
    const float f = in.f32();
    if (!(f >= 0.0f) || !std::isfinite(f)) {
      throw InvalidValueError("depth must be finite and non-negative", at);
    }
    v = f;
  }
  in.finish();
  return DepthMap(static_cast<int>(d.width), static_cast<int>(d.height), std::move(depth));
}

// ---- numbers ---------------------------------------------------------------

std::string format_double(double v) {
  std::array<char, 64> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::optional<double> parse_double(std::string_view token) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    return std::nullopt;
  }
  return v;
}

// ---- poses -----------------------------------------------------------------

std::string format_poses(const GlobalPoses& poses) {
  std::string out = "# hopose poses: frame <id> <recovered> <4x4 world-to-camera, row-major>\n";
  out += "frames " + std::to_string(poses.size()) + "\n";
  for (std::size_t k = 0; k < poses.size(); ++k) {
    out += "frame " + std::to_string(k) + (poses.recovered[k] ? " 1" : " 0");
    const Mat4 m = poses.poses[k].matrix();
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) append(out, m(r, c));
    }
    out += '\n';
  }
  return out;
}

GlobalPoses parse_poses(std::string_view text) {
  GlobalPoses out;
  std::optional<std::size_t> declared;
  for (const Line& l : tokenize(text)) {
    if (l.tokens[0] == "frames") {
      expect_count(l, 2);
      if (declared) throw ParseError("duplicate 'frames'", l.number);
      declared = static_cast<std::size_t>(index_field(l, 1));
    } else if (l.tokens[0] == "frame") {
      expect_count(l, 19);
      if (!declared) throw ParseError("'frame' before 'frames'", l.number);
      if (static_cast<std::size_t>(index_field(l, 1)) != out.size()) {
        throw InvalidValueError("frames must be listed as 0, 1, 2, ...", l.number);
      }
      const bool recovered = flag(l, 2);
      Mat4 m;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m(r, c) = finite_number(l, 3 + 4 * r + c);
      }
      if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
        throw InvalidValueError("last matrix row must be 0 0 0 1", l.number);
      }
      try {
        out.poses.emplace_back(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
      } catch (const ValidationError& e) {
        throw InvalidValueError(e.what(), l.number);
      }
      out.recovered.push_back(recovered ? 1 : 0);
    } else {
      unknown(l);
    }
  }
  if (!declared) throw ParseError("missing 'frames'", 0);
  if (*declared != out.size()) {
    throw InvalidValueError("'frames' says " + std::to_string(*declared) + " but " +
                                std::to_string(out.size()) + " are listed",
                            0);
  }
  return out;
}

// ---- graph -----------------------------------------------------------------

std::string format_graph(const PoseGraph& graph) {
  std::string out =
      "# hopose pose graph: edge i j <R row-major> <t> weight quality\n"
      "# the pose of camera j in camera i's frame (camera-to-world convention)\n";
  out += "vertices " + std::to_string(graph.vertex_count()) + "\n";
  std::string rescued;
  for (const auto& e : graph.edges()) {
    out += "edge " + std::to_string(e.i) + " " + std::to_string(e.j);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) append(out, e.rotation(r, c));
    }
    for (int a = 0; a < 3; ++a) append(out, e.translation[a]);
    append(out, e.weight);
    append(out, e.quality);
    out += '\n';
    if (e.rescued) rescued += "rescued " + std::to_string(e.i) + " " + std::to_string(e.j) + "\n";
  }
  return out + rescued;
}

PoseGraph parse_graph(std::string_view text) {
  std::optional<int> n;
  std::vector<PoseEdge> edges;
  std::size_t last_line = 0;
  for (const Line& l : tokenize(text)) {
    last_line = l.number;
    if (l.tokens[0] == "vertices") {
      expect_count(l, 2);
      if (n) throw ParseError("duplicate 'vertices'", l.number);
      n = index_field(l, 1);
    } else if (l.tokens[0] == "edge") {
      expect_count(l, 17);
      PoseEdge e;
      e.i = index_field(l, 1);
      e.j = index_field(l, 2);
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) e.rotation(r, c) = finite_number(l, 3 + 3 * r + c);
      }
      for (int a = 0; a < 3; ++a) e.translation[a] = finite_number(l, 12 + a);
      e.weight = finite_number(l, 15);
      e.quality = finite_number(l, 16);
      edges.push_back(e);
    } else if (l.tokens[0] == "rescued") {
      expect_count(l, 3);
      const int i = index_field(l, 1);
      const int j = index_field(l, 2);
      auto it = std::find_if(edges.begin(), edges.end(),
                             [&](const PoseEdge& e) { return e.i == i && e.j == j; });
      if (it == edges.end()) throw InvalidValueError("'rescued' names no listed edge", l.number);
      it->rescued = true;
    } else {
      unknown(l);
    }
  }
  if (!n) throw ParseError("missing 'vertices'", 0);
  try {
    return PoseGraph(*n, std::move(edges));
  } catch (const Error& e) {
    throw InvalidValueError(e.what(), last_line);
  }
}

// ---- report ----------------------------------------------------------------

std::string format_report(const SequenceReport& r) {
  std::string out = "# hopose sequence report\n";
  auto kv = [&](const char* key, const std::string& value) {
    out += key;
    out += ' ';
    out += value;
    out += '\n';
  };
  kv("rot_error_deg", format_double(r.rot_error_deg));
  kv("trans_error", format_double(r.trans_error));
  kv("trans_rmse", format_double(r.trans_rmse));
  kv("det_rate_pct", format_double(r.det_rate_pct));
  kv("acc_15_15_pct", format_double(r.acc_15_15_pct));
  kv("acc_30_30_pct", format_double(r.acc_30_30_pct));
  kv("n_frames", std::to_string(r.n_frames));
  kv("n_recovered", std::to_string(r.n_recovered));
  kv("partial", r.partial ? "1" : "0");
  kv("rotation_only", r.rotation_only ? "1" : "0");
  return out;
}

SequenceReport parse_report(std::string_view text) {
  SequenceReport r;
  const std::map<std::string_view, double SequenceReport::*> reals = {
      {"rot_error_deg", &SequenceReport::rot_error_deg},
      {"trans_error", &SequenceReport::trans_error},
      {"trans_rmse", &SequenceReport::trans_rmse},
      {"det_rate_pct", &SequenceReport::det_rate_pct},
      {"acc_15_15_pct", &SequenceReport::acc_15_15_pct},
      {"acc_30_30_pct", &SequenceReport::acc_30_30_pct}};
  const std::map<std::string_view, std::size_t SequenceReport::*> counts = {
      {"n_frames", &SequenceReport::n_frames}, {"n_recovered", &SequenceReport::n_recovered}};
  const std::map<std::string_view, bool SequenceReport::*> flags = {
      {"partial", &SequenceReport::partial}, {"rotation_only", &SequenceReport::rotation_only}};
  std::set<std::string_view> seen;
  for (const Line& l : tokenize(text)) {
    expect_count(l, 2);
    const std::string_view key = l.tokens[0];
    if (!seen.insert(key).second) throw ParseError("duplicate key", l.number);
    if (auto it = reals.find(key); it != reals.end()) {
      r.*(it->second) = number(l, 1);
    } else if (auto ic = counts.find(key); ic != counts.end()) {
      r.*(ic->second) = static_cast<std::size_t>(index_field(l, 1));
    } else if (auto ib = flags.find(key); ib != flags.end()) {
      r.*(ib->second) = flag(l, 1);
    } else {
      unknown(l);
    }
  }
  if (seen.size() != reals.size() + counts.size() + flags.size()) {
    throw ParseError("report is missing keys", 0);
  }
  return r;
}

// ---- pair validity ---------------------------------------------------------

std::map<std::pair<int, int>, bool> parse_pair_validity(std::string_view text) {
  std::map<std::pair<int, int>, bool> out;
  for (const Line& l : tokenize(text)) {
    if (l.tokens.size() != 3) throw ParseError("expected 'i j 0|1'", l.number);
    const int i = index_field(l, 0);
    const int j = index_field(l, 1);
    if (i == j) throw InvalidValueError("pair of a frame with itself", l.number);
    if (!out.emplace(std::minmax(i, j), flag(l, 2)).second) {
      throw InvalidValueError("pair listed twice", l.number);
    }
  }
  return out;
}

std::string format_pair_validity(const std::map<std::pair<int, int>, bool>& verdicts) {
  std::string out = "# i j valid\n";
  for (const auto& [key, ok] : verdicts) {
    out += std::to_string(key.first) + " " + std::to_string(key.second) + (ok ? " 1\n" : " 0\n");
  }
  return out;
}

// ---- manifest --------------------------------------------------------------

std::string format_manifest(const Manifest& m) {
  std::ostringstream out;
  out << "# hopose manifest; paths are relative to this file\n";
  out << "image_size " << m.width << ' ' << m.height << '\n';
  out << "frames " << m.n_frames << '\n';
  if (!m.gt_poses.empty()) out << "gt_poses " << m.gt_poses << '\n';
  for (const auto& v : m.views) out << "view " << v.frame << ' ' << v.depth << '\n';
  for (const auto& p : m.pairs) {
    out << "pair " << p.i << ' ' << p.j << ' ' << p.x11 << ' ' << p.x21 << '\n';
  }
  return out.str();
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  for (const Line& l : tokenize(text)) {
    const auto key = l.tokens[0];
    if (key == "image_size") {
      expect_count(l, 3);
      m.width = index_field(l, 1);
      m.height = index_field(l, 2);
    } else if (key == "frames") {
      expect_count(l, 2);
      m.n_frames = index_field(l, 1);
    } else if (key == "gt_poses") {
      expect_count(l, 2);
      m.gt_poses = l.tokens[1];
    } else if (key == "view") {
      expect_count(l, 3);
      m.views.push_back({index_field(l, 1), std::string(l.tokens[2])});
    } else if (key == "pair") {
      expect_count(l, 5);
      Manifest::Pair p{index_field(l, 1), index_field(l, 2), std::string(l.tokens[3]),
                       std::string(l.tokens[4])};
      if (p.i == p.j) throw InvalidValueError("pair of a frame with itself", l.number);
      m.pairs.push_back(std::move(p));
    } else {
      unknown(l);
    }
  }
  for (const auto& p : m.pairs) {
    if (p.i >= m.n_frames || p.j >= m.n_frames) {
      throw InvalidValueError("pair (" + std::to_string(p.i) + ", " + std::to_string(p.j) +
                                  ") exceeds the frame count",
                              0);
    }
  }
  return m;
}

// ---- files -----------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
}

PointmapFile read_pointmap(const std::filesystem::path& path) {
  return decode_pointmap(read_file(path));
}

void write_pointmap(const std::filesystem::path& path, const PointmapFile& file) {
  write_file(path, encode_pointmap(file));
}

DepthMap read_depth(const std::filesystem::path& path) { return decode_depth(read_file(path)); }

void write_depth(const std::filesystem::path& path, const DepthMap& depth) {
  write_file(path, encode_depth(depth));
}

}  // namespace hopose
