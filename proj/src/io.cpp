#include "cyldepth/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cyldepth/error.hpp"

namespace cyldepth::io {

using nlohmann::json;

// ---------------------------------------------------------------- files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      throw IoError("short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

// ---------------------------------------------------------------- netpbm

namespace {

// Cursor over a netpbm-style header: tokens separated by whitespace, '#'
// comments allowed only where `comments` is set.
class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, std::string format) : bytes_(bytes), format_(std::move(format)) {}

  std::string token(const char* what, bool comments = false) {
    skip_space(comments);
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) fail(std::string("missing ") + what);
    return bytes_.substr(start, pos_ - start);
  }

  long integer(const char* what, bool comments = false) {
    const std::string t = token(what, comments);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (*end != '\0' || v <= 0) fail(std::string("bad ") + what + " '" + t + "'");
    return v;
  }

  // The header ends with exactly one whitespace character.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      fail("header not terminated by whitespace");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& why) const { throw FormatError(format_ + ": " + why); }

 private:
  void skip_space(bool comments) {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (comments && c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::string format_;
  std::size_t pos_ = 0;
};

void put_f32_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

float get_f32_le(const char* p) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[k])) << (8 * k);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string encode_pfm(const Raster& raster) {
  if (raster.channels() != 1 && raster.channels() != 3)
    throw FormatError("PFM stores 1 or 3 channels, got " + std::to_string(raster.channels()));
  std::string out = raster.channels() == 1 ? "Pf\n" : "PF\n";
  out += std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n-1.0\n";
  out.reserve(out.size() + raster.data().size() * 4);
  for (int y = raster.height() - 1; y >= 0; --y)
    for (int x = 0; x < raster.width(); ++x)
      for (int c = 0; c < raster.channels(); ++c) put_f32_le(out, static_cast<float>(raster(x, y, c)));
  return out;
}

Raster decode_pfm(const std::string& bytes) {
  HeaderReader header(bytes, "PFM");
  const std::string magic = header.token("magic");
  int channels = 0;
  if (magic == "Pf") channels = 1;
  else if (magic == "PF") channels = 3;
  else header.fail("unknown magic '" + magic + "'");
  const long width = header.integer("width");
  const long height = header.integer("height");
  const std::string scale_text = header.token("scale");
  char* end = nullptr;
  const double scale = std::strtod(scale_text.c_str(), &end);
  if (*end != '\0' || !std::isfinite(scale) || scale == 0.0) header.fail("bad scale '" + scale_text + "'");
  if (scale > 0.0) header.fail("big-endian data (positive scale) is not supported");
  const std::size_t start = header.payload_start();

  const std::size_t expected = static_cast<std::size_t>(width) * height * channels * 4;
  const std::size_t available = bytes.size() - start;
  if (available < expected)
    header.fail("truncated payload: expected " + std::to_string(expected) + " bytes, found " +
                std::to_string(available));
  if (available > expected) header.fail("unexpected trailing bytes after the payload");

  Raster raster(static_cast<int>(width), static_cast<int>(height), channels);
  const char* p = bytes.data() + start;
  for (int y = raster.height() - 1; y >= 0; --y)
    for (int x = 0; x < raster.width(); ++x)
      for (int c = 0; c < channels; ++c, p += 4) raster(x, y, c) = get_f32_le(p);
  return raster;
}

std::string encode_ppm(const Raster& raster) {
  if (raster.channels() != 3) throw FormatError("PPM stores 3 channels, got " + std::to_string(raster.channels()));
  std::string out = "P6\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n";
  for (double v : raster.data()) {
    const double q = std::isfinite(v) ? std::round(std::clamp(v, 0.0, 1.0) * 255.0) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  return out;
}

Raster decode_ppm(const std::string& bytes) {
  HeaderReader header(bytes, "PPM");
  const std::string magic = header.token("magic");
  if (magic != "P6") header.fail("unsupported magic '" + magic + "' (only binary P6)");
  const long width = header.integer("width", true);
  const long height = header.integer("height", true);
  const long maxval = header.integer("maxval", true);
  if (maxval != 255) header.fail("only maxval 255 is supported, got " + std::to_string(maxval));
  const std::size_t start = header.payload_start();
  const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
  const std::size_t available = bytes.size() - start;
  if (available < expected)
    header.fail("truncated payload: expected " + std::to_string(expected) + " bytes, found " +
                std::to_string(available));
  if (available > expected) header.fail("unexpected trailing bytes after the payload");
  Raster raster(static_cast<int>(width), static_cast<int>(height), 3);
  auto data = raster.data();
  for (std::size_t i = 0; i < expected; ++i)
    data[i] = static_cast<unsigned char>(bytes[start + i]) / 255.0;
  return raster;
}

Raster read_pfm(const std::filesystem::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}
void write_pfm(const std::filesystem::path& path, const Raster& raster) { write_file_atomic(path, encode_pfm(raster)); }

Raster read_ppm(const std::filesystem::path& path) {
  try {
    return decode_ppm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}
void write_ppm(const std::filesystem::path& path, const Raster& raster) { write_file_atomic(path, encode_ppm(raster)); }

Raster read_raster(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".ppm") return read_ppm(path);
  throw FormatError(path.string() + ": unknown raster extension '" + ext + "'");
}

void write_raster(const std::filesystem::path& path, const Raster& raster) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return write_pfm(path, raster);
  if (ext == ".ppm") return write_ppm(path, raster);
  throw FormatError(path.string() + ": unknown raster extension '" + ext + "'");
}

DepthMap read_depth(const std::filesystem::path& path) {
  const Raster r = read_pfm(path);
  if (r.channels() != 1) throw FormatError(path.string() + ": depth must be a 1-channel PFM");
  Grid<double> values(r.width(), r.height());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = r.data()[i];
  return DepthMap::from_values(std::move(values));
}

void write_depth(const std::filesystem::path& path, const DepthMap& depth) {
  Raster r(depth.width(), depth.height(), 1);
  for (std::size_t i = 0; i < depth.values.size(); ++i) r.data()[i] = depth.valid[i] ? depth.values[i] : 0.0;
  write_pfm(path, r);
}

FeatureMap read_features(const std::filesystem::path& path, int plane_height) {
  const Raster r = read_pfm(path);
  if (r.channels() != 1) throw FormatError(path.string() + ": feature files are 1-channel PFM planes");
  if (plane_height <= 0 || r.height() % plane_height != 0)
    throw DimensionError(path.string() + ": height " + std::to_string(r.height()) +
                         " is not a multiple of the feature plane height " + std::to_string(plane_height));
  const int channels = r.height() / plane_height;
  FeatureMap f(r.width(), plane_height, channels);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < plane_height; ++y)
      for (int x = 0; x < r.width(); ++x) f(x, y, c) = r(x, c * plane_height + y);
  return f;
}

void write_features(const std::filesystem::path& path, const FeatureMap& features) {
  Raster r(features.width(), features.height() * features.channels(), 1);
  for (int c = 0; c < features.channels(); ++c)
    for (int y = 0; y < features.height(); ++y)
      for (int x = 0; x < features.width(); ++x) r(x, c * features.height() + y) = features(x, y, c);
  write_pfm(path, r);
}

// ---------------------------------------------------------------- json

namespace {

// Walks a JSON object while tracking the field path for diagnostics.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& why) const { throw SchemaError((path_.empty() ? "<root>" : path_) + ": " + why); }

  void expect_object(const std::set<std::string>& allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [key, _] : j_.items())
      if (!allowed.count(key)) child_path_fail(key, "unknown field");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Node operator[](const std::string& key) const {
    if (!j_.contains(key)) child_path_fail(key, "missing field");
    return Node(j_.at(key), join(key));
  }

  Node at(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<int>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected a boolean");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::size_t array_size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  template <int N>
  Eigen::Matrix<double, N, 1> vec() const {
    if (array_size() != N) fail("expected " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> v;
    for (int k = 0; k < N; ++k) v[k] = at(k).number();
    return v;
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[noreturn]] void child_path_fail(const std::string& key, const std::string& why) const {
    throw SchemaError(join(key) + ": " + why);
  }

  const json& j_;
  std::string path_;
};

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

json pose_json(const Pose& pose) {
  const Eigen::Matrix4d m = pose.matrix();
  json arr = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) arr.push_back(m(r, c));
  return arr;
}

Pose pose_from(const Node& n) {
  if (n.array_size() != 16) n.fail("expected 16 numbers (row-major 4x4)");
  Eigen::Matrix4d m;
  for (int k = 0; k < 16; ++k) m(k / 4, k % 4) = n.at(static_cast<std::size_t>(k)).number();
  try {
    return Pose::from_matrix(m);
  } catch (const ParameterError& e) {
    throw ParameterError(n.path() + ": invalid pose: " + e.what());
  }
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json rig_json(const CameraRig& rig) {
  json cams = json::array();
  for (std::size_t k = 0; k < rig.size(); ++k) {
    const auto& c = rig.cameras[k];
    cams.push_back({{"name", c.name},
                    {"fx", c.intrinsics.fx},
                    {"fy", c.intrinsics.fy},
                    {"cx", c.intrinsics.cx},
                    {"cy", c.intrinsics.cy},
                    {"width", c.intrinsics.width},
                    {"height", c.intrinsics.height},
                    {"cam_to_ref", pose_json(c.cam_to_ref)},
                    {"front", k == rig.front}});
  }
  return {{"version", kRigSchemaVersion}, {"cylinder_center", vec_json(rig.cylinder_center)}, {"cameras", cams}};
}

CameraRig rig_from(const Node& root) {
  root.expect_object({"version", "cylinder_center", "cameras"});
  const int version = root["version"].integer();
  if (version != kRigSchemaVersion) root["version"].fail("unsupported schema version " + std::to_string(version));
  CameraRig rig;
  if (root.has("cylinder_center")) rig.cylinder_center = root["cylinder_center"].vec<3>();
  const Node cams = root["cameras"];
  const std::size_t n = cams.array_size();
  if (n == 0) cams.fail("rig has no cameras");
  std::vector<std::string> fronts;
  std::set<std::string> names;
  for (std::size_t k = 0; k < n; ++k) {
    const Node c = cams.at(k);
    c.expect_object({"name", "fx", "fy", "cx", "cy", "width", "height", "cam_to_ref", "front"});
    Camera cam;
    cam.name = c["name"].string();
    if (cam.name.empty()) c["name"].fail("camera name must not be empty");
    if (!names.insert(cam.name).second) c["name"].fail("duplicate camera name '" + cam.name + "'");
    cam.intrinsics = {c["fx"].number(), c["fy"].number(), c["cx"].number(),
                      c["cy"].number(), c["width"].integer(), c["height"].integer()};
    try {
      cam.intrinsics.validate();
    } catch (const ParameterError& e) {
      c.fail(e.what());
    }
    cam.cam_to_ref = pose_from(c["cam_to_ref"]);
    if (c.has("front") && c["front"].boolean()) {
      fronts.push_back(cam.name);
      rig.front = k;
    }
    rig.cameras.push_back(std::move(cam));
  }
  if (fronts.size() != 1) {
    std::string msg = "exactly one camera must be flagged front, found " + std::to_string(fronts.size());
    for (std::size_t k = 0; k < fronts.size(); ++k) msg += (k == 0 ? ": '" : ", '") + fronts[k] + "'";
    cams.fail(msg);
  }
  return rig;
}

const char* texture_kind_name(TextureKind k) {
  switch (k) {
    case TextureKind::checker: return "checker";
    case TextureKind::stripes: return "stripes";
    case TextureKind::flat: return "flat";
  }
  return "flat";
}

Texture texture_from(const Node& n) {
  n.expect_object({"kind", "frequency", "contrast", "color", "fade_distance"});
  Texture t;
  if (n.has("kind")) {
    const std::string kind = n["kind"].string();
    if (kind == "checker") t.kind = TextureKind::checker;
    else if (kind == "stripes") t.kind = TextureKind::stripes;
    else if (kind == "flat") t.kind = TextureKind::flat;
    else n["kind"].fail("unknown texture kind '" + kind + "'");
  }
  if (n.has("frequency")) t.frequency = n["frequency"].number();
  if (n.has("contrast")) t.contrast = n["contrast"].number();
  if (n.has("color")) t.color = n["color"].vec<3>();
  if (n.has("fade_distance")) t.fade_distance = n["fade_distance"].number();
  return t;
}

json texture_json(const Texture& t) {
  json j = {{"kind", texture_kind_name(t.kind)},
            {"frequency", t.frequency},
            {"contrast", t.contrast},
            {"color", vec_json(t.color)}};
  if (std::isfinite(t.fade_distance)) j["fade_distance"] = t.fade_distance;
  return j;
}

}  // namespace

std::string encode_rig(const CameraRig& rig) { return rig_json(rig).dump(2) + "\n"; }

CameraRig decode_rig(const std::string& text) {
  const json j = parse_json(text, "rig file");
  return rig_from(Node(j, ""));
}

CameraRig read_rig(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return decode_rig(text);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
}

void write_rig(const std::filesystem::path& path, const CameraRig& rig) {
  rig.validate();
  write_file_atomic(path, encode_rig(rig));
}

Pose read_pose(const std::filesystem::path& path) {
  const json j = parse_json(read_file(path), "pose file");
  const Node root(j, "");
  root.expect_object({"version", "matrix"});
  if (root["version"].integer() != 1) root["version"].fail("unsupported schema version");
  return pose_from(root["matrix"]);
}

void write_pose(const std::filesystem::path& path, const Pose& pose) {
  const json j = {{"version", 1}, {"matrix", pose_json(pose)}};
  write_file_atomic(path, j.dump(2) + "\n");
}

SynthScene decode_scene(const std::string& text, const CameraRig* rig_override) {
  const json j = parse_json(text, "scene file");
  const Node root(j, "");
  root.expect_object({"version", "seed", "preset", "primitives", "light_dir", "sky_color", "rig"});
  if (root["version"].integer() != kSceneSchemaVersion) root["version"].fail("unsupported schema version");
  std::uint64_t seed = 0;
  if (root.has("seed")) {
    const Node s = root["seed"];
    if (!s.raw().is_number_unsigned()) s.fail("expected a nonnegative integer");
    seed = s.raw().get<std::uint64_t>();
  }
  CameraRig rig;
  if (rig_override) rig = *rig_override;
  else if (root.has("rig")) rig = rig_from(root["rig"]);
  else rig = make_ring_rig();

  SynthScene scene;
  if (root.has("preset")) scene = make_preset(root["preset"].string(), rig, seed);
  scene.rig = rig;
  scene.seed = seed;
  if (root.has("light_dir")) scene.light_dir = root["light_dir"].vec<3>();
  if (root.has("sky_color")) scene.sky_color = root["sky_color"].vec<3>();
  if (root.has("primitives")) {
    const Node prims = root["primitives"];
    for (std::size_t k = 0; k < prims.array_size(); ++k) {
      const Node p = prims.at(k);
      const std::string type = p["type"].string();
      Primitive prim;
      if (type == "plane") {
        p.expect_object({"type", "z", "center", "half_extent", "texture"});
        GroundPlane g;
        if (p.has("z")) g.z = p["z"].number();
        if (p.has("center")) g.center = p["center"].vec<2>();
        if (p.has("half_extent")) g.half_extent = p["half_extent"].number();
        prim.shape = g;
      } else if (type == "box") {
        p.expect_object({"type", "min", "max", "texture"});
        prim.shape = Box{p["min"].vec<3>(), p["max"].vec<3>()};
      } else if (type == "sphere") {
        p.expect_object({"type", "center", "radius", "texture"});
        prim.shape = Sphere{p["center"].vec<3>(), p["radius"].number()};
      } else {
        p["type"].fail("unknown primitive type '" + type + "'");
      }
      if (p.has("texture")) prim.texture = texture_from(p["texture"]);
      scene.primitives.push_back(prim);
    }
  }
  try {
    scene.validate();
  } catch (const ParameterError& e) {
    throw SchemaError(e.what());
  }
  return scene;
}

std::string encode_scene(const SynthScene& scene) {
  json prims = json::array();
  for (const auto& prim : scene.primitives) {
    json p;
    if (const auto* g = std::get_if<GroundPlane>(&prim.shape)) {
      p = {{"type", "plane"}, {"z", g->z}, {"center", {g->center.x(), g->center.y()}}, {"half_extent", g->half_extent}};
    } else if (const auto* b = std::get_if<Box>(&prim.shape)) {
      p = {{"type", "box"}, {"min", vec_json(b->min)}, {"max", vec_json(b->max)}};
    } else if (const auto* s = std::get_if<Sphere>(&prim.shape)) {
      p = {{"type", "sphere"}, {"center", vec_json(s->center)}, {"radius", s->radius}};
    }
    p["texture"] = texture_json(prim.texture);
    prims.push_back(p);
  }
  const json j = {{"version", kSceneSchemaVersion}, {"seed", scene.seed},
                  {"light_dir", vec_json(scene.light_dir)}, {"sky_color", vec_json(scene.sky_color)},
                  {"rig", rig_json(scene.rig)}, {"primitives", prims}};
  return j.dump(2) + "\n";
}

SynthScene load_scene(const std::string& source, const CameraRig* rig_override, std::uint64_t seed) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(source, ec)) {
    try {
      return decode_scene(read_file(source), rig_override);
    } catch (const SchemaError& e) {
      throw SchemaError(source + ": " + e.what());
    }
  }
  const CameraRig rig = rig_override ? *rig_override : make_ring_rig();
  return make_preset(source, rig, seed);
}

}  // namespace cyldepth::io
