#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cyldepth/raster.hpp"
#include "cyldepth/rig.hpp"
#include "cyldepth/synthworld.hpp"

namespace cyldepth::io {

inline constexpr int kRigSchemaVersion = 1;
inline constexpr int kSceneSchemaVersion = 1;

/// PFM: `Pf` (1 channel) or `PF` (3 channels), little-endian (negative
/// scale), rows bottom-to-top, 32-bit floats. Values are stored as float.
Raster read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Raster& raster);
std::string encode_pfm(const Raster& raster);
Raster decode_pfm(const std::string& bytes);

/// Binary PPM (P6, maxval 255). Values are unit range.
Raster read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Raster& raster);
std::string encode_ppm(const Raster& raster);
Raster decode_ppm(const std::string& bytes);

/// Dispatches on the extension (.pfm or .ppm).
Raster read_raster(const std::filesystem::path& path);
void write_raster(const std::filesystem::path& path, const Raster& raster);

/// Depth as a 1-channel PFM; invalid pixels are written as 0 and every
/// non-positive or non-finite value reads back as invalid.
DepthMap read_depth(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const DepthMap& depth);

/// Feature maps use a 1-channel PFM of width W and height H*F with the
/// channels stacked as planes, channel 0 on top.
FeatureMap read_features(const std::filesystem::path& path, int plane_height);
void write_features(const std::filesystem::path& path, const FeatureMap& features);

/// Rig JSON. Unknown fields are rejected; errors name the offending path.
CameraRig read_rig(const std::filesystem::path& path);
void write_rig(const std::filesystem::path& path, const CameraRig& rig);
std::string encode_rig(const CameraRig& rig);
CameraRig decode_rig(const std::string& text);

/// Pose JSON: {"version": 1, "matrix": [16 numbers, row-major]}.
Pose read_pose(const std::filesystem::path& path);
void write_pose(const std::filesystem::path& path, const Pose& pose);

/// Scene JSON, or a preset name when `source` is not an existing file.
SynthScene load_scene(const std::string& source, const CameraRig* rig_override, std::uint64_t seed);
SynthScene decode_scene(const std::string& text, const CameraRig* rig_override);
std::string encode_scene(const SynthScene& scene);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace cyldepth::io
