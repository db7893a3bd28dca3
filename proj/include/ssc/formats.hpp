#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssc/geometry.hpp"
#include "ssc/point_cloud.hpp"
#include "ssc/voxel.hpp"

namespace ssc {

// Raster label reserved for pixels without a usable class.
inline constexpr std::uint8_t kIgnoreLabel = 255;

// Row-major float depth in meters; 0.0 is the "no depth" sentinel.
struct DepthMap {
    std::uint32_t width = 0, height = 0;
    std::vector<float> values;

    float at(std::uint32_t x, std::uint32_t y) const { return values[std::size_t(y) * width + x]; }
    float& at(std::uint32_t x, std::uint32_t y) { return values[std::size_t(y) * width + x]; }
};

// Row-major u8 class ids; every id is < C+1 or kIgnoreLabel.
struct SemanticMap {
    std::uint32_t width = 0, height = 0;
    std::vector<std::uint8_t> labels;

    std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
        return labels[std::size_t(y) * width + x];
    }
    std::uint8_t& at(std::uint32_t x, std::uint32_t y) {
        return labels[std::size_t(y) * width + x];
    }
};

struct CalibrationRecord {
    CameraIntrinsics intrinsics;
    Pose cam_to_ego;
};

// Calibration text. Native format:
//   K: fx fy cx cy
//   Tr: r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
// KITTI compatibility: a "P2:" line (12 floats) supplies K from its left
// 3x3; "Tr:" is read the same way. Rotations more than 1e-6 from orthonormal
// are rejected; accepted ones are snapped to the nearest rotation.
CalibrationRecord parse_calibration(std::string_view text);

// One camera-to-world pose per line, 12 floats row-major 3x4. Line order is
// preserved; rotations are re-orthonormalized as above.
std::vector<Pose> parse_poses(std::string_view text);

// Binary raster: "DPT1" | u32le width | u32le height | w*h f32le row-major.
DepthMap decode_depth_raster(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_depth_raster(const DepthMap& map);

// Binary raster: "SEG1" | u32le width | u32le height | w*h u8 labels.
SemanticMap decode_semantic_raster(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_semantic_raster(const SemanticMap& map);

// Headerless voxel labels: h*w*z u16le in the grid's linear order
// (x-major, z-fastest). Size must match the grid exactly.
LabelGrid decode_voxel_labels(std::span<const std::uint8_t> bytes, const GridConfig& config);
std::vector<std::uint8_t> encode_voxel_labels(const LabelGrid& grid);

// Headerless bitmask, one bit per voxel, MSB-first within each byte, same
// linear order; payload is ceil(h*w*z / 8) bytes.
BoolGrid decode_occupancy_mask(std::span<const std::uint8_t> bytes, const Dims3& dims);
std::vector<std::uint8_t> encode_occupancy_mask(const BoolGrid& grid);

using ClassPalette = std::map<std::uint16_t, std::array<std::uint8_t, 3>>;

// ASCII PLY with float x/y/z and uchar red/green/blue. The palette must
// cover every class present in the cloud.
std::string export_ply(const SemanticPointCloud& cloud, const ClassPalette& palette);

// Distinct colors for class ids 0..C (0 maps to gray).
ClassPalette default_palette(int num_classes);

// File helpers shared by the CLI and tests.
std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace ssc
