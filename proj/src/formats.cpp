#include "ssc/formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace ssc {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
           static_cast<std::uint32_t>(b[off + 2]) << 16 |
           static_cast<std::uint32_t>(b[off + 3]) << 24;
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u32(out, bits);
}

float get_f32(std::span<const std::uint8_t> b, std::size_t off) {
    const std::uint32_t bits = get_u32(b, off);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

// Checks the 4-byte magic and the two u32 dimension fields, returning
// (width, height). Throws with the byte offset where reading failed.
std::pair<std::uint32_t, std::uint32_t> decode_raster_header(std::span<const std::uint8_t> bytes,
                                                             const char magic[4]) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), magic, 4) != 0) {
        throw codec_error(std::string("bad magic, expected '") + std::string(magic, 4) + "'", 0);
    }
    if (bytes.size() < 8) throw codec_error("truncated width field", 4);
    if (bytes.size() < 12) throw codec_error("truncated height field", 8);
    return {get_u32(bytes, 4), get_u32(bytes, 8)};
}

void check_payload(std::span<const std::uint8_t> bytes, std::size_t header,
                   std::size_t elem_size, std::size_t count) {
    const std::size_t expected = header + elem_size * count;
    if (bytes.size() < expected) {
        const std::size_t complete = (bytes.size() - header) / elem_size;
        throw codec_error("truncated payload, need " + std::to_string(expected) + " bytes, have " +
                              std::to_string(bytes.size()),
                          header + complete * elem_size);
    }
    if (bytes.size() > expected) {
        throw codec_error("unexpected trailing data after payload", expected);
    }
}

std::vector<double> parse_floats(std::string_view line, std::size_t line_no,
                                 const std::string& field) {
    std::vector<double> out;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
        if (p >= end) break;
        double v = 0.0;
        const auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{}) {
            throw parse_error("expected a number, got '" + std::string(p, std::min<std::size_t>(8, end - p)) + "'",
                              line_no, field);
        }
        out.push_back(v);
        p = next;
    }
    return out;
}

// 12 floats row-major 3x4 -> pose, with the orthonormality gate and snap.
Pose pose_from_3x4(const std::vector<double>& v, std::size_t line_no, const std::string& field) {
    Pose pose;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.rotation(r, c) = v[r * 4 + c];
    }
    pose.translation = {v[3], v[7], v[11]};
    if (orthonormality_defect(pose.rotation) > 1e-6) {
        throw parse_error("rotation is not orthonormal within 1e-6", line_no, field);
    }
    if (!(pose.rotation.determinant() > 0.0)) {
        throw parse_error("rotation determinant is not positive", line_no, field);
    }
    pose.rotation = nearest_rotation(pose.rotation);
    return pose;
}

struct Line {
    std::size_t number;  // 1-based
    std::string_view text;
};

std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> lines;
    std::size_t start = 0, number = 1;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        const std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back({number, line});
        if (nl == std::string_view::npos) break;
        start = nl + 1;
        ++number;
    }
    return lines;
}

void append_float_shortest(std::string& out, float v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, r.ptr);
}

}  // namespace

CalibrationRecord parse_calibration(std::string_view text) {
    std::optional<std::vector<double>> k_line, p2_line, tr_line;
    std::size_t k_no = 0, p2_no = 0, tr_no = 0;

    for (const Line& line : split_lines(text)) {
        const std::size_t colon = line.text.find(':');
        if (colon == std::string_view::npos) continue;
        const std::string key(line.text.substr(0, colon));
        const std::string_view rest = line.text.substr(colon + 1);
        if (key == "K") {
            k_line = parse_floats(rest, line.number, key);
            k_no = line.number;
        } else if (key == "P2") {
            p2_line = parse_floats(rest, line.number, key);
            p2_no = line.number;
        } else if (key == "Tr") {
            tr_line = parse_floats(rest, line.number, key);
            tr_no = line.number;
        }
    }

    CalibrationRecord rec;
    if (k_line) {
        if (k_line->size() != 4) {
            throw parse_error("K requires 4 values (fx fy cx cy), got " +
                                  std::to_string(k_line->size()),
                              k_no, "K");
        }
        rec.intrinsics = {(*k_line)[0], (*k_line)[1], (*k_line)[2], (*k_line)[3]};
        try {
            rec.intrinsics.validate();
        } catch (const invalid_input& e) {
            throw parse_error(e.what(), k_no, "K");
        }
    } else if (p2_line) {
        if (p2_line->size() != 12) {
            throw parse_error("P2 requires 12 values, got " + std::to_string(p2_line->size()),
                              p2_no, "P2");
        }
        const auto& p = *p2_line;
        rec.intrinsics = {p[0], p[5], p[2], p[6]};
        try {
            rec.intrinsics.validate();
        } catch (const invalid_input& e) {
            throw parse_error(e.what(), p2_no, "P2");
        }
    } else {
        throw parse_error("missing key: expected a 'K:' or 'P2:' line", 0, "K");
    }

    if (!tr_line) throw parse_error("missing key: expected a 'Tr:' line", 0, "Tr");
    if (tr_line->size() != 12) {
        throw parse_error("Tr requires 12 values, got " + std::to_string(tr_line->size()), tr_no,
                          "Tr");
    }
    rec.cam_to_ego = pose_from_3x4(*tr_line, tr_no, "Tr");
    return rec;
}

std::vector<Pose> parse_poses(std::string_view text) {
    std::vector<Pose> poses;
    for (const Line& line : split_lines(text)) {
        const std::vector<double> v = parse_floats(line.text, line.number, "pose");
        if (v.size() != 12) {
            throw parse_error("pose line requires 12 values, got " + std::to_string(v.size()),
                              line.number, "pose");
        }
        poses.push_back(pose_from_3x4(v, line.number, "pose"));
    }
    return poses;
}

DepthMap decode_depth_raster(std::span<const std::uint8_t> bytes) {
    const auto [w, h] = decode_raster_header(bytes, "DPT1");
    const std::size_t count = std::size_t(w) * h;
    check_payload(bytes, 12, 4, count);
    DepthMap map{w, h, std::vector<float>(count)};
    for (std::size_t i = 0; i < count; ++i) map.values[i] = get_f32(bytes, 12 + i * 4);
    return map;
}

std::vector<std::uint8_t> encode_depth_raster(const DepthMap& map) {
    if (map.values.size() != std::size_t(map.width) * map.height) {
        throw invalid_input("depth map value count does not match its dimensions");
    }
    std::vector<std::uint8_t> out;
    out.reserve(12 + map.values.size() * 4);
    out.insert(out.end(), {'D', 'P', 'T', '1'});
    put_u32(out, map.width);
    put_u32(out, map.height);
    for (float v : map.values) put_f32(out, v);
    return out;
}

SemanticMap decode_semantic_raster(std::span<const std::uint8_t> bytes) {
    const auto [w, h] = decode_raster_header(bytes, "SEG1");
    const std::size_t count = std::size_t(w) * h;
    check_payload(bytes, 12, 1, count);
    SemanticMap map{w, h, std::vector<std::uint8_t>(count)};
    std::copy(bytes.begin() + 12, bytes.end(), map.labels.begin());
    return map;
}

std::vector<std::uint8_t> encode_semantic_raster(const SemanticMap& map) {
    if (map.labels.size() != std::size_t(map.width) * map.height) {
        throw invalid_input("semantic map label count does not match its dimensions");
    }
    std::vector<std::uint8_t> out;
    out.reserve(12 + map.labels.size());
    out.insert(out.end(), {'S', 'E', 'G', '1'});
    put_u32(out, map.width);
    put_u32(out, map.height);
    out.insert(out.end(), map.labels.begin(), map.labels.end());
    return out;
}

LabelGrid decode_voxel_labels(std::span<const std::uint8_t> bytes, const GridConfig& config) {
    config.validate();
    const std::size_t count = config.voxel_count();
    const std::size_t expected = count * 2;
    if (bytes.size() != expected) {
        throw codec_error("voxel label payload size mismatch: expected " +
                              std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()),
                          std::min(bytes.size(), expected));
    }
    LabelGrid grid = LabelGrid::empty(config);
    for (std::size_t i = 0; i < count; ++i) {
        grid.labels[i] = static_cast<std::uint16_t>(bytes[i * 2]) |
                         static_cast<std::uint16_t>(bytes[i * 2 + 1]) << 8;
    }
    return grid;
}

std::vector<std::uint8_t> encode_voxel_labels(const LabelGrid& grid) {
    if (grid.labels.size() != grid.config.voxel_count()) {
        throw invalid_input("label grid size does not match its dimensions");
    }
    std::vector<std::uint8_t> out;
    out.reserve(grid.labels.size() * 2);
    for (std::uint16_t v : grid.labels) {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    return out;
}

BoolGrid decode_occupancy_mask(std::span<const std::uint8_t> bytes, const Dims3& dims) {
    const std::size_t count = dims.total();
    const std::size_t expected = (count + 7) / 8;
    if (bytes.size() != expected) {
        throw codec_error("occupancy mask size mismatch: expected " + std::to_string(expected) +
                              " bytes, got " + std::to_string(bytes.size()),
                          std::min(bytes.size(), expected));
    }
    // Padding bits in the final byte must be zero so encoding is inverse.
    const std::size_t tail_bits = count % 8;
    if (tail_bits != 0 && expected > 0) {
        const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xFF >> tail_bits);
        if ((bytes[expected - 1] & pad_mask) != 0) {
            throw codec_error("nonzero padding bits in final byte", expected - 1);
        }
    }
    BoolGrid grid = BoolGrid::zeros(dims);
    for (std::size_t i = 0; i < count; ++i) {
        grid.values[i] = (bytes[i / 8] >> (7 - i % 8)) & 1;
    }
    return grid;
}

std::vector<std::uint8_t> encode_occupancy_mask(const BoolGrid& grid) {
    const std::size_t count = grid.dims.total();
    if (grid.values.size() != count) {
        throw invalid_input("occupancy grid size does not match its dimensions");
    }
    std::vector<std::uint8_t> out((count + 7) / 8, 0);
    for (std::size_t i = 0; i < count; ++i) {
        if (grid.values[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
    }
    return out;
}

std::string export_ply(const SemanticPointCloud& cloud, const ClassPalette& palette) {
    cloud.validate();
    std::set<std::uint16_t> present(cloud.classes.begin(), cloud.classes.end());
    for (std::uint16_t cls : present) {
        if (!palette.count(cls)) {
            throw invalid_input("palette has no color for class id " + std::to_string(cls));
        }
    }

    std::string out;
    out += "ply\n";
    out += "format ascii 1.0\n";
    out += "element vertex " + std::to_string(cloud.size()) + "\n";
    out += "property float x\n";
    out += "property float y\n";
    out += "property float z\n";
    out += "property uchar red\n";
    out += "property uchar green\n";
    out += "property uchar blue\n";
    out += "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.coords[i];
        const auto& rgb = palette.at(cloud.classes[i]);
        append_float_shortest(out, static_cast<float>(p.x));
        out += ' ';
        append_float_shortest(out, static_cast<float>(p.y));
        out += ' ';
        append_float_shortest(out, static_cast<float>(p.z));
        out += ' ';
        out += std::to_string(rgb[0]) + ' ';
        out += std::to_string(rgb[1]) + ' ';
        out += std::to_string(rgb[2]);
        out += '\n';
    }
    return out;
}

ClassPalette default_palette(int num_classes) {
    ClassPalette palette;
    palette[0] = {128, 128, 128};
    for (int c = 1; c <= num_classes; ++c) {
        // Golden-angle hue walk keeps adjacent ids visually distinct.
        const double hue = std::fmod(0.61803398875 * c, 1.0) * 6.0;
        const double s = 0.75, v = 0.95;
        const int sector = static_cast<int>(hue);
        const double f = hue - sector;
        const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
        double r = 0, g = 0, b = 0;
        switch (sector % 6) {
            case 0: r = v, g = t, b = p; break;
            case 1: r = q, g = v, b = p; break;
            case 2: r = p, g = v, b = t; break;
            case 3: r = p, g = q, b = v; break;
            case 4: r = t, g = p, b = v; break;
            case 5: r = v, g = p, b = q; break;
        }
        palette[static_cast<std::uint16_t>(c)] = {static_cast<std::uint8_t>(r * 255 + 0.5),
                                                  static_cast<std::uint8_t>(g * 255 + 0.5),
                                                  static_cast<std::uint8_t>(b * 255 + 0.5)};
    }
    return palette;
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_binary_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw data_error("failed writing file: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open file for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw data_error("failed writing file: " + path);
}

}  // namespace ssc
