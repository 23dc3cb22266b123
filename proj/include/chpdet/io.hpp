/*
 * Copyright 2026 The chpdet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHPDET_IO_HPP
#define CHPDET_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"
#include "chpdet/size_prior.hpp"
#include "chpdet/target_encoder.hpp"
#include "chpdet/tensor.hpp"

/**
 * File formats.
 *
 * Annotation / detection file (JSON, one image per file):
 *
 *   {"image_id": "...", "width": W, "height": H, "gsd": 1.0,
 *    "objects": [{"class": "name", "cx": .., "cy": .., "w": .., "h": ..,
 *                 "hx": .., "hy": .., "score": ..}, ...]}
 *
 * Class config (JSON):
 *
 *   {"lambda": 0.2, "gsd": 1.0, "classes": [{"name": "...", "mean_length_m": ..}]}
 *
 * Tensor file (binary, little-endian): "CHPT", u16 version, u8 dtype (0 = f32),
 * u8 rank, rank x u32 dims, row-major f32 payload.
 */
namespace chpdet::io {

using json = nlohmann::ordered_json;

struct AnnotationFile {
    std::string image_id;
    int width = 0;
    int height = 0;
    double gsd = 1.0;
    std::vector<ChpBox> objects;

    bool operator==(const AnnotationFile&) const = default;
};

/// Writes to a sibling temporary file and renames it into place, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw Error("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace detail {

inline json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::size_t begin = text.rfind('\n', limit == 0 ? 0 : limit - 1);
        begin = begin == std::string::npos ? 0 : begin + 1;
        std::size_t end = text.find('\n', limit);
        end = end == std::string::npos ? text.size() : end;
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " +
                         e.what() + "\n  " + text.substr(begin, end - begin));
    }
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(where + ": " + key + " required");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + ": field '" + key + "' has the wrong type: " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Class config

inline json class_table_to_json(const ClassLengthTable& table) {
    json j;
    j["lambda"] = table.lambda;
    j["gsd"] = table.gsd;
    json classes = json::array();
    for (const ClassInfo& c : table.classes) {
        json e;
        e["name"] = c.name;
        e["mean_length_m"] = c.mean_length_m;
        classes.push_back(std::move(e));
    }
    j["classes"] = std::move(classes);
    return j;
}

inline ClassLengthTable class_table_from_json(const json& j, const std::string& origin = "class config") {
    ClassLengthTable table;
    table.lambda = j.contains("lambda") ? detail::required<double>(j, "lambda", origin) : 0.2;
    table.gsd = j.contains("gsd") ? detail::required<double>(j, "gsd", origin) : 1.0;
    const json classes = detail::required<json>(j, "classes", origin);
    if (!classes.is_array()) {
        throw ParseError(origin + ": 'classes' must be an array");
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const std::string where = origin + ": classes[" + std::to_string(i) + "]";
        ClassInfo info{detail::required<std::string>(classes[i], "name", where),
                       detail::required<double>(classes[i], "mean_length_m", where)};
        if (table.find(info.name)) {
            throw ParseError(where + ": duplicate class '" + info.name + "'");
        }
        table.classes.push_back(std::move(info));
    }
    try {
        table.validate();
    } catch (const Error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return table;
}

inline ClassLengthTable load_class_table(const std::filesystem::path& path) {
    return class_table_from_json(detail::parse_json(read_file(path), path.string()), path.string());
}

inline void save_class_table(const std::filesystem::path& path, const ClassLengthTable& table) {
    write_file_atomic(path, class_table_to_json(table).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Annotations

inline json annotations_to_json(const AnnotationFile& file, const ClassLengthTable& classes) {
    json j;
    j["image_id"] = file.image_id;
    j["width"] = file.width;
    j["height"] = file.height;
    j["gsd"] = file.gsd;
    json objects = json::array();
    for (const ChpBox& b : file.objects) {
        json o;
        o["class"] = classes.at(b.class_id).name;
        o["cx"] = b.cx;
        o["cy"] = b.cy;
        o["w"] = b.w;
        o["h"] = b.h;
        o["hx"] = b.hx;
        o["hy"] = b.hy;
        o["score"] = b.score;
        if (b.flags != kFlagNone) {
            o["flags"] = b.flags;
        }
        objects.push_back(std::move(o));
    }
    j["objects"] = std::move(objects);
    return j;
}

/// Validates box invariants and that every center lies inside the image.
inline void validate(const AnnotationFile& file) {
    chpdet::detail::require(file.width > 0 && file.height > 0, "image size must be positive");
    chpdet::detail::require(file.gsd > 0.0, "gsd must be positive");
    for (std::size_t i = 0; i < file.objects.size(); ++i) {
        const ChpBox& b = file.objects[i];
        try {
            chpdet::validate(b);
        } catch (const Error& e) {
            throw Error("object " + std::to_string(i) + ": " + e.what());
        }
        if (!(b.cx >= 0.0 && b.cx < file.width && b.cy >= 0.0 && b.cy < file.height)) {
            throw Error("object " + std::to_string(i) + ": center outside the image");
        }
    }
}

inline AnnotationFile annotations_from_json(const json& j, const ClassLengthTable& classes,
                                            const std::string& origin = "annotations") {
    AnnotationFile file;
    file.image_id = detail::required<std::string>(j, "image_id", origin);
    file.width = detail::required<int>(j, "width", origin);
    file.height = detail::required<int>(j, "height", origin);
    file.gsd = detail::required<double>(j, "gsd", origin);
    const json objects = detail::required<json>(j, "objects", origin);
    if (!objects.is_array()) {
        throw ParseError(origin + ": 'objects' must be an array");
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const json& o = objects[i];
        const std::string where = origin + ": objects[" + std::to_string(i) + "]";
        ChpBox b;
        const std::string name = detail::required<std::string>(o, "class", where);
        const auto id = classes.find(name);
        if (!id) {
            throw ParseError(where + ": unknown class '" + name + "'");
        }
        b.class_id = *id;
        b.cx = detail::required<double>(o, "cx", where);
        b.cy = detail::required<double>(o, "cy", where);
        b.w = detail::required<double>(o, "w", where);
        b.h = detail::required<double>(o, "h", where);
        b.hx = detail::required<double>(o, "hx", where);
        b.hy = detail::required<double>(o, "hy", where);
        b.score = o.contains("score") ? detail::required<double>(o, "score", where) : 1.0;
        b.flags = o.contains("flags") ? detail::required<std::uint32_t>(o, "flags", where) : kFlagNone;
        file.objects.push_back(b);
    }
    try {
        validate(file);
    } catch (const Error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return file;
}

inline AnnotationFile load_annotations(const std::filesystem::path& path, const ClassLengthTable& classes) {
    return annotations_from_json(detail::parse_json(read_file(path), path.string()), classes, path.string());
}

inline void save_annotations(const std::filesystem::path& path, const AnnotationFile& file,
                             const ClassLengthTable& classes) {
    validate(file);
    write_file_atomic(path, annotations_to_json(file, classes).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Tensors

inline constexpr char kTensorMagic[4] = {'C', 'H', 'P', 'T'};
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

namespace detail {

inline void put_le(std::string& out, std::uint64_t value, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xffu));
    }
}

inline std::uint64_t get_le(const std::string& in, std::size_t& pos, int bytes, const std::string& origin) {
    if (pos + static_cast<std::size_t>(bytes) > in.size()) {
        throw ParseError(origin + ": truncated tensor file at byte " + std::to_string(pos));
    }
    std::uint64_t value = 0;
    for (int i = 0; i < bytes; ++i) {
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos += static_cast<std::size_t>(bytes);
    return value;
}

}  // namespace detail

inline std::string encode_tensor(const Tensor<float>& t) {
    chpdet::detail::require(t.rank() <= 255, "tensor rank too large");
    std::string out(kTensorMagic, 4);
    detail::put_le(out, kTensorVersion, 2);
    detail::put_le(out, kDtypeFloat32, 1);
    detail::put_le(out, t.rank(), 1);
    for (std::size_t d : t.shape()) {
        chpdet::detail::require(d <= 0xffffffffu, "tensor dimension exceeds 32 bits");
        detail::put_le(out, d, 4);
    }
    out.reserve(out.size() + 4 * t.size());
    for (float v : t.values()) {
        detail::put_le(out, std::bit_cast<std::uint32_t>(v), 4);
    }
    return out;
}

inline Tensor<float> decode_tensor(const std::string& bytes, const std::string& origin = "tensor") {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
        throw ParseError(origin + ": bad magic, expected CHPT");
    }
    std::size_t pos = 4;
    const auto version = detail::get_le(bytes, pos, 2, origin);
    if (version != kTensorVersion) {
        throw ParseError(origin + ": unsupported tensor version " + std::to_string(version));
    }
    const auto dtype = detail::get_le(bytes, pos, 1, origin);
    if (dtype != kDtypeFloat32) {
        throw ParseError(origin + ": unsupported dtype code " + std::to_string(dtype));
    }
    const auto rank = detail::get_le(bytes, pos, 1, origin);
    std::vector<std::size_t> shape;
    std::size_t count = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
        shape.push_back(static_cast<std::size_t>(detail::get_le(bytes, pos, 4, origin)));
        count *= shape.back();
    }
    if (bytes.size() - pos != 4 * count) {
        throw ParseError(origin + ": payload is " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                         std::to_string(4 * count));
    }
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(bytes, pos, 4, origin)));
    }
    return Tensor<float>(std::move(shape), std::move(values));
}

inline void save_tensor(const std::filesystem::path& path, const Tensor<float>& t) {
    write_file_atomic(path, encode_tensor(t));
}

inline Tensor<float> load_tensor(const std::filesystem::path& path) {
    return decode_tensor(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Map bundles: a directory holding the six maps plus image metadata.

struct MapBundle {
    std::string image_id;
    int width = 0;
    int height = 0;
    double gsd = 1.0;
    int stride = 4;
    DetectionMaps maps;
};

inline constexpr const char* kMapNames[6] = {"center", "center_offset", "size", "head_reg", "head", "head_offset"};

/// The bundle is assembled in a sibling staging directory and renamed into place. An
/// existing directory at `dir` is replaced only if it is itself a map bundle.
inline void save_map_bundle(const std::filesystem::path& dir, const MapBundle& bundle) {
    namespace fs = std::filesystem;
    bundle.maps.check_shapes();
    const fs::path target = dir.has_filename() ? dir : dir.parent_path();
    if (fs::exists(target) && !fs::exists(target / "meta.json")) {
        throw Error(target.string() + " exists and is not a map bundle; refusing to replace it");
    }
    const fs::path staging = target.string() + ".tmp";
    fs::remove_all(staging);
    fs::create_directories(staging);
    try {
        const Map* maps[6] = {&bundle.maps.center,   &bundle.maps.center_offset, &bundle.maps.size,
                              &bundle.maps.head_reg, &bundle.maps.head,          &bundle.maps.head_offset};
        for (int i = 0; i < 6; ++i) {
            save_tensor(staging / (std::string(kMapNames[i]) + ".chpt"), tensor_cast<float>(*maps[i]));
        }
        json meta;
        meta["image_id"] = bundle.image_id;
        meta["width"] = bundle.width;
        meta["height"] = bundle.height;
        meta["gsd"] = bundle.gsd;
        meta["stride"] = bundle.stride;
        write_file_atomic(staging / "meta.json", meta.dump(2) + "\n");
        fs::remove_all(target);
        fs::rename(staging, target);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

inline MapBundle load_map_bundle(const std::filesystem::path& dir) {
    const std::string meta_path = (dir / "meta.json").string();
    const json meta = detail::parse_json(read_file(dir / "meta.json"), meta_path);
    MapBundle bundle;
    bundle.image_id = detail::required<std::string>(meta, "image_id", meta_path);
    bundle.width = detail::required<int>(meta, "width", meta_path);
    bundle.height = detail::required<int>(meta, "height", meta_path);
    bundle.gsd = detail::required<double>(meta, "gsd", meta_path);
    bundle.stride = detail::required<int>(meta, "stride", meta_path);
    Map* maps[6] = {&bundle.maps.center,   &bundle.maps.center_offset, &bundle.maps.size,
                    &bundle.maps.head_reg, &bundle.maps.head,          &bundle.maps.head_offset};
    for (int i = 0; i < 6; ++i) {
        *maps[i] = tensor_cast<double>(load_tensor(dir / (std::string(kMapNames[i]) + ".chpt")));
    }
    bundle.maps.check_shapes();
    return bundle;
}

}  // namespace chpdet::io

#endif
