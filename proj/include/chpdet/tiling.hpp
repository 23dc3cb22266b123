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

#ifndef CHPDET_TILING_HPP
#define CHPDET_TILING_HPP

#include <span>
#include <utility>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"
#include "chpdet/nms.hpp"

namespace chpdet {

/// A square window of the source image, resampled to model_size for inference.
struct SliceSpec {
    int origin_x = 0;
    int origin_y = 0;
    int slice_size = 1024;
    int model_size = 512;

    double scale() const { return static_cast<double>(model_size) / static_cast<double>(slice_size); }

    bool operator==(const SliceSpec&) const = default;
};

namespace detail {

inline std::vector<int> slice_origins(int extent, int slice_size, int stride) {
    std::vector<int> origins{0};
    while (origins.back() + slice_size < extent) {
        const int next = origins.back() + stride;
        if (next + slice_size >= extent) {
            origins.push_back(extent - slice_size);
            break;
        }
        origins.push_back(next);
    }
    return origins;
}

}  // namespace detail

/**
 * Slice grid at multiples of `stride`; the last row/column is pulled back so it ends
 * exactly on the image edge. Images smaller than one slice get a single slice at
 * the origin that overhangs the image. Slices are listed row by row.
 */
inline std::vector<SliceSpec> make_slices(int image_w, int image_h, int slice_size = 1024, int stride = 820,
                                          int model_size = 512) {
    detail::require(image_w > 0 && image_h > 0, "image dimensions must be positive");
    detail::require(slice_size > 0 && stride > 0 && model_size > 0, "slice, stride and model size must be positive");
    detail::require(model_size <= slice_size, "model size must not exceed slice size");
    detail::require(stride <= slice_size, "stride larger than slice size would leave gaps");
    std::vector<SliceSpec> slices;
    for (int oy : detail::slice_origins(image_h, slice_size, stride)) {
        for (int ox : detail::slice_origins(image_w, slice_size, stride)) {
            slices.push_back({ox, oy, slice_size, model_size});
        }
    }
    return slices;
}

/// Model coordinates -> source image: p = origin + p_model / scale, sizes / scale.
inline ChpBox to_global(const ChpBox& b, const SliceSpec& s) {
    const double inv = 1.0 / s.scale();
    ChpBox g = b;
    g.cx = s.origin_x + b.cx * inv;
    g.cy = s.origin_y + b.cy * inv;
    g.hx = s.origin_x + b.hx * inv;
    g.hy = s.origin_y + b.hy * inv;
    g.w = b.w * inv;
    g.h = b.h * inv;
    return g;
}

inline ChpBox to_model(const ChpBox& b, const SliceSpec& s) {
    const double k = s.scale();
    ChpBox m = b;
    m.cx = (b.cx - s.origin_x) * k;
    m.cy = (b.cy - s.origin_y) * k;
    m.hx = (b.hx - s.origin_x) * k;
    m.hy = (b.hy - s.origin_y) * k;
    m.w = b.w * k;
    m.h = b.h * k;
    return m;
}

using SliceDetections = std::pair<SliceSpec, std::vector<ChpBox>>;

/// Maps every slice's detections to global coordinates, concatenates them and applies rotated NMS.
inline std::vector<ChpBox> merge_detections(std::span<const SliceDetections> per_slice, double rnms_threshold = 0.15,
                                            bool class_agnostic = false) {
    std::vector<ChpBox> all;
    for (const auto& [slice, dets] : per_slice) {
        for (const ChpBox& d : dets) {
            all.push_back(to_global(d, slice));
        }
    }
    return rotated_nms(all, rnms_threshold, class_agnostic);
}

}  // namespace chpdet

#endif
