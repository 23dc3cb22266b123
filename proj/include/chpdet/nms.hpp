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

#ifndef CHPDET_NMS_HPP
#define CHPDET_NMS_HPP

#include <algorithm>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"

namespace chpdet {

/// Score descending, then class, cx, cy ascending; remaining geometry breaks any further tie.
inline std::vector<std::size_t> ranking_order(std::span<const ChpBox> dets) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const ChpBox& x = dets[a];
        const ChpBox& y = dets[b];
        return std::make_tuple(-x.score, x.class_id, x.cx, x.cy, x.w, x.h, x.hx, x.hy) <
               std::make_tuple(-y.score, y.class_id, y.cx, y.cy, y.w, y.h, y.hx, y.hy);
    });
    return order;
}

/// Greedy rotated NMS. Returns indices into `dets` of the kept boxes, best first.
/// A box is discarded when its IoU with an already kept box (of the same class,
/// unless class_agnostic) is strictly greater than `iou_threshold`.
inline std::vector<std::size_t> rotated_nms_indices(std::span<const ChpBox> dets, double iou_threshold,
                                                    bool class_agnostic = false) {
    detail::require(iou_threshold >= 0.0 && iou_threshold <= 1.0, "NMS threshold must lie in [0,1]");
    const std::vector<std::size_t> order = ranking_order(dets);
    std::vector<RBox> boxes;
    boxes.reserve(dets.size());
    for (const ChpBox& d : dets) {
        boxes.push_back(chp_to_rbox(d));
    }
    std::vector<char> suppressed(dets.size(), 0);
    std::vector<std::size_t> kept;
    for (std::size_t a = 0; a < order.size(); ++a) {
        const std::size_t i = order[a];
        if (suppressed[i]) {
            continue;
        }
        kept.push_back(i);
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const std::size_t j = order[b];
            if (suppressed[j] || (!class_agnostic && dets[j].class_id != dets[i].class_id)) {
                continue;
            }
            if (rotated_iou(boxes[i], boxes[j]) > iou_threshold) {
                suppressed[j] = 1;
            }
        }
    }
    return kept;
}

inline std::vector<ChpBox> rotated_nms(std::span<const ChpBox> dets, double iou_threshold,
                                       bool class_agnostic = false) {
    std::vector<ChpBox> out;
    for (std::size_t i : rotated_nms_indices(dets, iou_threshold, class_agnostic)) {
        out.push_back(dets[i]);
    }
    return out;
}

}  // namespace chpdet

#endif
