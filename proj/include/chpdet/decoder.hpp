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

#ifndef CHPDET_DECODER_HPP
#define CHPDET_DECODER_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"
#include "chpdet/target_encoder.hpp"
#include "chpdet/tensor.hpp"

namespace chpdet {

struct DecodeConfig {
    int top_k = 100;
    double head_score_threshold = 0.1;
    double score_floor = 0.0;
    int stride = 4;

    void validate() const {
        detail::require(top_k >= 1, "top_k must be >= 1");
        detail::require(head_score_threshold >= 0.0 && head_score_threshold <= 1.0,
                        "head_score_threshold must lie in [0,1]");
        detail::require(score_floor >= 0.0 && score_floor <= 1.0, "score_floor must lie in [0,1]");
        detail::require(stride >= 1, "stride must be >= 1");
    }
};

struct Peak {
    int class_id = 0;
    int row = 0;
    int col = 0;
    double score = 0.0;

    bool operator==(const Peak&) const = default;
};

/// Positive cells >= all existing 8-neighbours, by score descending then (row, col) ascending,
/// truncated to `top_k`.
inline std::vector<Peak> extract_peaks(GridView<const double> heatmap, std::size_t top_k, int class_id = 0) {
    std::vector<Peak> peaks;
    const long rows = static_cast<long>(heatmap.rows());
    const long cols = static_cast<long>(heatmap.cols());
    for (long r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            const double v = heatmap(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            // Empty background is never a peak, however flat.
            bool is_peak = v > 0.0;
            for (long dr = -1; dr <= 1 && is_peak; ++dr) {
                for (long dc = -1; dc <= 1; ++dc) {
                    if ((dr == 0 && dc == 0) || !heatmap.contains(r + dr, c + dc)) {
                        continue;
                    }
                    if (heatmap(static_cast<std::size_t>(r + dr), static_cast<std::size_t>(c + dc)) > v) {
                        is_peak = false;
                        break;
                    }
                }
            }
            if (is_peak) {
                peaks.push_back({class_id, static_cast<int>(r), static_cast<int>(c), v});
            }
        }
    }
    // Row-major scan order already gives the (row, col) tie-break.
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
    if (peaks.size() > top_k) {
        peaks.resize(top_k);
    }
    return peaks;
}

/**
 * Turns predicted maps into boxes.
 *
 * Per class, the top-k center peaks above score_floor are read out as
 * center = (cell + offset) * S, size = size * S and a regressed head
 * (cell + head_reg) * S. Every head-map peak above head_score_threshold is a
 * candidate; each detection takes the candidate cell nearest to its regressed
 * head (candidates are shared, not consumed) and refines it with head_offset.
 * With no candidates the regressed head is kept and the box is flagged.
 *
 * Peaks whose decoded size is not positive cannot form a box and are skipped.
 * Output order: class, score descending, row, col.
 */
inline std::vector<ChpBox> decode_detections(const DetectionMaps& maps, const DecodeConfig& cfg) {
    cfg.validate();
    maps.check_shapes();
    const double s = cfg.stride;

    std::vector<Peak> candidates;
    for (const Peak& p : extract_peaks(maps.head.channel(0), std::numeric_limits<std::size_t>::max())) {
        if (p.score > cfg.head_score_threshold) {
            candidates.push_back(p);
        }
    }

    std::vector<ChpBox> out;
    for (std::size_t cls = 0; cls < maps.num_classes(); ++cls) {
        const auto peaks = extract_peaks(maps.center.channel(cls), static_cast<std::size_t>(cfg.top_k),
                                         static_cast<int>(cls));
        for (const Peak& p : peaks) {
            if (!(p.score > cfg.score_floor)) {
                continue;
            }
            const auto r = static_cast<std::size_t>(p.row);
            const auto c = static_cast<std::size_t>(p.col);
            ChpBox box;
            box.class_id = p.class_id;
            box.score = std::clamp(p.score, 0.0, 1.0);
            box.cx = (p.col + maps.center_offset(0, r, c)) * s;
            box.cy = (p.row + maps.center_offset(1, r, c)) * s;
            box.w = maps.size(0, r, c) * s;
            box.h = maps.size(1, r, c) * s;
            if (!(box.w > 0.0) || !(box.h > 0.0)) {
                continue;
            }
            const double reg_x = p.col + maps.head_reg(0, r, c);
            const double reg_y = p.row + maps.head_reg(1, r, c);

            const Peak* best = nullptr;
            double best_d2 = std::numeric_limits<double>::infinity();
            for (const Peak& h : candidates) {
                const double dx = h.col - reg_x;
                const double dy = h.row - reg_y;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = &h;
                }
            }
            if (best != nullptr) {
                const auto hr = static_cast<std::size_t>(best->row);
                const auto hc = static_cast<std::size_t>(best->col);
                box.hx = (best->col + maps.head_offset(0, hr, hc)) * s;
                box.hy = (best->row + maps.head_offset(1, hr, hc)) * s;
            } else {
                box.hx = reg_x * s;
                box.hy = reg_y * s;
                box.flags |= kFlagHeadFallback;
            }
            if (box.hx == box.cx && box.hy == box.cy) {
                box.hy += 1e-6;
                box.flags |= kFlagHeadPerturbed;
            }
            out.push_back(box);
        }
    }
    return out;
}

}  // namespace chpdet

#endif
