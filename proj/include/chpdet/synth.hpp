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

#ifndef CHPDET_SYNTH_HPP
#define CHPDET_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"
#include "chpdet/io.hpp"
#include "chpdet/size_prior.hpp"
#include "chpdet/tensor.hpp"

namespace chpdet::synth {

/// Parameters of a random ship scene. Ships are placed by rejection sampling.
struct SceneSpec {
    std::uint64_t seed = 0;
    int width = 512;
    int height = 512;
    double gsd = 1.0;
    int min_ships = 3;
    int max_ships = 8;
    /// Class ids to draw from (uniformly); empty means every class in the table.
    std::vector<int> classes;
    /// Length / width ratio range.
    double min_aspect = 3.0;
    double max_aspect = 6.0;
    /// No pair of ships may overlap with IoU above this cap.
    double max_pair_iou = 0.0;
    /// Placement attempts per ship before giving up.
    int max_retries = 2000;

    void validate() const {
        chpdet::detail::require(width > 0 && height > 0, "scene size must be positive");
        chpdet::detail::require(gsd > 0.0, "scene gsd must be positive");
        chpdet::detail::require(min_ships >= 0 && max_ships >= min_ships, "invalid ship count range");
        chpdet::detail::require(min_aspect >= 1.0 && max_aspect >= min_aspect, "invalid aspect range");
        chpdet::detail::require(max_pair_iou >= 0.0 && max_pair_iou <= 1.0, "IoU cap must lie in [0,1]");
        chpdet::detail::require(max_retries >= 1, "max_retries must be >= 1");
    }
};

/// Ship length in metres ~ Normal(mean, (lambda * mean)^2), redrawn until positive.
inline double sample_length(std::mt19937_64& rng, double mean_length_m, double lambda) {
    std::normal_distribution<double> dist(mean_length_m, lambda * mean_length_m);
    for (;;) {
        const double l = dist(rng);
        if (l > 0.0) {
            return l;
        }
    }
}

inline bool inside_image(const RBox& r, int width, int height) {
    for (const Point& p : rbox_to_quad(r).vertices) {
        if (p.x < 0.0 || p.y < 0.0 || p.x >= width || p.y >= height) {
            return false;
        }
    }
    return true;
}

/// Deterministic for a given SceneSpec and class table. Every ship lies fully inside the image.
inline io::AnnotationFile synth_scene(const SceneSpec& spec, const ClassLengthTable& table) {
    spec.validate();
    table.validate();
    std::vector<int> classes = spec.classes;
    if (classes.empty()) {
        for (std::size_t i = 0; i < table.classes.size(); ++i) {
            classes.push_back(static_cast<int>(i));
        }
    }
    chpdet::detail::require(!classes.empty(), "scene needs at least one class");
    for (int c : classes) {
        table.at(c);
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> count_dist(spec.min_ships, spec.max_ships);
    std::uniform_int_distribution<std::size_t> class_dist(0, classes.size() - 1);
    std::uniform_real_distribution<double> aspect_dist(spec.min_aspect, spec.max_aspect);
    std::uniform_real_distribution<double> heading_dist(0.0, 360.0);
    std::uniform_real_distribution<double> x_dist(0.0, spec.width);
    std::uniform_real_distribution<double> y_dist(0.0, spec.height);

    io::AnnotationFile file;
    file.image_id = "synth_" + std::to_string(spec.seed);
    file.width = spec.width;
    file.height = spec.height;
    file.gsd = spec.gsd;

    const int target = count_dist(rng);
    std::vector<RBox> placed;
    for (int n = 0; n < target; ++n) {
        bool ok = false;
        for (int attempt = 0; attempt < spec.max_retries && !ok; ++attempt) {
            const int cls = classes[class_dist(rng)];
            const double length_px = sample_length(rng, table.at(cls).mean_length_m, table.lambda) / spec.gsd;
            const double width_px = length_px / aspect_dist(rng);
            const RBox r{x_dist(rng), y_dist(rng), width_px, length_px, normalize_degrees(heading_dist(rng))};
            if (!inside_image(r, spec.width, spec.height)) {
                continue;
            }
            bool clear = true;
            for (const RBox& other : placed) {
                if (rotated_iou(r, other) > spec.max_pair_iou) {
                    clear = false;
                    break;
                }
            }
            if (!clear) {
                continue;
            }
            placed.push_back(r);
            file.objects.push_back(rbox_to_chp(r, cls, 1.0));
            ok = true;
        }
        if (!ok) {
            throw Error("could not place ship " + std::to_string(n + 1) + " of " + std::to_string(target) +
                        " within the retry budget; placed " + std::to_string(placed.size()));
        }
    }
    io::validate(file);
    return file;
}

/// Binary mask for visual inspection: 255 on the bow half of each ship, 128 on the stern half.
inline Tensor<std::uint8_t> rasterize(const io::AnnotationFile& file) {
    Tensor<std::uint8_t> mask({static_cast<std::size_t>(file.height), static_cast<std::size_t>(file.width)});
    for (const ChpBox& b : file.objects) {
        const RBox r = chp_to_rbox(b);
        const double t = r.theta * kDegToRad;
        const Point fwd{std::sin(t), -std::cos(t)};
        const Point right{std::cos(t), std::sin(t)};
        const double reach = 0.5 * std::hypot(r.w, r.h);
        const int x0 = std::max(0, static_cast<int>(std::floor(r.cx - reach)));
        const int x1 = std::min(file.width - 1, static_cast<int>(std::ceil(r.cx + reach)));
        const int y0 = std::max(0, static_cast<int>(std::floor(r.cy - reach)));
        const int y1 = std::min(file.height - 1, static_cast<int>(std::ceil(r.cy + reach)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x + 0.5 - r.cx;
                const double dy = y + 0.5 - r.cy;
                const double along = dx * fwd.x + dy * fwd.y;
                const double across = dx * right.x + dy * right.y;
                if (std::fabs(along) <= 0.5 * r.h && std::fabs(across) <= 0.5 * r.w) {
                    mask(y, x) = along >= 0.0 ? 255 : std::max<std::uint8_t>(mask(y, x), 128);
                }
            }
        }
    }
    return mask;
}

/// Binary PGM (P5) encoding of a rank-2 mask.
inline std::string encode_pgm(const Tensor<std::uint8_t>& mask) {
    chpdet::detail::require(mask.rank() == 2, "PGM needs a rank-2 mask");
    std::string out = "P5\n" + std::to_string(mask.dim(1)) + " " + std::to_string(mask.dim(0)) + "\n255\n";
    out.append(reinterpret_cast<const char*>(mask.data()), mask.size());
    return out;
}

}  // namespace chpdet::synth

#endif
