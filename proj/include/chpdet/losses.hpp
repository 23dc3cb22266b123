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

#ifndef CHPDET_LOSSES_HPP
#define CHPDET_LOSSES_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/target_encoder.hpp"
#include "chpdet/tensor.hpp"

namespace chpdet {

struct LossConfig {
    double gamma = 2.0;
    double beta = 4.0;
    double lambda_offset = 1.0;
    double lambda_size = 0.1;
    double lambda_head_reg = 1.0;
    double lambda_head_heatmap = 1.0;
    double lambda_head_offset = 1.0;

    void validate() const {
        detail::require(gamma >= 0.0 && beta >= 0.0, "gamma and beta must be non-negative");
        detail::require(lambda_offset >= 0.0 && lambda_size >= 0.0 && lambda_head_reg >= 0.0 &&
                            lambda_head_heatmap >= 0.0 && lambda_head_offset >= 0.0,
                        "loss weights must be non-negative");
    }
};

/// Loss value plus its gradient with respect to the prediction (same shape).
struct LossResult {
    double value = 0.0;
    Map gradient;
};

inline constexpr double kProbClamp = 1e-12;

/**
 * Penalty-reduced focal loss over a heatmap (center or head).
 *
 *   L = -1/N [ sum_{t=1} (1-p)^g log p + sum_{t<1} (1-t)^b p^g log(1-p) ]
 *
 * Predictions are clamped to [1e-12, 1 - 1e-12]; the gradient is zero where the
 * clamp is active.
 */
inline LossResult variant_focal_loss(const Map& pred, const Map& target, std::size_t n_objects,
                                     const LossConfig& cfg = {}) {
    cfg.validate();
    if (pred.shape() != target.shape()) {
        throw Error("focal loss shape mismatch: " + shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
    }
    if (n_objects == 0) {
        throw Error("no positives: focal loss needs n_objects >= 1");
    }
    const double inv_n = 1.0 / static_cast<double>(n_objects);
    const double g = cfg.gamma;
    const double b = cfg.beta;

    LossResult out{0.0, Map(pred.shape())};
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double raw = pred[i];
        const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
        const bool clamped = p != raw;
        const double t = target[i];
        double term = 0.0;
        double dterm = 0.0;
        if (t == 1.0) {
            const double one_minus = 1.0 - p;
            term = std::pow(one_minus, g) * std::log(p);
            const double dpow = g == 0.0 ? 0.0 : g * std::pow(one_minus, g - 1.0);
            dterm = -dpow * std::log(p) + std::pow(one_minus, g) / p;
        } else {
            const double weight = std::pow(1.0 - t, b);
            const double log_q = std::log(1.0 - p);
            term = weight * std::pow(p, g) * log_q;
            const double dpow = g == 0.0 ? 0.0 : g * std::pow(p, g - 1.0);
            dterm = weight * (dpow * log_q - std::pow(p, g) / (1.0 - p));
        }
        sum += term;
        out.gradient[i] = clamped ? 0.0 : -dterm * inv_n;
    }
    out.value = -sum * inv_n;
    return out;
}

/**
 * L1 over the listed cells of a 2 x H x W regression map, normalised by N.
 * Cells may repeat (colliding objects); each occurrence contributes. The
 * subgradient at pred == target is 0.
 */
inline LossResult masked_l1_loss(const Map& pred, const Map& target, std::span<const Cell> cells,
                                 std::size_t n_objects) {
    if (pred.shape() != target.shape()) {
        throw Error("L1 loss shape mismatch: " + shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
    }
    detail::require(pred.rank() == 3, "L1 loss expects a C x H x W map");
    if (cells.empty()) {
        throw Error("L1 loss: empty mask");
    }
    if (n_objects == 0) {
        throw Error("no positives: L1 loss needs n_objects >= 1");
    }
    const double inv_n = 1.0 / static_cast<double>(n_objects);
    LossResult out{0.0, Map(pred.shape())};
    double sum = 0.0;
    for (const Cell& cell : cells) {
        detail::require(cell.row >= 0 && cell.col >= 0 && static_cast<std::size_t>(cell.row) < pred.dim(1) &&
                            static_cast<std::size_t>(cell.col) < pred.dim(2),
                        "L1 loss: mask cell outside map");
        for (std::size_t ch = 0; ch < pred.dim(0); ++ch) {
            const double d = pred(ch, cell.row, cell.col) - target(ch, cell.row, cell.col);
            sum += std::fabs(d);
            const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            out.gradient(ch, cell.row, cell.col) += sign * inv_n;
        }
    }
    out.value = sum * inv_n;
    return out;
}

/// The six named parts of the training objective. Missing parts are an error in total_loss.
struct LossParts {
    std::optional<double> center;
    std::optional<double> offset;
    std::optional<double> size;
    std::optional<double> head_reg;
    std::optional<double> head_heatmap;
    std::optional<double> head_offset;
};

inline double total_loss(const LossParts& parts, const LossConfig& cfg = {}) {
    cfg.validate();
    auto get = [](const std::optional<double>& v, const char* name) {
        if (!v) {
            throw Error(std::string("total loss: missing part '") + name + "'");
        }
        if (!(*v >= 0.0)) {
            throw Error(std::string("total loss: part '") + name + "' must be non-negative");
        }
        return *v;
    };
    const double center = get(parts.center, "center");
    const double offset = get(parts.offset, "offset");
    const double size = get(parts.size, "size");
    const double head_reg = get(parts.head_reg, "head_reg");
    const double head_heatmap = get(parts.head_heatmap, "head_heatmap");
    const double head_offset = get(parts.head_offset, "head_offset");
    return center + cfg.lambda_offset * offset + cfg.lambda_size * size + cfg.lambda_head_reg * head_reg +
           cfg.lambda_head_heatmap * head_heatmap + cfg.lambda_head_offset * head_offset;
}

/// Evaluates all six parts for a prediction against encoded targets. Every part is
/// normalised by the annotation count.
inline LossParts detection_losses(const DetectionMaps& pred, const TargetTensors& targets, const LossConfig& cfg = {}) {
    pred.check_shapes();
    const std::size_t n = targets.num_objects();
    const std::vector<Cell> centers = targets.center_cells();
    LossParts parts;
    parts.center = variant_focal_loss(pred.center, targets.maps.center, n, cfg).value;
    parts.offset = masked_l1_loss(pred.center_offset, targets.maps.center_offset, centers, n).value;
    parts.size = masked_l1_loss(pred.size, targets.maps.size, centers, n).value;
    parts.head_reg = masked_l1_loss(pred.head_reg, targets.maps.head_reg, centers, n).value;
    parts.head_heatmap = variant_focal_loss(pred.head, targets.maps.head, n, cfg).value;
    parts.head_offset = masked_l1_loss(pred.head_offset, targets.maps.head_offset, targets.head_peaks, n).value;
    return parts;
}

}  // namespace chpdet

#endif
