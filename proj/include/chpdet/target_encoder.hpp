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

#ifndef CHPDET_TARGET_ENCODER_HPP
#define CHPDET_TARGET_ENCODER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"
#include "chpdet/tensor.hpp"

namespace chpdet {

struct EncodingConfig {
    int stride = 4;
    double alpha = 1.2;
    int num_classes = 1;
    double gaussian_min_overlap = 0.7;
    int input_w = 512;
    int input_h = 512;

    int map_w() const { return input_w / stride; }
    int map_h() const { return input_h / stride; }

    void validate() const {
        detail::require(stride >= 1, "stride must be >= 1");
        detail::require(input_w > 0 && input_h > 0, "input size must be positive");
        detail::require(input_w % stride == 0 && input_h % stride == 0,
                        "input size " + std::to_string(input_w) + "x" + std::to_string(input_h) +
                            " is not divisible by stride " + std::to_string(stride));
        detail::require(alpha > 0.0, "alpha must be positive");
        detail::require(num_classes >= 1, "num_classes must be >= 1");
        detail::require(gaussian_min_overlap > 0.0 && gaussian_min_overlap < 1.0,
                        "gaussian_min_overlap must lie in (0,1)");
    }
};

/// 2x2 symmetric matrix stored row-major: {a, b, b, d}.
using Mat2 = std::array<double, 4>;

inline Mat2 mat2_mul(const Mat2& l, const Mat2& r) {
    return {l[0] * r[0] + l[1] * r[2], l[0] * r[1] + l[1] * r[3], l[2] * r[0] + l[3] * r[2],
            l[2] * r[1] + l[3] * r[3]};
}

/// Rotated Gaussian shape: sqrt_sigma = R diag(sigma_x, sigma_y) R^T, sigma = sqrt_sigma^2.
/// sigma_x runs along the box width, sigma_y along its length.
struct CovarianceKernel {
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    double theta = 0.0;
    Mat2 sqrt_sigma{};
    Mat2 sigma{};

    static CovarianceKernel from_sigmas(double sigma_x, double sigma_y, double theta_deg) {
        detail::require(sigma_x > 0.0 && sigma_y > 0.0, "kernel sigmas must be positive");
        const double t = theta_deg * kDegToRad;
        const double c = std::cos(t);
        const double s = std::sin(t);
        const Mat2 rot{c, -s, s, c};
        const Mat2 rot_t{c, s, -s, c};
        const Mat2 scale{sigma_x, 0.0, 0.0, sigma_y};
        CovarianceKernel k;
        k.sigma_x = sigma_x;
        k.sigma_y = sigma_y;
        k.theta = theta_deg;
        k.sqrt_sigma = mat2_mul(mat2_mul(rot, scale), rot_t);
        k.sigma = mat2_mul(k.sqrt_sigma, k.sqrt_sigma);
        return k;
    }

    Mat2 inverse_sigma() const {
        const double det = sigma[0] * sigma[3] - sigma[1] * sigma[2];
        return {sigma[3] / det, -sigma[1] / det, -sigma[2] / det, sigma[0] / det};
    }
};

/**
 * Largest shift radius that keeps a w x h box above `min_overlap` IoU with the
 * original, taking the worst of the three corner-perturbation cases (one corner
 * in / one out, both in, both out). Each case is the smaller non-negative root
 * of its quadratic.
 */
inline double gaussian_radius(double w, double h, double min_overlap) {
    detail::require(w > 0.0 && h > 0.0, "gaussian radius needs positive dimensions");
    const double sum = w + h;
    const double area = w * h;
    const double mo = min_overlap;

    // (w - r)(h - r) / (2wh - (w - r)(h - r)) = mo
    const double c1 = area * (1.0 - mo) / (1.0 + mo);
    const double r1 = 0.5 * (sum - std::sqrt(sum * sum - 4.0 * c1));

    // (w - 2r)(h - 2r) / wh = mo
    const double disc2 = 4.0 * sum * sum - 16.0 * (1.0 - mo) * area;
    const double r2 = (2.0 * sum - std::sqrt(disc2)) / 8.0;

    // wh / ((w + 2r)(h + 2r)) = mo
    const double disc3 = 4.0 * mo * mo * sum * sum + 16.0 * mo * (1.0 - mo) * area;
    const double r3 = (-2.0 * mo * sum + std::sqrt(disc3)) / (8.0 * mo);

    return std::min({r1, r2, r3});
}

/// Size-adaptive standard deviation at map scale: one third of the gaussian radius.
inline double size_adaptive_sigma(double w, double h, double min_overlap) {
    return gaussian_radius(w, h, min_overlap) / 3.0;
}

/// sigma_x = alpha * sigma_p * w / sqrt(wh), sigma_y = alpha * sigma_p * h / sqrt(wh).
inline CovarianceKernel gaussian_covariance(double w, double h, double theta_deg, double alpha, double min_overlap) {
    if (!(w > 0.0) || !(h > 0.0)) {
        throw Error("gaussian_covariance: non-positive dimensions");
    }
    const double sigma_p = size_adaptive_sigma(w, h, min_overlap);
    const double geo = std::sqrt(w * h);
    return CovarianceKernel::from_sigmas(alpha * sigma_p * w / geo, alpha * sigma_p * h / geo, theta_deg);
}

/// Integer cell holding a keypoint: floor of the map-scale coordinate.
struct Cell {
    int row = 0;
    int col = 0;

    bool operator==(const Cell&) const = default;
    auto operator<=>(const Cell&) const = default;
};

inline Cell cell_of(const Point& map_point) {
    return {static_cast<int>(std::floor(map_point.y)), static_cast<int>(std::floor(map_point.x))};
}

/**
 * Max-merges exp(-0.5 (p - m)^T Sigma^-1 (p - m)) into `channel` over the 3-sigma
 * bounding box of the kernel and pins the peak cell floor(m) to exactly 1.
 * Cell (r, c) is evaluated at the point (c, r).
 */
inline void splat_rotated_gaussian(GridView<double> channel, const CovarianceKernel& kernel, const Point& center) {
    const Cell peak = cell_of(center);
    detail::require(channel.contains(peak.row, peak.col), "splat center outside map bounds");
    const Mat2 inv = kernel.inverse_sigma();
    const double ex = 3.0 * std::sqrt(kernel.sigma[0]);
    const double ey = 3.0 * std::sqrt(kernel.sigma[3]);
    const long c0 = std::max(0L, static_cast<long>(std::ceil(center.x - ex)));
    const long c1 = std::min(static_cast<long>(channel.cols()) - 1, static_cast<long>(std::floor(center.x + ex)));
    const long r0 = std::max(0L, static_cast<long>(std::ceil(center.y - ey)));
    const long r1 = std::min(static_cast<long>(channel.rows()) - 1, static_cast<long>(std::floor(center.y + ey)));
    for (long r = r0; r <= r1; ++r) {
        const double dy = static_cast<double>(r) - center.y;
        for (long c = c0; c <= c1; ++c) {
            const double dx = static_cast<double>(c) - center.x;
            const double q = inv[0] * dx * dx + 2.0 * inv[1] * dx * dy + inv[3] * dy * dy;
            double& cell = channel(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            cell = std::max(cell, std::exp(-0.5 * q));
        }
    }
    channel(static_cast<std::size_t>(peak.row), static_cast<std::size_t>(peak.col)) = 1.0;
}

/// The six dense maps shared by targets and predictions. Two-channel maps hold (x, y)
/// in channels (0, 1); `size` holds (w, h).
struct DetectionMaps {
    Map center;         // C x H x W
    Map center_offset;  // 2 x H x W
    Map size;           // 2 x H x W
    Map head_reg;       // 2 x H x W
    Map head;           // 1 x H x W
    Map head_offset;    // 2 x H x W

    static DetectionMaps zeros(std::size_t num_classes, std::size_t rows, std::size_t cols) {
        return {Map({num_classes, rows, cols}), Map({2, rows, cols}), Map({2, rows, cols}),
                Map({2, rows, cols}),           Map({1, rows, cols}), Map({2, rows, cols})};
    }

    std::size_t rows() const { return center.rank() == 3 ? center.dim(1) : 0; }
    std::size_t cols() const { return center.rank() == 3 ? center.dim(2) : 0; }
    std::size_t num_classes() const { return center.rank() == 3 ? center.dim(0) : 0; }

    /// Throws if the maps disagree on spatial size or channel counts.
    void check_shapes() const {
        detail::require(center.rank() == 3 && center.dim(0) >= 1,
                        "center map must be C x H x W, got " + shape_string(center.shape()));
        const std::size_t rows_ = center.dim(1);
        const std::size_t cols_ = center.dim(2);
        auto check = [&](const Map& m, std::size_t channels, const char* name) {
            const std::vector<std::size_t> expected{channels, rows_, cols_};
            if (m.shape() != expected) {
                throw Error(std::string("dimension mismatch: ") + name + " is " + shape_string(m.shape()) +
                            ", expected " + shape_string(expected));
            }
        };
        check(center_offset, 2, "center_offset");
        check(size, 2, "size");
        check(head_reg, 2, "head_reg");
        check(head, 1, "head");
        check(head_offset, 2, "head_offset");
    }
};

struct MaskEntry {
    int class_id = 0;
    Cell cell;

    bool operator==(const MaskEntry&) const = default;
};

struct TargetTensors {
    DetectionMaps maps;
    /// One entry per annotated object, in annotation order.
    std::vector<MaskEntry> positive_mask;
    /// Head keypoint cell per annotated object, in annotation order.
    std::vector<Cell> head_peaks;
    std::vector<std::string> warnings;

    std::size_t num_objects() const { return positive_mask.size(); }

    std::vector<Cell> center_cells() const {
        std::vector<Cell> cells;
        cells.reserve(positive_mask.size());
        for (const MaskEntry& e : positive_mask) {
            cells.push_back(e.cell);
        }
        return cells;
    }
};

/**
 * Builds the six training targets for one image.
 *
 * At each object's center cell c = floor(center / S): center_offset = center/S - c,
 * size = (w, h)/S, head_reg = head/S - c, so (c + head_reg) * S lands on the
 * annotated head. The head map gets an isotropic Gaussian with sigma_p at head/S,
 * and head_offset = head/S - floor(head/S) is written at the head cell.
 */
inline TargetTensors encode_targets(std::span<const ChpBox> annotations, const EncodingConfig& cfg) {
    cfg.validate();
    const auto rows = static_cast<std::size_t>(cfg.map_h());
    const auto cols = static_cast<std::size_t>(cfg.map_w());
    const double s = cfg.stride;

    TargetTensors out;
    out.maps = DetectionMaps::zeros(static_cast<std::size_t>(cfg.num_classes), rows, cols);
    DetectionMaps& m = out.maps;
    std::vector<std::vector<char>> written(static_cast<std::size_t>(cfg.num_classes), std::vector<char>(rows * cols, 0));

    for (std::size_t k = 0; k < annotations.size(); ++k) {
        const ChpBox& b = annotations[k];
        validate(b);
        if (b.class_id < 0 || b.class_id >= cfg.num_classes) {
            throw Error("annotation " + std::to_string(k) + ": class " + std::to_string(b.class_id) +
                        " out of range [0," + std::to_string(cfg.num_classes) + ")");
        }
        if (!(b.cx >= 0.0 && b.cx < cfg.input_w && b.cy >= 0.0 && b.cy < cfg.input_h)) {
            throw Error("annotation " + std::to_string(k) + ": center (" + std::to_string(b.cx) + ", " +
                        std::to_string(b.cy) + ") outside image");
        }
        const RBox r = chp_to_rbox(b);
        const double mw = b.w / s;
        const double mh = b.h / s;
        const Point center{b.cx / s, b.cy / s};
        const Cell cell = cell_of(center);

        const CovarianceKernel kernel = gaussian_covariance(mw, mh, r.theta, cfg.alpha, cfg.gaussian_min_overlap);
        splat_rotated_gaussian(m.center.channel(static_cast<std::size_t>(b.class_id)), kernel, center);

        const auto rr = static_cast<std::size_t>(cell.row);
        const auto cc = static_cast<std::size_t>(cell.col);
        char& seen = written[static_cast<std::size_t>(b.class_id)][rr * cols + cc];
        if (seen) {
            out.warnings.push_back("annotation " + std::to_string(k) + ": class " + std::to_string(b.class_id) +
                                   " center cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                                   ") already used; regression targets overwritten");
        }
        seen = 1;

        m.center_offset(0, rr, cc) = center.x - cell.col;
        m.center_offset(1, rr, cc) = center.y - cell.row;
        m.size(0, rr, cc) = mw;
        m.size(1, rr, cc) = mh;
        const Point head{b.hx / s, b.hy / s};
        m.head_reg(0, rr, cc) = head.x - cell.col;
        m.head_reg(1, rr, cc) = head.y - cell.row;
        out.positive_mask.push_back({b.class_id, cell});

        // A head on the image border can floor to one past the last cell.
        Cell head_cell = cell_of(head);
        head_cell.row = std::clamp(head_cell.row, 0, static_cast<int>(rows) - 1);
        head_cell.col = std::clamp(head_cell.col, 0, static_cast<int>(cols) - 1);
        const double sigma_p = size_adaptive_sigma(mw, mh, cfg.gaussian_min_overlap);
        const CovarianceKernel head_kernel = CovarianceKernel::from_sigmas(sigma_p, sigma_p, 0.0);
        const Point head_center{std::clamp(head.x, 0.0, static_cast<double>(cols) - 1.0),
                                std::clamp(head.y, 0.0, static_cast<double>(rows) - 1.0)};
        splat_rotated_gaussian(m.head.channel(0), head_kernel, head_center);
        m.head.channel(0)(static_cast<std::size_t>(head_cell.row), static_cast<std::size_t>(head_cell.col)) = 1.0;
        m.head_offset(0, head_cell.row, head_cell.col) = head.x - head_cell.col;
        m.head_offset(1, head_cell.row, head_cell.col) = head.y - head_cell.row;
        out.head_peaks.push_back(head_cell);
    }
    return out;
}

}  // namespace chpdet

#endif
