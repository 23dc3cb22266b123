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

#ifndef CHPDET_GEOMETRY_HPP
#define CHPDET_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "chpdet/error.hpp"

/**
 * Box representations for oriented ships.
 *
 * Coordinates are image pixels with x to the right and y down. Headings are
 * degrees in [0, 360), measured clockwise from image-up to the center->head
 * vector, so 0 points "north" and 90 points to the right.
 */
namespace chpdet {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

/// Flags recorded on decoded boxes.
enum BoxFlags : std::uint32_t {
    kFlagNone = 0,
    /// No head peak passed the threshold; the regressed head was used as-is.
    kFlagHeadFallback = 1u << 0,
    /// Decoded head coincided with the center and was nudged by 1e-6 px in +y.
    kFlagHeadPerturbed = 1u << 1,
};

/// Center, width (short side), length (long side), head point, class and score.
struct ChpBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double hx = 0.0;
    double hy = 0.0;
    int class_id = 0;
    double score = 1.0;
    std::uint32_t flags = kFlagNone;

    Point center() const { return {cx, cy}; }
    Point head() const { return {hx, hy}; }

    bool operator==(const ChpBox&) const = default;
};

/// Rotated rectangle with heading `theta` in degrees, [0, 360).
struct RBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double theta = 0.0;

    bool operator==(const RBox&) const = default;
};

/// Rectangle corners, clockwise on screen starting from the bow-left corner:
/// front-left, front-right, back-right, back-left.
struct Quad {
    std::array<Point, 4> vertices;
};

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// Intersections below this area are treated as empty.
inline constexpr double kEmptyArea = 1e-12;

inline double normalize_degrees(double theta) {
    double t = std::fmod(theta, 360.0);
    if (t < 0.0) {
        t += 360.0;
    }
    if (t >= 360.0) {
        t = 0.0;
    }
    return t;
}

/// Minimal circular difference on the full circle, in [0, 180]. Bow and stern are distinct.
inline double angle_diff(double t1, double t2) {
    const double d = std::fmod(std::fabs(t1 - t2), 360.0);
    return std::min(d, 360.0 - d);
}

inline void validate(const ChpBox& b) {
    if (!(b.w > 0.0) || !(b.h > 0.0)) {
        throw Error("box dimensions must be positive (w=" + std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")");
    }
    if (!(b.score >= 0.0 && b.score <= 1.0)) {
        throw Error("box score must lie in [0,1], got " + std::to_string(b.score));
    }
    if (b.hx == b.cx && b.hy == b.cy) {
        throw Error("zero-length heading: head point coincides with center");
    }
}

inline void validate(const RBox& r) {
    if (!(r.w > 0.0) || !(r.h > 0.0)) {
        throw Error("box dimensions must be positive (w=" + std::to_string(r.w) + ", h=" + std::to_string(r.h) + ")");
    }
    if (!(r.theta >= 0.0 && r.theta < 360.0)) {
        throw Error("rbox theta must lie in [0,360), got " + std::to_string(r.theta));
    }
}

inline RBox chp_to_rbox(const ChpBox& b) {
    if (b.hx == b.cx && b.hy == b.cy) {
        throw Error("zero-length heading: head point coincides with center");
    }
    const double theta = std::atan2(b.hx - b.cx, b.cy - b.hy) * kRadToDeg;
    return {b.cx, b.cy, b.w, b.h, normalize_degrees(theta)};
}

/// Head is placed at the midpoint of the front short edge.
inline ChpBox rbox_to_chp(const RBox& r, int class_id = 0, double score = 1.0) {
    validate(r);
    const double t = r.theta * kDegToRad;
    ChpBox b;
    b.cx = r.cx;
    b.cy = r.cy;
    b.w = r.w;
    b.h = r.h;
    b.hx = r.cx + 0.5 * r.h * std::sin(t);
    b.hy = r.cy - 0.5 * r.h * std::cos(t);
    b.class_id = class_id;
    b.score = score;
    return b;
}

/// Same rectangle with the heading folded into [0, 180); used where bow direction is irrelevant.
inline RBox reduce_half_turn(const RBox& r) {
    RBox out = r;
    out.theta = std::fmod(normalize_degrees(r.theta), 180.0);
    return out;
}

inline Quad rbox_to_quad(const RBox& r) {
    const double t = r.theta * kDegToRad;
    const double s = std::sin(t);
    const double c = std::cos(t);
    // Unit heading (bow) and unit starboard (to the right of the heading on screen).
    const Point fwd{s, -c};
    const Point right{c, s};
    const double hl = 0.5 * r.h;
    const double hw = 0.5 * r.w;
    auto corner = [&](double along, double across) {
        return Point{r.cx + along * fwd.x + across * right.x, r.cy + along * fwd.y + across * right.y};
    };
    return Quad{{corner(hl, -hw), corner(hl, hw), corner(-hl, hw), corner(-hl, -hw)}};
}

/// Inverse of rbox_to_quad: width from the front edge, length from the starboard edge,
/// heading from the center towards the front-edge midpoint.
inline RBox quad_to_rbox(const Quad& q) {
    const auto& v = q.vertices;
    const double cx = 0.25 * (v[0].x + v[1].x + v[2].x + v[3].x);
    const double cy = 0.25 * (v[0].y + v[1].y + v[2].y + v[3].y);
    const double w = std::hypot(v[1].x - v[0].x, v[1].y - v[0].y);
    const double h = std::hypot(v[2].x - v[1].x, v[2].y - v[1].y);
    const double fx = 0.5 * (v[0].x + v[1].x);
    const double fy = 0.5 * (v[0].y + v[1].y);
    const double theta = normalize_degrees(std::atan2(fx - cx, cy - fy) * kRadToDeg);
    return {cx, cy, w, h, theta};
}

/// Shoelace area; positive for the vertex order produced by rbox_to_quad.
inline double signed_area(std::span<const Point> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) {
        return 0.0;
    }
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = polygon[i];
        const Point& b = polygon[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

namespace detail {

inline double cross(const Point& a, const Point& b, const Point& p) {
    return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

inline Point segment_line_intersection(const Point& p, const Point& q, const Point& a, const Point& b) {
    const double dp = cross(a, b, p);
    const double dq = cross(a, b, q);
    const double t = dp / (dp - dq);
    return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

}  // namespace detail

/// Sutherland-Hodgman clipping of `subject` by the convex, positively oriented `clip`.
inline std::vector<Point> clip_convex(std::span<const Point> subject, std::span<const Point> clip) {
    std::vector<Point> output(subject.begin(), subject.end());
    const std::size_t m = clip.size();
    for (std::size_t e = 0; e < m && !output.empty(); ++e) {
        const Point& a = clip[e];
        const Point& b = clip[(e + 1) % m];
        std::vector<Point> input;
        input.swap(output);
        const std::size_t n = input.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& cur = input[i];
            const Point& prev = input[(i + n - 1) % n];
            const double dc = detail::cross(a, b, cur);
            const double dp = detail::cross(a, b, prev);
            if (dc >= 0.0) {
                if (dp < 0.0) {
                    output.push_back(detail::segment_line_intersection(prev, cur, a, b));
                }
                output.push_back(cur);
            } else if (dp >= 0.0) {
                output.push_back(detail::segment_line_intersection(prev, cur, a, b));
            }
        }
    }
    return output;
}

/// Exact rotated IoU via polygon clipping of the corner quads.
inline double rotated_iou(const RBox& a, const RBox& b) {
    const Quad qa = rbox_to_quad(a);
    const Quad qb = rbox_to_quad(b);
    const double area_a = a.w * a.h;
    const double area_b = b.w * b.h;
    const std::vector<Point> inter = clip_convex(qa.vertices, qb.vertices);
    const double inter_area = std::fabs(signed_area(inter));
    if (inter_area < kEmptyArea) {
        return 0.0;
    }
    const double uni = area_a + area_b - inter_area;
    if (uni <= 0.0) {
        return 0.0;
    }
    return std::clamp(inter_area / uni, 0.0, 1.0);
}

inline double rotated_iou(const ChpBox& a, const ChpBox& b) { return rotated_iou(chp_to_rbox(a), chp_to_rbox(b)); }

namespace detail {

inline bool inside_convex(const Quad& q, const Point& p) {
    for (std::size_t i = 0; i < 4; ++i) {
        if (cross(q.vertices[i], q.vertices[(i + 1) % 4], p) < 0.0) {
            return false;
        }
    }
    return true;
}

}  // namespace detail

/// Brute-force IoU by sampling a grid x grid lattice over the joint bounding box.
/// Independent of the clipping path; meant for cross-checking rotated_iou.
inline double rotated_iou_raster(const RBox& a, const RBox& b, int grid) {
    if (grid < 64) {
        throw Error("raster IoU needs grid >= 64, got " + std::to_string(grid));
    }
    const Quad qa = rbox_to_quad(a);
    const Quad qb = rbox_to_quad(b);
    double x0 = qa.vertices[0].x;
    double x1 = x0;
    double y0 = qa.vertices[0].y;
    double y1 = y0;
    for (const Quad* q : {&qa, &qb}) {
        for (const Point& p : q->vertices) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    }
    const double dx = (x1 - x0) / grid;
    const double dy = (y1 - y0) / grid;
    long in_a = 0;
    long in_b = 0;
    long in_both = 0;
    for (int j = 0; j < grid; ++j) {
        const double y = y0 + (j + 0.5) * dy;
        for (int i = 0; i < grid; ++i) {
            const Point p{x0 + (i + 0.5) * dx, y};
            const bool ia = detail::inside_convex(qa, p);
            const bool ib = detail::inside_convex(qb, p);
            in_a += ia;
            in_b += ib;
            in_both += ia && ib;
        }
    }
    const long either = in_a + in_b - in_both;
    return either == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(either);
}

}  // namespace chpdet

#endif
