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

#ifndef CHPDET_OIM_HPP
#define CHPDET_OIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/tensor.hpp"

/**
 * Orientation-invariant module kernels: active rotating filters (ARF) and
 * oriented response pooling (ORPooling), forward and backward, on small dense
 * arrays.
 *
 * Oriented features are stored N x H x W (orientation channel first). A filter
 * bank is N x k x k: one k x k spatial kernel per input orientation channel.
 */
namespace chpdet::oim {

/// k x k x N active rotating filter. Weights are laid out [n][y][x].
struct Arf {
    int k = 3;
    int orientations = 8;
    std::vector<double> weights;

    static Arf zeros(int k, int orientations) {
        chpdet::detail::require(k >= 1 && k % 2 == 1, "ARF size must be odd, got " + std::to_string(k));
        chpdet::detail::require(orientations >= 1, "ARF needs at least one orientation");
        return {k, orientations,
                std::vector<double>(static_cast<std::size_t>(orientations) * static_cast<std::size_t>(k * k), 0.0)};
    }

    std::size_t index(int n, int y, int x) const {
        return (static_cast<std::size_t>(n) * static_cast<std::size_t>(k) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(k) +
               static_cast<std::size_t>(x);
    }

    double& at(int n, int y, int x) { return weights[index(n, y, x)]; }
    double at(int n, int y, int x) const { return weights[index(n, y, x)]; }

    void validate() const {
        chpdet::detail::require(k >= 1 && k % 2 == 1, "ARF size must be odd, got " + std::to_string(k));
        chpdet::detail::require(orientations >= 1, "ARF needs at least one orientation");
        chpdet::detail::require(weights.size() == static_cast<std::size_t>(orientations * k * k),
                        "ARF weight count does not match k x k x N");
    }
};

struct Tap {
    std::size_t source = 0;
    double weight = 0.0;
};

namespace detail {

/// Position of (u, v) on its square ring of radius r, walking clockwise on screen
/// from the top-left corner. Ring r has 8r cells.
inline int ring_position(int u, int v, int r) {
    if (v == -r && u < r) {
        return u + r;
    }
    if (u == r && v < r) {
        return 2 * r + (v + r);
    }
    if (v == r && u > -r) {
        return 4 * r + (r - u);
    }
    return 6 * r + (r - v);
}

inline void ring_cell(int pos, int r, int& u, int& v) {
    const int side = pos / (2 * r);
    const int step = pos % (2 * r);
    switch (side) {
        case 0: u = -r + step; v = -r; break;
        case 1: u = r; v = -r + step; break;
        case 2: u = r - step; v = r; break;
        default: u = -r; v = r - step; break;
    }
}

}  // namespace detail

/**
 * Linear map from base filter weights to the i-th rotated filter: spatial clockwise
 * rotation by i * 360/N degrees plus a cyclic shift of orientation channels by i,
 * i.e. rotated[n] = spatial_rotate(base[(n - i) mod N]).
 *
 * Multiples of 45 degrees shift each square ring of the kernel by r cells per 45
 * degrees, which is an exact, invertible permutation (and coincides with the exact
 * index rotation at multiples of 90). Other angles sample the base kernel with
 * bilinear interpolation, zero outside the k x k support.
 */
inline std::vector<std::vector<Tap>> rotation_taps(int k, int orientations, int i) {
    chpdet::detail::require(orientations >= 1, "ARF needs at least one orientation");
    if (i < 0 || i >= orientations) {
        throw Error("rotation index " + std::to_string(i) + " out of range [0," + std::to_string(orientations) + ")");
    }
    const int c = (k - 1) / 2;
    const std::size_t kk = static_cast<std::size_t>(k * k);
    std::vector<std::vector<Tap>> spatial(kk);

    if ((i * 8) % orientations == 0) {
        const int eighths = i * 8 / orientations;
        for (int y = 0; y < k; ++y) {
            for (int x = 0; x < k; ++x) {
                const int u = x - c;
                const int v = y - c;
                const int r = std::max(std::abs(u), std::abs(v));
                int su = 0;
                int sv = 0;
                if (r > 0) {
                    const int ring = 8 * r;
                    const int pos = detail::ring_position(u, v, r);
                    const int src = ((pos - eighths * r) % ring + ring) % ring;
                    detail::ring_cell(src, r, su, sv);
                }
                spatial[static_cast<std::size_t>(y * k + x)].push_back(
                    {static_cast<std::size_t>((sv + c) * k + (su + c)), 1.0});
            }
        }
    } else {
        const double phi = 2.0 * std::numbers::pi * i / orientations;
        const double cs = std::cos(phi);
        const double sn = std::sin(phi);
        for (int y = 0; y < k; ++y) {
            for (int x = 0; x < k; ++x) {
                const double u = x - c;
                const double v = y - c;
                // Inverse of the clockwise (y-down) rotation.
                const double sx = u * cs + v * sn + c;
                const double sy = -u * sn + v * cs + c;
                const int x0 = static_cast<int>(std::floor(sx));
                const int y0 = static_cast<int>(std::floor(sy));
                const double fx = sx - x0;
                const double fy = sy - y0;
                auto& taps = spatial[static_cast<std::size_t>(y * k + x)];
                const int xs[2] = {x0, x0 + 1};
                const int ys[2] = {y0, y0 + 1};
                const double wx[2] = {1.0 - fx, fx};
                const double wy[2] = {1.0 - fy, fy};
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        const double w = wy[a] * wx[b];
                        if (w == 0.0 || xs[b] < 0 || xs[b] >= k || ys[a] < 0 || ys[a] >= k) {
                            continue;
                        }
                        taps.push_back({static_cast<std::size_t>(ys[a] * k + xs[b]), w});
                    }
                }
            }
        }
    }

    std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(orientations) * kk);
    for (int n = 0; n < orientations; ++n) {
        const std::size_t src_channel = static_cast<std::size_t>(((n - i) % orientations + orientations) % orientations);
        for (std::size_t s = 0; s < kk; ++s) {
            auto& dst = taps[static_cast<std::size_t>(n) * kk + s];
            for (const Tap& t : spatial[s]) {
                dst.push_back({src_channel * kk + t.source, t.weight});
            }
        }
    }
    return taps;
}

inline Arf apply_taps(const Arf& f, const std::vector<std::vector<Tap>>& taps) {
    Arf out = Arf::zeros(f.k, f.orientations);
    for (std::size_t d = 0; d < taps.size(); ++d) {
        double acc = 0.0;
        for (const Tap& t : taps[d]) {
            acc += t.weight * f.weights[t.source];
        }
        out.weights[d] = acc;
    }
    return out;
}

/// The i-th instantiation of an ARF, 0 <= i < N.
inline Arf rotate_filter(const Arf& f, int i) {
    f.validate();
    return apply_taps(f, rotation_taps(f.k, f.orientations, i));
}

namespace detail {

inline void check_feature(const Map& input, const Arf& f) {
    f.validate();
    chpdet::detail::require(input.rank() == 3, "oriented feature must be N x H x W, got " + shape_string(input.shape()));
    if (input.dim(0) != static_cast<std::size_t>(f.orientations)) {
        throw Error("channel mismatch: feature has " + std::to_string(input.dim(0)) + " orientation channels, ARF has " +
                    std::to_string(f.orientations));
    }
}

}  // namespace detail

/**
 * Output channel i is sum_n correlate(input[n], rotate_filter(f, i)[n]) with zero
 * "same" padding. Output has N orientation channels.
 */
inline Map arf_convolve(const Map& input, const Arf& f) {
    detail::check_feature(input, f);
    const int n_or = f.orientations;
    const int k = f.k;
    const int c = (k - 1) / 2;
    const long rows = static_cast<long>(input.dim(1));
    const long cols = static_cast<long>(input.dim(2));
    Map out({input.dim(0), input.dim(1), input.dim(2)});
    for (int i = 0; i < n_or; ++i) {
        const Arf g = rotate_filter(f, i);
        for (long y = 0; y < rows; ++y) {
            for (long x = 0; x < cols; ++x) {
                double acc = 0.0;
                for (int n = 0; n < n_or; ++n) {
                    for (int a = 0; a < k; ++a) {
                        const long yy = y + a - c;
                        if (yy < 0 || yy >= rows) {
                            continue;
                        }
                        for (int b = 0; b < k; ++b) {
                            const long xx = x + b - c;
                            if (xx < 0 || xx >= cols) {
                                continue;
                            }
                            acc += g.at(n, a, b) * input(n, yy, xx);
                        }
                    }
                }
                out(i, y, x) = acc;
            }
        }
    }
    return out;
}

struct ArfGradients {
    Map input;
    Arf weights;
};

/// Gradients of sum(grad_output * arf_convolve(input, f)) with respect to input and base weights.
inline ArfGradients arf_convolve_backward(const Map& input, const Arf& f, const Map& grad_output) {
    detail::check_feature(input, f);
    if (grad_output.shape() != input.shape()) {
        throw Error("grad_output shape " + shape_string(grad_output.shape()) + " does not match output shape " +
                    shape_string(input.shape()));
    }
    const int n_or = f.orientations;
    const int k = f.k;
    const int c = (k - 1) / 2;
    const long rows = static_cast<long>(input.dim(1));
    const long cols = static_cast<long>(input.dim(2));
    ArfGradients grads{Map(input.shape()), Arf::zeros(k, n_or)};
    for (int i = 0; i < n_or; ++i) {
        const auto taps = rotation_taps(k, n_or, i);
        const Arf g = apply_taps(f, taps);
        Arf grad_g = Arf::zeros(k, n_or);
        for (long y = 0; y < rows; ++y) {
            for (long x = 0; x < cols; ++x) {
                const double go = grad_output(i, y, x);
                if (go == 0.0) {
                    continue;
                }
                for (int n = 0; n < n_or; ++n) {
                    for (int a = 0; a < k; ++a) {
                        const long yy = y + a - c;
                        if (yy < 0 || yy >= rows) {
                            continue;
                        }
                        for (int b = 0; b < k; ++b) {
                            const long xx = x + b - c;
                            if (xx < 0 || xx >= cols) {
                                continue;
                            }
                            grads.input(n, yy, xx) += go * g.at(n, a, b);
                            grad_g.at(n, a, b) += go * input(n, yy, xx);
                        }
                    }
                }
            }
        }
        for (std::size_t d = 0; d < taps.size(); ++d) {
            for (const Tap& t : taps[d]) {
                grads.weights.weights[t.source] += t.weight * grad_g.weights[d];
            }
        }
    }
    return grads;
}

/// Pixelwise maximum over orientation channels; returns a 1 x H x W map.
inline Map orpool(const Map& input) {
    chpdet::detail::require(input.rank() == 3 && input.dim(0) >= 1,
                            "orpool expects N x H x W with N >= 1, got " + shape_string(input.shape()));
    const std::size_t n_or = input.dim(0);
    const std::size_t plane = input.dim(1) * input.dim(2);
    Map out({1, input.dim(1), input.dim(2)});
    for (std::size_t p = 0; p < plane; ++p) {
        double best = input[p];
        for (std::size_t n = 1; n < n_or; ++n) {
            best = std::max(best, input[n * plane + p]);
        }
        out[p] = best;
    }
    return out;
}

/// Routes each pooled gradient to the arg-max channel, lowest index on ties.
inline Map orpool_backward(const Map& input, const Map& grad_output) {
    chpdet::detail::require(input.rank() == 3 && input.dim(0) >= 1, "orpool expects N x H x W");
    chpdet::detail::require(grad_output.shape() == std::vector<std::size_t>{1, input.dim(1), input.dim(2)},
                            "orpool grad_output must be 1 x H x W");
    const std::size_t n_or = input.dim(0);
    const std::size_t plane = input.dim(1) * input.dim(2);
    Map grad(input.shape());
    for (std::size_t p = 0; p < plane; ++p) {
        std::size_t arg = 0;
        for (std::size_t n = 1; n < n_or; ++n) {
            if (input[n * plane + p] > input[arg * plane + p]) {
                arg = n;
            }
        }
        grad[arg * plane + p] = grad_output[p];
    }
    return grad;
}

}  // namespace chpdet::oim

#endif
