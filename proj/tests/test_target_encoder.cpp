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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chpdet/target_encoder.hpp"
#include "support/oracles.hpp"

namespace {

using chpdet::ChpBox;
using chpdet::CovarianceKernel;
using chpdet::Map;

void expect_mat(const chpdet::Mat2& m, double a, double b, double d) {
    EXPECT_NEAR(m[0], a, 1e-12);
    EXPECT_NEAR(m[1], b, 1e-12);
    EXPECT_NEAR(m[2], b, 1e-12);
    EXPECT_NEAR(m[3], d, 1e-12);
}

ChpBox ship(double cx, double cy, double w, double h, double theta, int cls = 0) {
    return chpdet::rbox_to_chp({cx, cy, w, h, theta}, cls);
}

TEST(Covariance, IdentityRotation) { expect_mat(CovarianceKernel::from_sigmas(2, 1, 0).sqrt_sigma, 2, 0, 1); }

TEST(Covariance, QuarterTurnSwapsAxes) {
    expect_mat(CovarianceKernel::from_sigmas(2, 1, 90).sqrt_sigma, 1, 0, 2);
}

TEST(Covariance, FortyFive) { expect_mat(CovarianceKernel::from_sigmas(2, 1, 45).sqrt_sigma, 1.5, 0.5, 1.5); }

TEST(Covariance, SigmaIsSquareOfRoot) {
    const auto k = CovarianceKernel::from_sigmas(3, 0.5, 33);
    const double det = k.sigma[0] * k.sigma[3] - k.sigma[1] * k.sigma[2];
    EXPECT_NEAR(det, std::pow(3 * 0.5, 2), 1e-9);
    EXPECT_NEAR(k.sigma[0] + k.sigma[3], 9 + 0.25, 1e-9);
}

TEST(Covariance, SizeAdaptiveScaling) {
    const double w = 4;
    const double h = 16;
    const double sp = chpdet::size_adaptive_sigma(w, h, 0.7);
    const auto k = chpdet::gaussian_covariance(w, h, 0, 1.2, 0.7);
    EXPECT_NEAR(k.sigma_x, 1.2 * sp * w / 8.0, 1e-12);
    EXPECT_NEAR(k.sigma_y, 1.2 * sp * h / 8.0, 1e-12);
    EXPECT_NEAR(k.sigma_x * k.sigma_y, 1.44 * sp * sp, 1e-12);
}

TEST(Covariance, NonPositiveSizeRejected) {
    EXPECT_THROW(chpdet::gaussian_covariance(0, 3, 0, 1.2, 0.7), chpdet::Error);
}

TEST(GaussianRadius, BoxesShiftedByRadiusKeepMinOverlap) {
    // Every configuration solved for must reach at least the requested IoU.
    for (double w : {2.0, 5.0, 13.0}) {
        for (double h : {3.0, 9.0, 40.0}) {
            const double r = chpdet::gaussian_radius(w, h, 0.7);
            EXPECT_GT(r, 0.0);
            const double shifted = (w - r) * (h - r) / (2 * w * h - (w - r) * (h - r));
            const double shrunk = (w - 2 * r) * (h - 2 * r) / (w * h);
            const double grown = w * h / ((w + 2 * r) * (h + 2 * r));
            EXPECT_GE(std::min({shifted, shrunk, grown}), 0.7 - 1e-9);
            EXPECT_NEAR(std::min({shifted, shrunk, grown}), 0.7, 1e-9);
        }
    }
}

TEST(Splat, PeakIsOne) {
    Map m({1, 32, 32});
    chpdet::splat_rotated_gaussian(m.channel(0), CovarianceKernel::from_sigmas(2, 1, 30), {10.3, 12.8});
    EXPECT_EQ(m(0, 12, 10), 1.0);
    for (double v : m.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Splat, OverlapIsPixelwiseMax) {
    const auto ka = CovarianceKernel::from_sigmas(3, 1, 20);
    const auto kb = CovarianceKernel::from_sigmas(2, 2, 70);
    Map a({1, 40, 40});
    Map b({1, 40, 40});
    Map both({1, 40, 40});
    chpdet::splat_rotated_gaussian(a.channel(0), ka, {15.2, 18.7});
    chpdet::splat_rotated_gaussian(b.channel(0), kb, {19.6, 20.1});
    chpdet::splat_rotated_gaussian(both.channel(0), ka, {15.2, 18.7});
    chpdet::splat_rotated_gaussian(both.channel(0), kb, {19.6, 20.1});
    for (std::size_t i = 0; i < both.size(); ++i) {
        EXPECT_EQ(both[i], std::max(a[i], b[i]));
    }
}

TEST(Splat, HalfTurnIsSameKernel) {
    Map a({1, 32, 32});
    Map b({1, 32, 32});
    chpdet::splat_rotated_gaussian(a.channel(0), chpdet::gaussian_covariance(3, 9, 25, 1.2, 0.7), {16.4, 15.1});
    chpdet::splat_rotated_gaussian(b.channel(0), chpdet::gaussian_covariance(3, 9, 205, 1.2, 0.7), {16.4, 15.1});
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-12);
    }
}

TEST(Splat, MatchesClosedFormInsideSupport) {
    const auto k = CovarianceKernel::from_sigmas(2.5, 1.2, 60);
    Map m({1, 30, 30});
    const chpdet::Point c{14.3, 13.6};
    chpdet::splat_rotated_gaussian(m.channel(0), k, c);
    // Density of N(c, sigma) scaled to unit peak, evaluated in the kernel's own frame.
    const double t = 60 * chpdet::kDegToRad;
    for (int r = 10; r < 18; ++r) {
        for (int col = 10; col < 18; ++col) {
            if (r == 13 && col == 14) {
                continue;
            }
            const double dx = col - c.x;
            const double dy = r - c.y;
            const double u = dx * std::cos(t) + dy * std::sin(t);
            const double v = -dx * std::sin(t) + dy * std::cos(t);
            const double expected = std::exp(-0.5 * (u * u / (2.5 * 2.5) + v * v / (1.2 * 1.2)));
            EXPECT_NEAR(m(0, r, col), expected, 1e-12);
        }
    }
}

TEST(Encode, CenteredShip) {
    const ChpBox b = ship(256, 256, 20, 80, 30);
    const auto t = chpdet::encode_targets(std::vector{b}, {});
    ASSERT_EQ(t.positive_mask.size(), 1u);
    EXPECT_EQ(t.positive_mask[0].cell, (chpdet::Cell{64, 64}));
    EXPECT_EQ(t.maps.center(0, 64, 64), 1.0);
    EXPECT_EQ(t.maps.center_offset(0, 64, 64), 0.0);
    EXPECT_EQ(t.maps.center_offset(1, 64, 64), 0.0);
    EXPECT_EQ(t.maps.size(0, 64, 64), 5.0);
    EXPECT_EQ(t.maps.size(1, 64, 64), 20.0);
}

TEST(Encode, FractionalOffset) {
    const auto t = chpdet::encode_targets(std::vector{ship(258, 257, 20, 80, 0)}, {});
    EXPECT_EQ(t.positive_mask[0].cell, (chpdet::Cell{64, 64}));
    EXPECT_NEAR(t.maps.center_offset(0, 64, 64), 0.5, 1e-12);
    EXPECT_NEAR(t.maps.center_offset(1, 64, 64), 0.25, 1e-12);
}

TEST(Encode, HeadTargets) {
    const ChpBox b = ship(200, 300, 16, 60, 90);
    const auto t = chpdet::encode_targets(std::vector{b}, {});
    ASSERT_EQ(t.head_peaks.size(), 1u);
    const auto hc = t.head_peaks[0];
    EXPECT_EQ(hc, (chpdet::Cell{75, 57}));
    EXPECT_EQ(t.maps.head(0, 75, 57), 1.0);
    EXPECT_NEAR(t.maps.head_offset(0, 75, 57), 230.0 / 4 - 57, 1e-12);
    EXPECT_NEAR(t.maps.head_offset(1, 75, 57), 0.0, 1e-12);
    EXPECT_NEAR(t.maps.head_reg(0, 75, 50), 230.0 / 4 - 50, 1e-12);
    EXPECT_NEAR(t.maps.head_reg(1, 75, 50), 0.0, 1e-12);
}

TEST(Encode, CollisionWarns) {
    const auto t = chpdet::encode_targets(std::vector{ship(100, 100, 10, 40, 0), ship(101, 101, 10, 40, 90)}, {});
    EXPECT_EQ(t.warnings.size(), 1u);
    EXPECT_EQ(t.positive_mask.size(), 2u);
}

TEST(Encode, StrideMustDivideInput) {
    chpdet::EncodingConfig cfg;
    cfg.input_w = 510;
    EXPECT_THROW(chpdet::encode_targets(std::vector{ship(100, 100, 10, 40, 0)}, cfg), chpdet::Error);
}

TEST(Encode, RejectsOutOfRangeClassAndCenter) {
    EXPECT_THROW(chpdet::encode_targets(std::vector{ship(100, 100, 10, 40, 0, 1)}, {}), chpdet::Error);
    EXPECT_THROW(chpdet::encode_targets(std::vector{ship(600, 100, 10, 40, 0)}, {}), chpdet::Error);
}

TEST(Encode, EmptySceneIsAllZero) {
    const auto t = chpdet::encode_targets(std::vector<ChpBox>{}, {});
    EXPECT_EQ(t.num_objects(), 0u);
    for (double v : t.maps.center.values()) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_NO_THROW(t.maps.check_shapes());
}

TEST(Encode, HeatmapsBounded) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(40, 470);
    std::uniform_real_distribution<double> ang(0, 360);
    std::vector<ChpBox> boxes;
    for (int i = 0; i < 12; ++i) {
        boxes.push_back(ship(pos(rng), pos(rng), 12, 50, ang(rng)));
    }
    const auto t = chpdet::encode_targets(boxes, {});
    for (const Map* m : {&t.maps.center, &t.maps.head}) {
        for (double v : m->values()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    for (const auto& e : t.positive_mask) {
        EXPECT_EQ(t.maps.center(0, e.cell.row, e.cell.col), 1.0);
    }
}

TEST(DetectionMaps, ShapeMismatchNamed) {
    auto m = chpdet::DetectionMaps::zeros(1, 8, 8);
    m.size = Map({2, 8, 7});
    try {
        m.check_shapes();
        FAIL();
    } catch (const chpdet::Error& e) {
        EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
    }
}

}  // namespace
