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

#include <random>

#include "chpdet/tiling.hpp"

namespace {

using chpdet::ChpBox;
using chpdet::SliceSpec;

std::vector<int> x_origins(const std::vector<SliceSpec>& s) {
    std::vector<int> out;
    for (const SliceSpec& x : s) {
        if (x.origin_y == 0) {
            out.push_back(x.origin_x);
        }
    }
    return out;
}

TEST(MakeSlices, ExactFit) {
    const auto s = chpdet::make_slices(1024, 1024);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], (SliceSpec{0, 0, 1024, 512}));
}

TEST(MakeSlices, StrideFits) { EXPECT_EQ(x_origins(chpdet::make_slices(1844, 1024)), (std::vector<int>{0, 820})); }

TEST(MakeSlices, LastClamped) {
    EXPECT_EQ(x_origins(chpdet::make_slices(2000, 1024)), (std::vector<int>{0, 820, 976}));
}

TEST(MakeSlices, SmallImageSingleSlice) { EXPECT_EQ(chpdet::make_slices(300, 200).size(), 1u); }

TEST(MakeSlices, CoverEveryPixel) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> dim(1, 5000);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = dim(rng);
        const int h = dim(rng);
        const auto slices = chpdet::make_slices(w, h);
        std::vector<int> cover_x(static_cast<std::size_t>(w), 0);
        std::vector<int> cover_y(static_cast<std::size_t>(h), 0);
        for (const SliceSpec& s : slices) {
            EXPECT_GE(s.origin_x, 0);
            EXPECT_GE(s.origin_y, 0);
            for (int x = s.origin_x; x < std::min(w, s.origin_x + s.slice_size); ++x) {
                cover_x[static_cast<std::size_t>(x)] = 1;
            }
            for (int y = s.origin_y; y < std::min(h, s.origin_y + s.slice_size); ++y) {
                cover_y[static_cast<std::size_t>(y)] = 1;
            }
        }
        EXPECT_EQ(std::count(cover_x.begin(), cover_x.end(), 0), 0);
        EXPECT_EQ(std::count(cover_y.begin(), cover_y.end(), 0), 0);
    }
}

TEST(MakeSlices, RejectsBadArguments) {
    EXPECT_THROW(chpdet::make_slices(0, 10), chpdet::Error);
    EXPECT_THROW(chpdet::make_slices(10, 10, 100, 200), chpdet::Error);
    EXPECT_THROW(chpdet::make_slices(10, 10, 100, 50, 200), chpdet::Error);
}

TEST(ToGlobal, AffineArithmetic) {
    ChpBox b = chpdet::rbox_to_chp({50, 50, 4, 20, 0});
    const ChpBox g = chpdet::to_global(b, {820, 0, 1024, 512});
    EXPECT_DOUBLE_EQ(g.cx, 920);
    EXPECT_DOUBLE_EQ(g.cy, 100);
    EXPECT_DOUBLE_EQ(g.hx, 920);
    EXPECT_DOUBLE_EQ(g.hy, 80);
    EXPECT_DOUBLE_EQ(g.w, 8);
    EXPECT_DOUBLE_EQ(g.h, 40);
}

TEST(ToGlobal, IdentityWhenModelEqualsSlice) {
    const ChpBox b = chpdet::rbox_to_chp({33.3, 44.4, 5, 25, 123}, 0, 0.4);
    const ChpBox g = chpdet::to_global(b, {0, 0, 1024, 1024});
    EXPECT_EQ(g.cx, b.cx);
    EXPECT_EQ(g.hy, b.hy);
    EXPECT_EQ(g.w, b.w);
}

TEST(ToGlobal, RoundTripPreservesHeading) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(100, 900);
    std::uniform_real_distribution<double> ang(0, 360);
    const SliceSpec s{820, 1640, 1024, 512};
    for (int i = 0; i < 100; ++i) {
        const ChpBox b = chpdet::rbox_to_chp({820 + pos(rng), 1640 + pos(rng), 10, 60, ang(rng)});
        const ChpBox back = chpdet::to_global(chpdet::to_model(b, s), s);
        EXPECT_NEAR(back.cx, b.cx, 1e-9);
        EXPECT_NEAR(back.cy, b.cy, 1e-9);
        EXPECT_NEAR(back.hx, b.hx, 1e-9);
        EXPECT_NEAR(back.hy, b.hy, 1e-9);
        EXPECT_NEAR(back.w, b.w, 1e-9);
        EXPECT_NEAR(back.h, b.h, 1e-9);
        EXPECT_LT(chpdet::angle_diff(chpdet::chp_to_rbox(back).theta, chpdet::chp_to_rbox(b).theta), 1e-9);
    }
}

TEST(Merge, CrossSliceDuplicateCollapses) {
    const ChpBox global = chpdet::rbox_to_chp({900, 300, 20, 90, 70}, 0, 0.9);
    const auto slices = chpdet::make_slices(1844, 1024);
    ASSERT_EQ(slices.size(), 2u);
    std::vector<chpdet::SliceDetections> per_slice;
    for (const SliceSpec& s : slices) {
        ChpBox m = chpdet::to_model(global, s);
        m.score = s.origin_x == 0 ? 0.9 : 0.85;
        m.cx += 0.1;
        per_slice.push_back({s, {m}});
    }
    const auto merged = chpdet::merge_detections(per_slice);
    ASSERT_EQ(merged.size(), 1u);
    EXPECT_DOUBLE_EQ(merged[0].score, 0.9);
}

TEST(Merge, DistinctObjectsSurvive) {
    const SliceSpec s{0, 0, 1024, 512};
    const std::vector<chpdet::SliceDetections> per_slice{
        {s, {chpdet::rbox_to_chp({100, 100, 5, 30, 0}, 0, 0.9), chpdet::rbox_to_chp({300, 300, 5, 30, 0}, 0, 0.8)}}};
    EXPECT_EQ(chpdet::merge_detections(per_slice).size(), 2u);
}

}  // namespace
