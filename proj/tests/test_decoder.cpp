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

#include "chpdet/decoder.hpp"
#include "chpdet/evaluator.hpp"
#include "chpdet/size_prior.hpp"
#include "chpdet/synth.hpp"
#include "chpdet/target_encoder.hpp"

namespace {

using chpdet::ChpBox;
using chpdet::DetectionMaps;
using chpdet::Map;

TEST(ExtractPeaks, SingleGaussianOnePeak) {
    Map m({1, 20, 20});
    chpdet::splat_rotated_gaussian(m.channel(0), chpdet::CovarianceKernel::from_sigmas(2, 1, 10), {9.4, 7.7});
    const auto peaks = chpdet::extract_peaks(m.channel(0), 100);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0].row, 7);
    EXPECT_EQ(peaks[0].col, 9);
    EXPECT_EQ(peaks[0].score, 1.0);
}

TEST(ExtractPeaks, PlateauAllQualifyWithDeterministicTruncation) {
    Map m({1, 4, 5}, 0.5);
    const auto all = chpdet::extract_peaks(m.channel(0), 100);
    EXPECT_EQ(all.size(), 20u);
    const auto top = chpdet::extract_peaks(m.channel(0), 3);
    ASSERT_EQ(top.size(), 3u);
    EXPECT_EQ(top[0].row, 0);
    EXPECT_EQ(top[0].col, 0);
    EXPECT_EQ(top[2].row, 0);
    EXPECT_EQ(top[2].col, 2);
}

TEST(ExtractPeaks, TwoGaussiansHigherFirst) {
    Map m({1, 30, 30});
    auto ch = m.channel(0);
    chpdet::splat_rotated_gaussian(ch, chpdet::CovarianceKernel::from_sigmas(1.5, 1.5, 0), {5.5, 5.5});
    chpdet::splat_rotated_gaussian(ch, chpdet::CovarianceKernel::from_sigmas(1.5, 1.5, 0), {22.5, 20.5});
    for (std::size_t r = 0; r < 12; ++r) {
        for (std::size_t c = 0; c < 12; ++c) {
            ch(r, c) *= 0.7;
        }
    }
    const auto peaks = chpdet::extract_peaks(m.channel(0), 100);
    ASSERT_EQ(peaks.size(), 2u);
    EXPECT_EQ(peaks[0].row, 20);
    EXPECT_EQ(peaks[1].row, 5);
}

// One detection at cell (20, 20) with a regressed head at (10, 10) in map units.
DetectionMaps single_detection_maps() {
    auto m = DetectionMaps::zeros(1, 40, 40);
    m.center(0, 20, 20) = 0.8;
    m.size(0, 20, 20) = 2;
    m.size(1, 20, 20) = 8;
    m.head_reg(0, 20, 20) = -10;
    m.head_reg(1, 20, 20) = -10;
    return m;
}

TEST(Decode, NearestHeadWinsRegardlessOfScore) {
    auto m = single_detection_maps();
    m.head(0, 10, 11) = 0.5;
    m.head(0, 30, 30) = 0.9;
    m.head_offset(0, 10, 11) = 0.25;
    m.head_offset(1, 10, 11) = 0.5;
    const auto dets = chpdet::decode_detections(m, {});
    ASSERT_EQ(dets.size(), 1u);
    EXPECT_DOUBLE_EQ(dets[0].hx, 11.25 * 4);
    EXPECT_DOUBLE_EQ(dets[0].hy, 10.5 * 4);
    EXPECT_EQ(dets[0].flags, chpdet::kFlagNone);
    EXPECT_DOUBLE_EQ(dets[0].cx, 80);
    EXPECT_DOUBLE_EQ(dets[0].w, 8);
    EXPECT_DOUBLE_EQ(dets[0].h, 32);
    EXPECT_DOUBLE_EQ(dets[0].score, 0.8);
}

TEST(Decode, FallbackKeepsRegressedHead) {
    auto m = single_detection_maps();
    m.head(0, 10, 11) = 0.05;
    const auto dets = chpdet::decode_detections(m, {});
    ASSERT_EQ(dets.size(), 1u);
    EXPECT_DOUBLE_EQ(dets[0].hx, 40);
    EXPECT_DOUBLE_EQ(dets[0].hy, 40);
    EXPECT_TRUE(dets[0].flags & chpdet::kFlagHeadFallback);
}

TEST(Decode, HeadThresholdIsStrict) {
    auto m = single_detection_maps();
    m.head(0, 10, 11) = 0.1;
    EXPECT_TRUE(chpdet::decode_detections(m, {})[0].flags & chpdet::kFlagHeadFallback);
}

TEST(Decode, DegenerateHeadPerturbed) {
    auto m = single_detection_maps();
    m.head_reg(0, 20, 20) = 0;
    m.head_reg(1, 20, 20) = 0;
    const auto dets = chpdet::decode_detections(m, {});
    ASSERT_EQ(dets.size(), 1u);
    EXPECT_TRUE(dets[0].flags & chpdet::kFlagHeadPerturbed);
    EXPECT_NO_THROW(chpdet::validate(dets[0]));
}

TEST(Decode, ZeroSizePeaksSkipped) {
    auto m = DetectionMaps::zeros(1, 16, 16);
    m.center(0, 4, 4) = 0.6;
    EXPECT_TRUE(chpdet::decode_detections(m, {}).empty());
}

TEST(Decode, TopKAndScoreFloor) {
    auto m = DetectionMaps::zeros(1, 32, 32);
    for (int i = 0; i < 5; ++i) {
        m.center(0, 3 + 5 * i, 3) = 0.1 * (i + 1);
        m.size(0, 3 + 5 * i, 3) = 1;
        m.size(1, 3 + 5 * i, 3) = 3;
        m.head_reg(1, 3 + 5 * i, 3) = -1;
    }
    chpdet::DecodeConfig cfg;
    cfg.top_k = 3;
    EXPECT_EQ(chpdet::decode_detections(m, cfg).size(), 3u);
    cfg.top_k = 100;
    cfg.score_floor = 0.25;
    const auto kept = chpdet::decode_detections(m, cfg);
    ASSERT_EQ(kept.size(), 3u);
    EXPECT_NEAR(kept.front().score, 0.5, 1e-12);
}

TEST(Decode, RejectsMismatchedMaps) {
    auto m = DetectionMaps::zeros(1, 8, 8);
    m.head = Map({1, 8, 9});
    EXPECT_THROW(chpdet::decode_detections(m, {}), chpdet::Error);
}

TEST(Decode, RoundTripSyntheticScenes) {
    const auto table = chpdet::default_class_table();
    chpdet::EncodingConfig enc;
    enc.num_classes = static_cast<int>(table.classes.size());
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        chpdet::synth::SceneSpec spec;
        spec.seed = seed;
        const auto scene = chpdet::synth::synth_scene(spec, table);
        const auto dets = chpdet::decode_detections(chpdet::encode_targets(scene.objects, enc).maps, {});
        ASSERT_EQ(dets.size(), scene.objects.size()) << "seed " << seed;
        for (const ChpBox& gt : scene.objects) {
            double best = 0.0;
            const ChpBox* hit = nullptr;
            for (const ChpBox& d : dets) {
                const double iou = chpdet::rotated_iou(d, gt);
                if (iou > best && d.class_id == gt.class_id) {
                    best = iou;
                    hit = &d;
                }
            }
            ASSERT_NE(hit, nullptr);
            EXPECT_GE(best, 0.9);
            EXPECT_LT(chpdet::angle_diff(chpdet::chp_to_rbox(*hit).theta, chpdet::chp_to_rbox(gt).theta), 10.0);
        }
    }
}

}  // namespace
