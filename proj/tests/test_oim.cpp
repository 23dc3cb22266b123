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

#include "chpdet/oim.hpp"
#include "support/oracles.hpp"

namespace {

using chpdet::Map;
using chpdet::oim::Arf;

Arf random_arf(std::mt19937_64& rng, int k, int n) {
    Arf f = Arf::zeros(k, n);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& w : f.weights) {
        w = u(rng);
    }
    return f;
}

TEST(RotateFilter, IdentityAtZero) {
    std::mt19937_64 rng(1);
    for (int n : {1, 4, 8}) {
        const Arf f = random_arf(rng, 3, n);
        EXPECT_EQ(chpdet::oim::rotate_filter(f, 0).weights, f.weights);
    }
}

TEST(RotateFilter, QuarterTurnIsIndexPermutationWithChannelShift) {
    std::mt19937_64 rng(2);
    const Arf f = random_arf(rng, 3, 4);
    const Arf g = chpdet::oim::rotate_filter(f, 1);
    // Clockwise on screen: the top-left weight moves to the top-right corner.
    for (int n = 0; n < 4; ++n) {
        const int src = (n + 3) % 4;
        for (int y = 0; y < 3; ++y) {
            for (int x = 0; x < 3; ++x) {
                EXPECT_EQ(g.at(n, x, 2 - y), f.at(src, y, x));
            }
        }
    }
}

TEST(RotateFilter, ComposesToIdentityFourOrientations) {
    std::mt19937_64 rng(3);
    for (int k : {1, 3, 5}) {
        const Arf f = random_arf(rng, k, 4);
        Arf g = f;
        for (int i = 0; i < 4; ++i) {
            g = chpdet::oim::rotate_filter(g, 1);
        }
        for (std::size_t i = 0; i < f.weights.size(); ++i) {
            EXPECT_NEAR(g.weights[i], f.weights[i], 1e-9);
        }
    }
}

TEST(RotateFilter, ComposesToIdentityEightOrientations) {
    std::mt19937_64 rng(4);
    const Arf f = random_arf(rng, 3, 8);
    Arf g = f;
    for (int i = 0; i < 8; ++i) {
        g = chpdet::oim::rotate_filter(g, 1);
    }
    for (std::size_t i = 0; i < f.weights.size(); ++i) {
        EXPECT_NEAR(g.weights[i], f.weights[i], 1e-6);
    }
}

TEST(RotateFilter, TwoStepsEqualDoubleIndex) {
    std::mt19937_64 rng(5);
    const Arf f = random_arf(rng, 5, 8);
    const Arf twice = chpdet::oim::rotate_filter(chpdet::oim::rotate_filter(f, 1), 1);
    const Arf direct = chpdet::oim::rotate_filter(f, 2);
    for (std::size_t i = 0; i < f.weights.size(); ++i) {
        EXPECT_NEAR(twice.weights[i], direct.weights[i], 1e-12);
    }
}

TEST(RotateFilter, NonGridAngleInterpolates) {
    Arf f = Arf::zeros(3, 12);
    f.at(0, 1, 1) = 1.0;
    const Arf g = chpdet::oim::rotate_filter(f, 1);
    EXPECT_NEAR(g.at(1, 1, 1), 1.0, 1e-12);
    EXPECT_THROW(chpdet::oim::rotate_filter(f, 12), chpdet::Error);
}

TEST(ArfConvolve, SingleOrientationIsPlainCorrelation) {
    std::mt19937_64 rng(6);
    const Arf f = random_arf(rng, 3, 1);
    const Map in = oracle::random_map(rng, {1, 7, 9});
    const Map out = chpdet::oim::arf_convolve(in, f);
    const auto ref = oracle::correlate2d(std::vector<double>(in.values().begin(), in.values().end()), 7, 9,
                                         f.weights, 3);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(out[i], ref[i], 1e-12);
    }
}

TEST(ArfConvolve, ZerosInZerosOut) {
    std::mt19937_64 rng(7);
    const Map out = chpdet::oim::arf_convolve(Map({8, 6, 6}), random_arf(rng, 3, 8));
    for (double v : out.values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ArfConvolve, ChannelMismatch) {
    std::mt19937_64 rng(8);
    try {
        chpdet::oim::arf_convolve(Map({3, 6, 6}), random_arf(rng, 3, 4));
        FAIL();
    } catch (const chpdet::Error& e) {
        EXPECT_NE(std::string(e.what()).find("channel mismatch"), std::string::npos);
    }
}

TEST(ArfConvolve, QuarterTurnEquivariance) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Arf f = random_arf(rng, 3, 4);
        const Map in = oracle::random_map(rng, {4, 8, 8});
        const Map lhs = chpdet::oim::arf_convolve(oracle::channel_shift(oracle::rot90(in), 1), f);
        const Map rhs = oracle::channel_shift(oracle::rot90(chpdet::oim::arf_convolve(in, f)), 1);
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
        }
    }
}

TEST(ArfConvolve, EighthTurnEquivarianceOnRingShiftableInput) {
    // With N = 8, a 90 degree input rotation is a shift by two orientation channels.
    std::mt19937_64 rng(10);
    const Arf f = random_arf(rng, 3, 8);
    const Map in = oracle::random_map(rng, {8, 8, 8});
    const Map lhs = chpdet::oim::arf_convolve(oracle::channel_shift(oracle::rot90(in), 2), f);
    const Map rhs = oracle::channel_shift(oracle::rot90(chpdet::oim::arf_convolve(in, f)), 2);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
    }
}

TEST(ArfConvolve, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    for (int n : {4, 8, 6}) {
        const Arf f = random_arf(rng, 3, n);
        const Map in = oracle::random_map(rng, {static_cast<std::size_t>(n), 6, 6});
        const Map go = oracle::random_map(rng, {static_cast<std::size_t>(n), 6, 6});
        auto objective = [&](const Map& x, const Arf& w) {
            const Map out = chpdet::oim::arf_convolve(x, w);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) {
                s += out[i] * go[i];
            }
            return s;
        };
        const auto grads = chpdet::oim::arf_convolve_backward(in, f, go);
        const auto num_in = oracle::numeric_gradient([&](const Map& x) { return objective(x, f); }, in);
        EXPECT_LT(oracle::max_relative_error(grads.input.values(), num_in), 1e-6);

        Map w({f.weights.size()}, f.weights);
        const auto num_w = oracle::numeric_gradient(
            [&](const Map& m) {
                Arf g = f;
                g.weights.assign(m.values().begin(), m.values().end());
                return objective(in, g);
            },
            w);
        EXPECT_LT(oracle::max_relative_error(grads.weights.weights, num_w), 1e-6);
    }
}

TEST(Orpool, CommonValue) {
    const Map in({4, 3, 3}, 2.5);
    const Map out = chpdet::oim::orpool(in);
    for (double v : out.values()) {
        EXPECT_EQ(v, 2.5);
    }
}

TEST(Orpool, PicksMaximum) {
    Map in({4, 1, 1});
    in[0] = 1;
    in[1] = 5;
    in[2] = 3;
    in[3] = 2;
    EXPECT_EQ(chpdet::oim::orpool(in)[0], 5.0);
}

TEST(Orpool, InvariantToCyclicShift) {
    std::mt19937_64 rng(12);
    const Map in = oracle::random_map(rng, {8, 5, 5});
    const Map base = chpdet::oim::orpool(in);
    for (int s = 1; s < 8; ++s) {
        EXPECT_EQ(chpdet::oim::orpool(oracle::channel_shift(in, s)), base);
    }
}

TEST(Orpool, CommutesWithRotation) {
    std::mt19937_64 rng(13);
    const Map in = oracle::random_map(rng, {4, 8, 8});
    EXPECT_EQ(chpdet::oim::orpool(oracle::rot90(in)), oracle::rot90(chpdet::oim::orpool(in)));
}

TEST(Orpool, BackwardRoutesToLowestArgmax) {
    Map in({3, 1, 2});
    in(0, 0, 0) = 1;
    in(1, 0, 0) = 4;
    in(2, 0, 0) = 4;
    in(0, 0, 1) = 7;
    Map go({1, 1, 2});
    go[0] = 2;
    go[1] = 3;
    const Map g = chpdet::oim::orpool_backward(in, go);
    EXPECT_EQ(g(1, 0, 0), 2.0);
    EXPECT_EQ(g(2, 0, 0), 0.0);
    EXPECT_EQ(g(0, 0, 1), 3.0);
}

TEST(Orpool, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(14);
    const Map in = oracle::random_map(rng, {4, 6, 6});
    const Map go = oracle::random_map(rng, {1, 6, 6});
    const Map g = chpdet::oim::orpool_backward(in, go);
    const auto num = oracle::numeric_gradient(
        [&](const Map& x) {
            const Map out = chpdet::oim::orpool(x);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) {
                s += out[i] * go[i];
            }
            return s;
        },
        in);
    EXPECT_LT(oracle::max_relative_error(g.values(), num), 1e-6);
}

}  // namespace
