/*
 * Copyright 2026 The pbftune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pbftune/scanpath.hpp"

namespace pbftune {
namespace {

TEST(ScanpathTest, SampleCountFromTravelTime) {
    EXPECT_EQ(tuning_vector(10.0, 800.0).sample_count(1e-5), 1250);
    EXPECT_EQ(tuning_vector(10.0, 400.0).sample_count(1e-5), 2500);
    EXPECT_EQ(tuning_vector(0.008, 800.0).sample_count(1e-5), 1);
}

TEST(ScanpathTest, TuningVectorRejectsNonPositiveLength) {
    EXPECT_THROW(tuning_vector(0.0), ConfigError);
    EXPECT_THROW(tuning_vector(-1.0), ConfigError);
    EXPECT_THROW(tuning_vector(10.0, 0.0), ConfigError);
}

TEST(ScanpathTest, FortyFiveDegreeWedge) {
    WedgeGeometry geom;
    geom.angle_deg = 45.0;
    EXPECT_NEAR(geom.shrink_per_vector_mm(), 0.1, 1e-12);
    const auto vectors = wedge_layer(geom, 0);
    EXPECT_NEAR(static_cast<double>(vectors.size()), 100.0, 1.0);
    EXPECT_DOUBLE_EQ(vectors.front().length_mm, 10.0);
}

TEST(ScanpathTest, TwentyEightDegreeShrink) {
    WedgeGeometry geom;
    geom.angle_deg = 28.0;
    EXPECT_NEAR(geom.shrink_per_vector_mm(), 0.188073, 1e-6);
}

TEST(ScanpathTest, InvalidGeometryRejected) {
    WedgeGeometry geom;
    geom.hatch_spacing_mm = 0.0;
    EXPECT_THROW(wedge_layer(geom, 0), ConfigError);
    geom = WedgeGeometry{};
    geom.angle_deg = 0.0;
    EXPECT_THROW(wedge_layer(geom, 0), ConfigError);
    geom.angle_deg = 90.0;
    EXPECT_THROW(wedge_layer(geom, 0), ConfigError);
    geom = WedgeGeometry{};
    EXPECT_THROW(wedge_layer(geom, -1), ConfigError);
    EXPECT_THROW(wedge_layer(geom, geom.layers), ConfigError);
}

TEST(ScanpathTest, LengthsStrictlyDecreaseAndCountMatchesGeometry) {
    for (double angle : {10.0, 28.0, 37.5, 55.0, 80.0}) {
        WedgeGeometry geom;
        geom.angle_deg = angle;
        const auto vectors = wedge_layer(geom, 0);
        ASSERT_FALSE(vectors.empty());
        for (std::size_t i = 1; i < vectors.size(); ++i) {
            EXPECT_LT(vectors[i].length_mm, vectors[i - 1].length_mm);
            EXPECT_GT(vectors[i].x_mm, vectors[i - 1].x_mm);
            EXPECT_GT(vectors[i].length_mm, 0.0);
        }
        const double expected = geom.max_vector_mm * std::tan(angle * std::numbers::pi / 180.0) /
                                geom.hatch_spacing_mm;
        EXPECT_LE(std::abs(static_cast<double>(vectors.size()) - expected), 1.0) << angle;
    }
}

TEST(ScanpathTest, EveryLayerHasSameCrossSection) {
    WedgeGeometry geom;
    const auto first = wedge_layer(geom, 0);
    const auto last = wedge_layer(geom, geom.layers - 1);
    ASSERT_EQ(first.size(), last.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        EXPECT_EQ(first[i].length_mm, last[i].length_mm);
    }
}

}  // namespace
}  // namespace pbftune
