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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pbftune/analysis.hpp"
#include "pbftune/closedloop.hpp"

namespace pbftune {
namespace {

ExposedVector constant_vector(double length_mm, std::size_t n, double u, double y, double ref) {
    ExposedVector ev;
    ev.vector.length_mm = length_mm;
    ev.trace.reference_mV = ref;
    ev.trace.u_W.assign(n, u);
    ev.trace.applied_W.assign(n, u);
    ev.trace.y_mV.assign(n, y);
    return ev;
}

BuildRecord tuned_wedge(double angle, int layers, bool noisy) {
    WedgeGeometry geom;
    geom.angle_deg = angle;
    geom.layers = layers;
    WedgeOptions opts;
    if (!noisy) {
        opts.plant.noise_std_mV = 0.0;
    }
    opts.seed = 5;
    return print_wedge(geom, {2.239, 15351.2}, opts);
}

TEST(AnalysisTest, SingleVectorStats) {
    BuildRecord build;
    ExposedVector ev = constant_vector(4.0, 500, 100.0, 70.0, 80.0);
    for (std::size_t i = 0; i < 500; i += 3) {
        ev.trace.u_W[i] = 130.0;
    }
    build.layers.push_back({ev});
    const auto stats = per_vector_costs(build);
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_EQ(stats[0].n, 1u);
    EXPECT_EQ(stats[0].ci95_halfwidth, 0.0);
    EXPECT_EQ(stats[0].mean_cost, composite_cost(ev.trace).total);
    EXPECT_EQ(stats[0].length_mm, 4.0);
    EXPECT_THROW(per_vector_costs(BuildRecord{}), InputError);
}

TEST(AnalysisTest, IdenticalLayersHaveZeroWidth) {
    const BuildRecord one = tuned_wedge(45.0, 1, false);
    BuildRecord build;
    for (int i = 0; i < 4; ++i) {
        build.layers.push_back(one.layers[0]);
    }
    for (const auto& s : per_vector_costs(build)) {
        EXPECT_EQ(s.ci95_halfwidth, 0.0);
        EXPECT_EQ(s.n, 4u);
    }
}

TEST(AnalysisTest, ConfidenceWidthMatchesHandComputation) {
    BuildRecord build;
    std::vector<double> totals;
    for (double y : {70.0, 75.0, 79.0}) {
        ExposedVector ev = constant_vector(2.0, 100, 120.0, y, 80.0);
        totals.push_back(composite_cost(ev.trace).total);
        build.layers.push_back({ev});
    }
    const double m = (totals[0] + totals[1] + totals[2]) / 3.0;
    double ss = 0.0;
    for (double t : totals) {
        ss += (t - m) * (t - m);
    }
    const auto stats = per_vector_costs(build);
    EXPECT_NEAR(stats[0].mean_cost, m, 1e-15);
    EXPECT_NEAR(stats[0].ci95_halfwidth, 1.96 * std::sqrt(ss / 2.0) / std::sqrt(3.0), 1e-15);
}

TEST(AnalysisTest, ShortVectorsCostMore) {
    const BuildRecord build = tuned_wedge(28.0, 3, true);
    const auto stats = per_vector_costs(build);
    double short_sum = 0.0;
    double long_sum = 0.0;
    int short_n = 0;
    int long_n = 0;
    for (const auto& s : stats) {
        if (s.length_mm < 3.0) {
            short_sum += s.mean_cost;
            ++short_n;
        } else if (s.length_mm >= 5.0) {
            long_sum += s.mean_cost;
            ++long_n;
        }
    }
    ASSERT_GT(short_n, 0);
    ASSERT_GT(long_n, 0);
    EXPECT_GT(short_sum / short_n, long_sum / long_n);
}

TEST(AnalysisTest, BandExamples) {
    BuildRecord build;
    build.layers.push_back({constant_vector(1.0, 50, 100.0, 80.0, 80.0), constant_vector(1.0, 50, 100.0, 84.8, 80.0)});
    const auto c = band_classification(build, 80.0);
    EXPECT_EQ(c.per_vector[0][0].within, 1.0);
    EXPECT_EQ(c.per_vector[0][1].above, 1.0);
    EXPECT_EQ(c.per_vector[0][1].leading_below, 0u);
    EXPECT_EQ(c.per_layer[0].within, 0.5);
    EXPECT_EQ(c.per_layer[0].samples, 100u);

    const std::vector<double> y{70.0, 75.0, 76.0, 80.0, 90.0};
    const auto labels = band_labels(y, 80.0);
    EXPECT_EQ(labels, (std::vector<BandLabel>{BandLabel::Below, BandLabel::Below, BandLabel::Within,
                                              BandLabel::Within, BandLabel::Above}));
}

TEST(AnalysisTest, BandFractionsSumToOne) {
    const BuildRecord build = tuned_wedge(28.0, 2, true);
    const auto c = band_classification(build, 80.0);
    for (const auto& layer : c.per_vector) {
        for (const auto& f : layer) {
            EXPECT_NEAR(f.below + f.within + f.above, 1.0, 1e-12);
        }
    }
    for (const auto& f : c.per_layer) {
        EXPECT_NEAR(f.below + f.within + f.above, 1.0, 1e-12);
    }
}

TEST(AnalysisTest, LeadingBelowRunIsSteadyOnLongVectors) {
    const BuildRecord build = tuned_wedge(28.0, 2, false);
    const auto c = band_classification(build, 80.0);
    const LayerRecord& layer = build.layers.back();
    std::vector<double> runs;
    for (std::size_t v = 0; v < layer.size(); ++v) {
        if (layer[v].vector.length_mm >= 5.0) {
            runs.push_back(static_cast<double>(c.per_vector.back()[v].leading_below));
        }
    }
    ASSERT_GT(runs.size(), 3u);
    const auto [lo, hi] = std::minmax_element(runs.begin(), runs.end());
    EXPECT_GT(*lo, 0.0);
    EXPECT_LE(*hi - *lo, 0.2 * *hi);
}

TEST(AnalysisTest, WindowExamples) {
    BuildRecord build;
    ExposedVector split = constant_vector(1.0, 100, 130.0, 80.0, 80.0);
    std::fill(split.trace.u_W.begin() + 50, split.trace.u_W.end(), 220.0);
    build.layers.push_back({constant_vector(1.0, 100, 150.0, 80.0, 80.0), split});
    const WindowFlags f = window_flags(build);
    EXPECT_EQ(f.per_vector[0][0].below_lof, 0.0);
    EXPECT_EQ(f.per_vector[0][0].above_keyhole, 0.0);
    EXPECT_EQ(f.per_vector[0][1].below_lof, 0.5);
    EXPECT_EQ(f.per_vector[0][1].above_keyhole, 0.5);
    EXPECT_EQ(f.per_layer[0].below_lof, 0.25);
    EXPECT_THROW(window_flags(build, ProcessWindow{200.0, 150.0}), ConfigError);
}

TEST(AnalysisTest, ControllerDriftsTowardLackOfFusion) {
    const BuildRecord build = tuned_wedge(55.0, 2, false);
    const WindowFlags f = window_flags(build);
    const auto& layer = f.per_vector.back();
    const std::size_t start = layer.size() - layer.size() / 3;
    for (std::size_t v = start + 1; v < layer.size(); ++v) {
        EXPECT_GE(layer[v].below_lof, layer[v - 1].below_lof) << v;
    }
}

TEST(AnalysisTest, BestSoFar) {
    EXPECT_EQ(best_so_far(std::vector<double>{3.0, 2.0, 2.5, 1.0}), (std::vector<double>{3.0, 2.0, 2.0, 1.0}));
    EXPECT_EQ(best_so_far(std::vector<double>(5, 0.7)), std::vector<double>(5, 0.7));
    EXPECT_THROW(best_so_far(std::vector<double>{}), InputError);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> costs(300);
    for (double& c : costs) {
        c = unit(rng);
    }
    const auto once = best_so_far(costs);
    EXPECT_EQ(best_so_far(once), once);
    for (std::size_t i = 1; i < once.size(); ++i) {
        EXPECT_LE(once[i], once[i - 1]);
    }
}

TEST(AnalysisTest, Spearman) {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
    EXPECT_NEAR(spearman(x, std::vector<double>{2.0, 4.0, 8.0, 16.0, 32.0}), 1.0, 1e-15);
    EXPECT_NEAR(spearman(x, std::vector<double>{5.0, 3.0, 2.0, 1.0, 0.0}), -1.0, 1e-15);
    // Ranks with a tie: y -> (1, 2.5, 2.5, 4, 5).
    EXPECT_NEAR(spearman(x, std::vector<double>{1.0, 2.0, 2.0, 3.0, 4.0}), 0.9746794344808963, 1e-12);
    EXPECT_THROW(spearman(x, std::vector<double>{1.0}), InputError);
}

}  // namespace
}  // namespace pbftune
