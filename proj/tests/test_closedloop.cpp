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
#include <numeric>
#include <vector>

#include "pbftune/closedloop.hpp"

namespace pbftune {
namespace {

PlantConfig quiet(PlantConfig cfg) {
    cfg.noise_std_mV = 0.0;
    return cfg;
}

double mean(const std::vector<double>& v, std::size_t from, std::size_t to) {
    return std::accumulate(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to), 0.0) /
           static_cast<double>(to - from);
}

TEST(ClosedLoopTest, PlantSeesPreviousCommand) {
    Plant plant(PlantConfig::plate(), 1);
    ControllerState state;
    const ControllerConfig cfg{30.0, 5.0, 300.0, 1e-5};
    const Trace t = expose_vector(plant, state, {3.0, 3e4}, cfg, tuning_vector());
    ASSERT_EQ(t.size(), 1250u);
    EXPECT_EQ(t.applied_W[0], 5.0);
    for (std::size_t k = 1; k < t.size(); ++k) {
        ASSERT_EQ(t.applied_W[k], t.u_W[k - 1]);
    }
}

TEST(ClosedLoopTest, ZeroGainsHoldLowerLimit) {
    Plant plant(quiet(PlantConfig::plate()), 1);
    ControllerState state;
    const Trace t = expose_vector(plant, state, {0.0, 0.0}, ControllerConfig{}, tuning_vector());
    for (std::size_t k = 0; k < t.size(); ++k) {
        ASSERT_EQ(t.u_W[k], 0.0);
        ASSERT_EQ(t.y_mV[k], 0.0);
    }
}

TEST(ClosedLoopTest, TunedGainsSettleOnBarePlate) {
    PlantConfig cfg = quiet(PlantConfig::plate());
    cfg.preheat_coupling = 0.0;
    Plant plant(cfg, 1);
    ControllerState state;
    const Trace t = expose_vector(plant, state, {8.45, 90598.24}, ControllerConfig{}, tuning_vector());
    const std::size_t n = t.size();
    for (std::size_t k = n / 2; k < n; ++k) {
        ASSERT_NEAR(t.y_mV[k], 30.0, 1.5) << k;
    }
    EXPECT_NEAR(t.u_W.back(), 200.0, 1.0);

    Plant noisy(PlantConfig::plate(), 1);
    const Trace tn = expose_vector(noisy, state, {8.45, 90598.24}, ControllerConfig{}, tuning_vector());
    EXPECT_NEAR(mean(tn.y_mV, n / 2, n), 30.0, 0.3);
}

TEST(ClosedLoopTest, RejectsMismatchedSamplePeriods) {
    Plant plant(PlantConfig::plate(), 1);
    ControllerState state;
    ControllerConfig cfg;
    cfg.sample_dt_s = 2e-5;
    EXPECT_THROW(expose_vector(plant, state, {1.0, 1.0}, cfg, tuning_vector()), ConfigError);
    EXPECT_THROW(expose_vector(plant, state, {1.0, 1.0}, ControllerConfig{}, tuning_vector(), 400.0),
                 ConfigError);
}

TEST(ClosedLoopTest, PowderRespondsTwiceAsStrongly) {
    auto final_emission = [](PlantConfig cfg) {
        cfg = quiet(cfg);
        cfg.preheat_coupling = 0.0;
        Plant plant(cfg, 0);
        ControllerState state;
        return expose_vector(plant, state, {}, ControllerConfig{}, tuning_vector(), 150.0).y_mV.back();
    };
    EXPECT_NEAR(final_emission(PlantConfig::powder()) / final_emission(PlantConfig::plate()), 2.0, 1e-9);
}

TEST(ClosedLoopTest, PreheatCarriesOverBetweenIterations) {
    TuningProcedure proc = TuningProcedure::offline();
    proc.plant.tau_cool_s = 2.0;
    TuningRig rig(proc, 11);
    const ControllerGains g{2.0, 2e4};
    rig.run_iteration(g, 0);
    const double carried = rig.plant().state().preheat_mV;
    EXPECT_GT(carried, 0.0);
    rig.run_iteration(g, 1);
    EXPECT_GT(rig.plant().state().preheat_mV, carried);
}

TEST(ClosedLoopTest, OnlineRecoatClearsPreheat) {
    TuningRig rig(TuningProcedure::online(), 11);
    const Trace t = rig.run_iteration({2.0, 2e4}, 0);
    ASSERT_EQ(t.size(), 1250u);
    EXPECT_LT(rig.plant().state().preheat_mV, 1e-100);
    EXPECT_EQ(rig.plant().state().emission_mV, 0.0);
}

TEST(ClosedLoopTest, RigIsDeterministicPerSeed) {
    TuningRig a(TuningProcedure::offline(), 5);
    TuningRig b(TuningProcedure::offline(), 5);
    for (int i = 0; i < 3; ++i) {
        const Trace ta = a.run_iteration({3.0, 4e4}, i);
        const Trace tb = b.run_iteration({3.0, 4e4}, i);
        ASSERT_EQ(ta.y_mV, tb.y_mV);
        ASSERT_EQ(ta.u_W, tb.u_W);
    }
}

TEST(ClosedLoopTest, SingleLayerWedge) {
    WedgeGeometry geom;
    geom.layers = 1;
    WedgeOptions opts;
    const BuildRecord build = print_wedge(geom, {2.0, 2e4}, opts);
    ASSERT_EQ(build.layers.size(), 1u);
    EXPECT_EQ(build.layers[0].size(), wedge_layer(geom, 0).size());
}

TEST(ClosedLoopTest, UncontrolledShortVectorsHeatUp) {
    // Heat build-up dominates over the final quarter as long as a vector lasts
    // a few emission rise times; the last remnants are too short to rise.
    WedgeGeometry geom;
    geom.layers = 2;
    WedgeOptions opts;
    opts.plant = quiet(PlantConfig::powder());
    opts.fixed_power_W = 150.0;
    const long min_samples = std::lround(5.0 * opts.plant.tau_rise_s / opts.plant.sample_dt_s);
    const BuildRecord build = print_wedge(geom, {}, opts);
    for (const LayerRecord& layer : build.layers) {
        std::vector<double> means;
        for (const auto& v : layer) {
            means.push_back(mean(v.trace.y_mV, 0, v.trace.size()));
        }
        const std::size_t tail = layer.size() - layer.size() / 4;
        std::size_t checked = 0;
        for (std::size_t i = tail + 1; i < layer.size(); ++i) {
            if (static_cast<long>(layer[i].trace.size()) < min_samples) {
                continue;
            }
            ++checked;
            EXPECT_GE(means[i], means[i - 1]) << i;
        }
        EXPECT_GE(checked, 7u);
        EXPECT_GT(*std::max_element(means.begin() + static_cast<long>(tail), means.end()), 84.0);
        EXPECT_LT(means.front(), 84.0);
    }
}

TEST(ClosedLoopTest, RemnantVectorsAreRiseLimited) {
    // Known limit of the first-order emission lag: a vector of a few samples
    // ends long before the emission settles.
    WedgeGeometry geom;
    geom.layers = 1;
    WedgeOptions opts;
    opts.plant = quiet(PlantConfig::powder());
    opts.fixed_power_W = 150.0;
    const BuildRecord build = print_wedge(geom, {}, opts);
    const ExposedVector& last = build.layers[0].back();
    ASSERT_LT(last.trace.size(), 20u);
    EXPECT_LT(*std::max_element(last.trace.y_mV.begin(), last.trace.y_mV.end()),
              opts.plant.gain_mV_per_W * 150.0 + last.trace.y_mV.front());
}

TEST(ClosedLoopTest, ControllerBacksOffOnShortVectors) {
    WedgeGeometry geom;
    geom.layers = 2;
    WedgeOptions opts;
    const BuildRecord build = print_wedge(geom, {2.239, 15351.2}, opts);
    const LayerRecord& layer = build.layers.back();
    const std::size_t q = layer.size() / 4;
    double head = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
        head += mean(layer[i].trace.u_W, 0, layer[i].trace.size());
        tail += mean(layer[layer.size() - 1 - i].trace.u_W, 0, layer[layer.size() - 1 - i].trace.size());
    }
    EXPECT_LT(tail, head);
    for (const auto& v : layer) {
        for (double u : v.trace.u_W) {
            ASSERT_GE(u, 0.0);
            ASSERT_LE(u, 300.0);
        }
    }
}

}  // namespace
}  // namespace pbftune
