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

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "pbftune/controller.hpp"
#include "pbftune/plant.hpp"
#include "pbftune/scanpath.hpp"
#include "pbftune/trace.hpp"

namespace pbftune {

/// Runs the in-layer loop over one vector.
///
/// The controller integral is cleared at vector start. The plant sees the
/// previous command (one sample of loop delay); the first sample gets u_min.
/// With `fixed_power_W` set, the controller is bypassed and that power is
/// commanded throughout.
inline Trace expose_vector(Plant& plant, ControllerState& ctrl_state, const ControllerGains& gains,
                           const ControllerConfig& ctrl_cfg, const ScanVector& vector,
                           std::optional<double> fixed_power_W = std::nullopt) {
    ctrl_cfg.validate();
    const double dt = ctrl_cfg.sample_dt_s;
    if (std::abs(plant.config().sample_dt_s - dt) > 1e-12 * dt) {
        throw ConfigError("closedloop: plant and controller sample periods differ");
    }
    if (fixed_power_W && !(*fixed_power_W >= ctrl_cfg.u_min_W && *fixed_power_W <= ctrl_cfg.u_max_W)) {
        throw ConfigError("closedloop: fixed power outside [u_min, u_max]");
    }
    const long n = vector.sample_count(dt);
    if (n < 1) {
        throw ConfigError("closedloop: vector shorter than one sample");
    }

    Trace trace;
    trace.dt_s = dt;
    trace.reference_mV = ctrl_cfg.reference_mV;
    trace.u_W.reserve(static_cast<std::size_t>(n));
    trace.applied_W.reserve(static_cast<std::size_t>(n));
    trace.y_mV.reserve(static_cast<std::size_t>(n));

    plant.set_track_length(vector.length_mm);
    controller_reset(ctrl_state);
    double applied = ctrl_cfg.u_min_W;
    for (long k = 0; k < n; ++k) {
        const double y = plant.step(applied);
        if (!std::isfinite(y)) {
            throw LoopFault("closedloop: non-finite emission at sample " + std::to_string(k));
        }
        const double u = fixed_power_W ? *fixed_power_W : pi_step(ctrl_state, gains, ctrl_cfg, y);
        trace.applied_W.push_back(applied);
        trace.y_mV.push_back(y);
        trace.u_W.push_back(u);
        applied = u;
    }
    return trace;
}

/// How a tuning iteration is carried out on the machine.
struct TuningProcedure {
    PlantConfig plant;
    ControllerConfig controller;
    ScanVector vector = tuning_vector();
    /// Laser-off time after each exposure (repositioning or recoating).
    double pause_s = 3.0;

    /// Bare plate, exposure repeated on the same spot every few seconds.
    static TuningProcedure offline() {
        TuningProcedure p;
        p.plant = PlantConfig::plate();
        p.controller.reference_mV = 30.0;
        p.pause_s = 3.0;
        return p;
    }

    /// Sacrificial thin wall in powder, one layer per iteration.
    static TuningProcedure online() {
        TuningProcedure p;
        p.plant = PlantConfig::powder();
        p.controller.reference_mV = 60.0;
        p.pause_s = 13.0;
        return p;
    }
};

/// Stateful tuning target: the plant keeps its thermal history between
/// iterations, the noise stream is re-derived from the master seed per iteration.
class TuningRig {
public:
    TuningRig(TuningProcedure procedure, std::uint64_t seed)
        : procedure_(std::move(procedure)), plant_(procedure_.plant, seed), seed_(seed) {
        procedure_.controller.validate();
    }

    Trace run_iteration(const ControllerGains& gains, int iteration) {
        plant_.reseed(derive_seed(seed_, static_cast<std::uint64_t>(iteration)));
        Trace trace = expose_vector(plant_, ctrl_state_, gains, procedure_.controller, procedure_.vector);
        plant_.rest(procedure_.pause_s);
        return trace;
    }

    const Plant& plant() const { return plant_; }
    const TuningProcedure& procedure() const { return procedure_; }

private:
    TuningProcedure procedure_;
    Plant plant_;
    ControllerState ctrl_state_;
    std::uint64_t seed_;
};

inline Trace run_offline_iteration(TuningRig& rig, const ControllerGains& gains, int iteration) {
    return rig.run_iteration(gains, iteration);
}

inline Trace run_online_iteration(TuningRig& rig, const ControllerGains& gains, int layer_idx) {
    return rig.run_iteration(gains, layer_idx);
}

struct WedgeOptions {
    PlantConfig plant = PlantConfig::powder();
    ControllerConfig controller{80.0, 0.0, 300.0, 1e-5};
    double recoat_s = 13.0;
    /// Set for the open-loop baseline.
    std::optional<double> fixed_power_W;
    std::uint64_t seed = 0;
};

/// Prints every layer of a wedge vector by vector.
inline BuildRecord print_wedge(const WedgeGeometry& geom, const ControllerGains& gains,
                               const WedgeOptions& options) {
    geom.validate();
    Plant plant(options.plant, options.seed);
    ControllerState ctrl_state;
    BuildRecord build;
    build.layers.reserve(static_cast<std::size_t>(geom.layers));
    for (int layer = 0; layer < geom.layers; ++layer) {
        const auto vectors = wedge_layer(geom, layer, options.controller.sample_dt_s);
        LayerRecord record;
        record.reserve(vectors.size());
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (i > 0) {
                plant.idle(vectors[i].inter_vector_delay_s);
            }
            record.push_back({vectors[i], expose_vector(plant, ctrl_state, gains, options.controller,
                                                        vectors[i], options.fixed_power_W)});
        }
        build.layers.push_back(std::move(record));
        plant.recoat(options.recoat_s);
    }
    return build;
}

}  // namespace pbftune
