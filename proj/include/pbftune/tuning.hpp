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

#include <cstdint>
#include <vector>

#include "pbftune/bo.hpp"
#include "pbftune/closedloop.hpp"
#include "pbftune/cost.hpp"

namespace pbftune {

struct TuningSetup {
    TuningProcedure procedure;
    CostConfig cost;
    BoConfig bo;
    std::uint64_t seed = 0;
};

/// Wires the BO loop to a simulated tuning rig.
inline TuneResult run_tuning(const TuningSetup& setup, const std::vector<IterationRecord>& resume = {},
                             const IterationCallback& on_iteration = {}) {
    setup.cost.validate();
    TuningRig rig(setup.procedure, setup.seed);
    const Objective objective = [&](const ControllerGains& gains, int iteration) {
        return composite_cost(rig.run_iteration(gains, iteration), setup.cost);
    };
    return tune(objective, setup.bo, resume, on_iteration);
}

/// Tuning on the bare plate.
inline TuneResult run_offline_tuning(const TuningSetup& setup,
                                     const std::vector<IterationRecord>& resume = {},
                                     const IterationCallback& on_iteration = {}) {
    detail::require(setup.procedure.plant.substrate == SubstrateKind::Plate,
                    "tuning: offline tuning runs on a plate plant");
    return run_tuning(setup, resume, on_iteration);
}

/// Tuning on a sacrificial powder wall, recoating after every iteration.
inline TuneResult run_online_tuning(const TuningSetup& setup,
                                    const std::vector<IterationRecord>& resume = {},
                                    const IterationCallback& on_iteration = {}) {
    detail::require(setup.procedure.plant.substrate == SubstrateKind::Powder,
                    "tuning: online tuning runs on a powder plant");
    return run_tuning(setup, resume, on_iteration);
}

inline TuningSetup offline_setup(std::uint64_t seed = 0) {
    return TuningSetup{TuningProcedure::offline(), CostConfig{}, BoConfig{}, seed};
}

inline TuningSetup online_setup(std::uint64_t seed = 0) {
    return TuningSetup{TuningProcedure::online(), CostConfig{}, BoConfig{}, seed};
}

}  // namespace pbftune
