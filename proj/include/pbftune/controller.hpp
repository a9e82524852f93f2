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

#include <algorithm>
#include <cmath>

#include "pbftune/error.hpp"

namespace pbftune {

/// PI gains. kp in W/mV, ki in W/(mV s).
struct ControllerGains {
    double kp = 0.0;
    double ki = 0.0;

    friend bool operator==(const ControllerGains&, const ControllerGains&) = default;
};

struct ControllerConfig {
    double reference_mV = 30.0;
    double u_min_W = 0.0;
    double u_max_W = 300.0;
    double sample_dt_s = 1e-5;

    void validate() const {
        detail::require(std::isfinite(reference_mV) && reference_mV > 0.0,
                        "controller: reference_mV must be > 0");
        detail::require(std::isfinite(u_min_W) && u_min_W >= 0.0, "controller: u_min_W must be >= 0");
        detail::require(std::isfinite(u_max_W) && u_max_W > u_min_W,
                        "controller: u_max_W must exceed u_min_W");
        detail::require(std::isfinite(sample_dt_s) && sample_dt_s > 0.0,
                        "controller: sample_dt_s must be > 0");
    }
};

struct ControllerState {
    double integral_mVs = 0.0;
};

inline void controller_reset(ControllerState& state) { state.integral_mVs = 0.0; }

/// One backward-Euler PI update with output clamping.
///
/// The integrator only accumulates when the unclamped output lies inside
/// [u_min, u_max] (conditional integration).
inline double pi_step(ControllerState& state, const ControllerGains& gains,
                      const ControllerConfig& config, double measurement_mV) {
    if (std::isnan(measurement_mV)) {
        throw LoopFault("controller: NaN measurement");
    }
    const double error = config.reference_mV - measurement_mV;
    const double candidate = state.integral_mVs + error * config.sample_dt_s;
    const double raw = gains.kp * error + gains.ki * candidate;
    if (std::isnan(raw)) {
        throw LoopFault("controller: NaN output");
    }
    if (raw >= config.u_min_W && raw <= config.u_max_W) {
        state.integral_mVs = candidate;
        return raw;
    }
    return std::clamp(raw, config.u_min_W, config.u_max_W);
}

}  // namespace pbftune
