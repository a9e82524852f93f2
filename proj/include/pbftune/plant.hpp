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
#include <random>

#include "pbftune/error.hpp"

namespace pbftune {

enum class SubstrateKind { Plate, Powder };

/// Mixes a master seed with a stream index (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Lumped melt-pool emission model.
///
/// Emission follows a first-order lag towards `gain * power + preheat + ambient`.
/// The preheat accumulator integrates deposited laser energy, concentrated by
/// `concentration_ref_mm / (track_length + concentration_spread_mm)` so that short
/// tracks heat up faster, and decays with `tau_cool_s`.
struct PlantConfig {
    SubstrateKind substrate = SubstrateKind::Plate;
    double gain_mV_per_W = 0.15;
    double tau_rise_s = 2e-4;
    double tau_cool_s = 0.02;
    double preheat_coupling = 1.0;  // mV per (W s) at unit concentration
    double concentration_ref_mm = 10.0;
    double concentration_spread_mm = 0.5;
    double noise_std_mV = 1.0;
    double ambient_mV = 0.0;
    double sample_dt_s = 1e-5;

    static PlantConfig plate() { return PlantConfig{}; }

    static PlantConfig powder() {
        PlantConfig cfg;
        cfg.substrate = SubstrateKind::Powder;
        cfg.gain_mV_per_W = 0.30;
        cfg.preheat_coupling = 5.0;
        return cfg;
    }

    void validate() const {
        auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
        detail::require(finite_positive(gain_mV_per_W), "plant: gain_mV_per_W must be > 0");
        detail::require(finite_positive(tau_rise_s), "plant: tau_rise_s must be > 0");
        detail::require(finite_positive(tau_cool_s), "plant: tau_cool_s must be > 0");
        detail::require(finite_nonneg(preheat_coupling), "plant: preheat_coupling must be >= 0");
        detail::require(finite_positive(concentration_ref_mm), "plant: concentration_ref_mm must be > 0");
        detail::require(finite_positive(concentration_spread_mm),
                        "plant: concentration_spread_mm must be > 0");
        detail::require(finite_nonneg(noise_std_mV), "plant: noise_std_mV must be >= 0");
        detail::require(finite_nonneg(ambient_mV), "plant: ambient_mV must be >= 0");
        detail::require(finite_positive(sample_dt_s), "plant: sample_dt_s must be > 0");
        detail::require(sample_dt_s <= tau_rise_s, "plant: sample_dt_s must not exceed tau_rise_s");
    }
};

struct PlantState {
    double emission_mV = 0.0;
    double preheat_mV = 0.0;
    double concentration = 1.0;
    std::mt19937_64 rng;
    std::normal_distribution<double> noise{0.0, 1.0};
};

class Plant {
public:
    Plant(PlantConfig config, std::uint64_t seed) : config_(config) {
        config_.validate();
        cool_per_sample_ = std::exp(-config_.sample_dt_s / config_.tau_cool_s);
        rise_fraction_ = config_.sample_dt_s / config_.tau_rise_s;
        reset(seed);
    }

    void reset(std::uint64_t seed) {
        state_.emission_mV = config_.ambient_mV;
        state_.preheat_mV = 0.0;
        state_.concentration = 1.0;
        reseed(seed);
    }

    /// Restarts the noise stream without touching the thermal state.
    void reseed(std::uint64_t seed) {
        state_.rng.seed(seed);
        state_.noise.reset();
    }

    /// Sets the heat concentration for the track about to be exposed.
    void set_track_length(double length_mm) {
        if (!(length_mm > 0.0)) {
            throw ConfigError("plant: track length must be > 0");
        }
        state_.concentration =
            config_.concentration_ref_mm / (length_mm + config_.concentration_spread_mm);
    }

    /// Advances one sample with `power_W` applied; returns the new emission.
    double step(double power_W) {
        return advance(power_W, config_.noise_std_mV > 0.0);
    }

    /// Laser off for `seconds`, stepped sample by sample without sensor noise.
    void idle(double seconds) {
        const auto samples = static_cast<long>(std::llround(seconds / config_.sample_dt_s));
        for (long k = 0; k < samples; ++k) {
            advance(0.0, false);
        }
    }

    /// Long laser-off pause: preheat decays, emission back to ambient.
    void rest(double seconds) {
        if (!(seconds >= 0.0)) {
            throw ConfigError("plant: pause duration must be >= 0");
        }
        state_.preheat_mV *= std::exp(-seconds / config_.tau_cool_s);
        state_.emission_mV = config_.ambient_mV;
    }

    void recoat(double seconds) { rest(seconds); }

    const PlantState& state() const { return state_; }
    const PlantConfig& config() const { return config_; }

private:
    double advance(double power_W, bool noisy) {
        double target = config_.gain_mV_per_W * power_W + state_.preheat_mV + config_.ambient_mV;
        double next = state_.emission_mV + rise_fraction_ * (target - state_.emission_mV);
        if (noisy) {
            next += config_.noise_std_mV * state_.noise(state_.rng);
        }
        state_.emission_mV = next < 0.0 ? 0.0 : next;
        state_.preheat_mV = state_.preheat_mV * cool_per_sample_ +
                            config_.preheat_coupling * state_.concentration * power_W *
                                config_.sample_dt_s;
        return state_.emission_mV;
    }

    PlantConfig config_;
    PlantState state_;
    double cool_per_sample_ = 1.0;
    double rise_fraction_ = 0.0;
};

}  // namespace pbftune
