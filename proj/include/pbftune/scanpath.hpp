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
#include <numbers>
#include <vector>

#include "pbftune/error.hpp"

namespace pbftune {

struct ScanVector {
    double length_mm = 10.0;
    double speed_mm_s = 800.0;
    double inter_vector_delay_s = 0.0;
    /// Hatch offset of the vector start, used for spatial exports.
    double x_mm = 0.0;

    /// Number of sensor samples taken while the beam travels the vector.
    long sample_count(double sample_dt_s) const {
        return std::lround(length_mm / speed_mm_s / sample_dt_s);
    }
};

struct WedgeGeometry {
    double angle_deg = 28.0;
    double max_vector_mm = 10.0;
    double hatch_spacing_mm = 0.1;
    int layers = 120;
    double speed_mm_s = 800.0;
    double turnaround_s = 5e-4;

    void validate() const {
        detail::require(std::isfinite(angle_deg) && angle_deg > 0.0 && angle_deg < 90.0,
                        "geometry: angle_deg must lie in (0, 90)");
        detail::require(std::isfinite(max_vector_mm) && max_vector_mm > 0.0,
                        "geometry: max_vector_mm must be > 0");
        detail::require(std::isfinite(hatch_spacing_mm) && hatch_spacing_mm > 0.0,
                        "geometry: hatch_spacing_mm must be > 0");
        detail::require(layers > 0, "geometry: layers must be > 0");
        detail::require(std::isfinite(speed_mm_s) && speed_mm_s > 0.0,
                        "geometry: speed_mm_s must be > 0");
        detail::require(std::isfinite(turnaround_s) && turnaround_s >= 0.0,
                        "geometry: turnaround_s must be >= 0");
    }

    /// Length lost per hatch step.
    double shrink_per_vector_mm() const {
        return hatch_spacing_mm / std::tan(angle_deg * std::numbers::pi / 180.0);
    }
};

/// The single straight exposure used for every tuning iteration.
inline ScanVector tuning_vector(double length_mm = 10.0, double speed_mm_s = 800.0) {
    if (!(length_mm > 0.0) || !std::isfinite(length_mm)) {
        throw ConfigError("scanpath: tuning vector length must be > 0");
    }
    if (!(speed_mm_s > 0.0) || !std::isfinite(speed_mm_s)) {
        throw ConfigError("scanpath: tuning vector speed must be > 0");
    }
    return ScanVector{length_mm, speed_mm_s, 0.0, 0.0};
}

/// Unidirectional hatch of one wedge layer, longest vector first.
///
/// The cross-section is identical on every layer, so `layer_idx` only gets
/// range-checked.
inline std::vector<ScanVector> wedge_layer(const WedgeGeometry& geom, int layer_idx,
                                           double sample_dt_s = 1e-5) {
    geom.validate();
    if (layer_idx < 0 || layer_idx >= geom.layers) {
        throw ConfigError("scanpath: layer index out of range");
    }
    const double shrink = geom.shrink_per_vector_mm();
    std::vector<ScanVector> vectors;
    for (long k = 0;; ++k) {
        const double length = geom.max_vector_mm - static_cast<double>(k) * shrink;
        if (length <= 0.0) {
            break;
        }
        ScanVector v{length, geom.speed_mm_s, geom.turnaround_s,
                     static_cast<double>(k) * geom.hatch_spacing_mm};
        if (v.sample_count(sample_dt_s) < 1) {
            break;
        }
        vectors.push_back(v);
    }
    return vectors;
}

}  // namespace pbftune
