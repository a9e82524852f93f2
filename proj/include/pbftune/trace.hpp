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

#include <cstddef>
#include <vector>

#include "pbftune/scanpath.hpp"

namespace pbftune {

/// Sampled record of one exposed vector.
///
/// `u_W` holds the commanded laser power and `applied_W` what the plant saw,
/// which lags the command by one sample.
struct Trace {
    double dt_s = 1e-5;
    double reference_mV = 30.0;
    std::vector<double> u_W;
    std::vector<double> applied_W;
    std::vector<double> y_mV;

    std::size_t size() const { return y_mV.size(); }
};

struct ExposedVector {
    ScanVector vector;
    Trace trace;
};

using LayerRecord = std::vector<ExposedVector>;

struct BuildRecord {
    std::vector<LayerRecord> layers;

    std::size_t sample_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers) {
            for (const auto& v : layer) {
                n += v.trace.size();
            }
        }
        return n;
    }
};

}  // namespace pbftune
