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
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pbftune/error.hpp"
#include "pbftune/trace.hpp"

namespace pbftune {

struct CostConfig {
    double c_mse = 500.0;
    double c_sigma = 150.0;
    int window_w = 100;
    double band = 0.05;

    void validate() const {
        detail::require(std::isfinite(c_mse) && c_mse > 0.0, "cost: c_mse must be > 0");
        detail::require(std::isfinite(c_sigma) && c_sigma > 0.0, "cost: c_sigma must be > 0");
        detail::require(window_w >= 1, "cost: window_w must be >= 1");
        detail::require(std::isfinite(band) && band > 0.0, "cost: band must be > 0");
    }
};

struct CostBreakdown {
    double mse_prime = 0.0;
    double rise_prime = 1.0;
    double sigma_prime = 0.0;
    double total = 0.0;
    /// 1-based index of the first in-band sample; empty if the band is never reached.
    std::optional<std::size_t> rise_index;
};

inline bool within_band(double y, double reference, double band) {
    return std::abs(y - reference) <= band * reference;
}

/// Squared tracking error over the second half of the vector, normalized by
/// the full length and c_mse.
inline double mse_prime(std::span<const double> y, double reference, const CostConfig& cfg) {
    const std::size_t n = y.size();
    if (n == 0) {
        throw InputError("cost: empty trace");
    }
    double sum = 0.0;
    for (std::size_t i = (n + 1) / 2; i < n; ++i) {
        const double d = y[i] - reference;
        sum += d * d;
    }
    return sum / (static_cast<double>(n) * cfg.c_mse);
}

inline double mse_prime(const Trace& trace, const CostConfig& cfg) {
    return mse_prime(trace.y_mV, trace.reference_mV, cfg);
}

inline std::optional<std::size_t> rise_index(std::span<const double> y, double reference,
                                             double band) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (within_band(y[i], reference, band)) {
            return i + 1;
        }
    }
    return std::nullopt;
}

/// First band entry as a fraction of the vector; 1 if the band is never reached.
inline double rise_prime(std::span<const double> y, double reference, const CostConfig& cfg) {
    if (y.empty()) {
        throw InputError("cost: empty trace");
    }
    const auto k = rise_index(y, reference, cfg.band);
    return k ? static_cast<double>(*k) / static_cast<double>(y.size()) : 1.0;
}

inline double rise_prime(const Trace& trace, const CostConfig& cfg) {
    return rise_prime(trace.y_mV, trace.reference_mV, cfg);
}

/// Forward-looking moving average; the window shrinks to whatever is left at the tail.
inline std::vector<double> rolling_mean(std::span<const double> u, int w) {
    if (w < 1) {
        throw InputError("cost: rolling window must be >= 1");
    }
    const std::size_t n = u.size();
    const auto width = static_cast<std::size_t>(w);
    std::vector<double> mu(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t end = std::min(n, i + width);
        double sum = 0.0;
        for (std::size_t j = i; j < end; ++j) {
            sum += u[j];
        }
        mu[i] = sum / static_cast<double>(end - i);
    }
    return mu;
}

/// RMS deviation of the power command from its rolling mean, over c_sigma.
inline double sigma_prime(std::span<const double> u, const CostConfig& cfg) {
    if (u.empty()) {
        throw InputError("cost: empty power sequence");
    }
    const auto mu = rolling_mean(u, cfg.window_w);
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - mu[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(u.size())) / cfg.c_sigma;
}

inline CostBreakdown composite_cost(const Trace& trace, const CostConfig& cfg = {}) {
    if (trace.y_mV.empty() || trace.u_W.size() != trace.y_mV.size()) {
        throw InputError("cost: trace is empty or has mismatched power/emission lengths");
    }
    CostBreakdown out;
    out.mse_prime = mse_prime(trace, cfg);
    out.rise_index = rise_index(trace.y_mV, trace.reference_mV, cfg.band);
    out.rise_prime = out.rise_index
                         ? static_cast<double>(*out.rise_index) / static_cast<double>(trace.size())
                         : 1.0;
    out.sigma_prime = sigma_prime(trace.u_W, cfg);
    out.total = std::sqrt(out.mse_prime * out.mse_prime + out.rise_prime * out.rise_prime +
                          out.sigma_prime * out.sigma_prime);
    return out;
}

}  // namespace pbftune
