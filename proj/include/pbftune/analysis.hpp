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
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "pbftune/bo.hpp"
#include "pbftune/cost.hpp"
#include "pbftune/error.hpp"
#include "pbftune/trace.hpp"

namespace pbftune {

struct TermMeans {
    double mse_prime = 0.0;
    double rise_prime = 0.0;
    double sigma_prime = 0.0;
};

struct VectorCostStat {
    std::size_t vector_idx = 0;
    double length_mm = 0.0;
    double mean_cost = 0.0;
    double ci95_halfwidth = 0.0;
    std::size_t n = 0;
    TermMeans term_means;
};

struct ProcessWindow {
    double lof_W = 140.0;
    double keyhole_W = 210.0;

    void validate() const {
        detail::require(std::isfinite(lof_W) && std::isfinite(keyhole_W) && lof_W < keyhole_W,
                        "analysis: process window needs lof_W < keyhole_W");
    }
};

/// Cost of every vector, grouped by hatch index across layers.
///
/// The confidence half-width uses the normal approximation 1.96 * sd / sqrt(n)
/// with the sample standard deviation; a single layer gives zero width.
inline std::vector<VectorCostStat> per_vector_costs(const BuildRecord& build, const CostConfig& cfg = {}) {
    if (build.layers.empty()) {
        throw InputError("analysis: empty build");
    }
    std::size_t width = 0;
    for (const auto& layer : build.layers) {
        width = std::max(width, layer.size());
    }
    if (width == 0) {
        throw InputError("analysis: build has no vectors");
    }
    std::vector<std::vector<CostBreakdown>> groups(width);
    std::vector<double> lengths(width, 0.0);
    for (const auto& layer : build.layers) {
        for (std::size_t v = 0; v < layer.size(); ++v) {
            if (groups[v].empty()) {
                lengths[v] = layer[v].vector.length_mm;
            }
            groups[v].push_back(composite_cost(layer[v].trace, cfg));
        }
    }
    std::vector<VectorCostStat> out;
    out.reserve(width);
    for (std::size_t v = 0; v < width; ++v) {
        const auto& g = groups[v];
        VectorCostStat s;
        s.vector_idx = v;
        s.length_mm = lengths[v];
        s.n = g.size();
        const auto n = static_cast<double>(g.size());
        for (const auto& c : g) {
            s.mean_cost += c.total;
            s.term_means.mse_prime += c.mse_prime;
            s.term_means.rise_prime += c.rise_prime;
            s.term_means.sigma_prime += c.sigma_prime;
        }
        s.mean_cost /= n;
        s.term_means.mse_prime /= n;
        s.term_means.rise_prime /= n;
        s.term_means.sigma_prime /= n;
        if (g.size() > 1) {
            double ss = 0.0;
            for (const auto& c : g) {
                ss += (c.total - s.mean_cost) * (c.total - s.mean_cost);
            }
            s.ci95_halfwidth = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
        out.push_back(s);
    }
    return out;
}

enum class BandLabel : std::int8_t { Below = -1, Within = 0, Above = 1 };

inline BandLabel classify(double y, double reference, double band) {
    if (within_band(y, reference, band)) {
        return BandLabel::Within;
    }
    return y < reference ? BandLabel::Below : BandLabel::Above;
}

struct BandFractions {
    double below = 0.0;
    double within = 0.0;
    double above = 0.0;
    /// Samples before the first sample that is not below the band.
    std::size_t leading_below = 0;
    std::size_t samples = 0;
};

struct BandClassification {
    /// [layer][vector]
    std::vector<std::vector<BandFractions>> per_vector;
    std::vector<BandFractions> per_layer;
};

inline std::vector<BandLabel> band_labels(std::span<const double> y, double reference, double band = 0.05) {
    std::vector<BandLabel> out;
    out.reserve(y.size());
    for (double v : y) {
        out.push_back(classify(v, reference, band));
    }
    return out;
}

inline BandClassification band_classification(const BuildRecord& build, double reference_mV,
                                              double band = 0.05) {
    BandClassification out;
    out.per_vector.reserve(build.layers.size());
    for (const auto& layer : build.layers) {
        std::vector<BandFractions> vecs;
        vecs.reserve(layer.size());
        std::size_t counts[3] = {0, 0, 0};
        std::size_t layer_samples = 0;
        for (const auto& ev : layer) {
            std::size_t c[3] = {0, 0, 0};
            BandFractions f;
            bool leading = true;
            for (double y : ev.trace.y_mV) {
                const BandLabel label = classify(y, reference_mV, band);
                ++c[static_cast<int>(label) + 1];
                if (leading && label == BandLabel::Below) {
                    ++f.leading_below;
                } else {
                    leading = false;
                }
            }
            f.samples = ev.trace.size();
            if (f.samples > 0) {
                const auto n = static_cast<double>(f.samples);
                f.below = static_cast<double>(c[0]) / n;
                f.within = static_cast<double>(c[1]) / n;
                f.above = static_cast<double>(c[2]) / n;
            }
            for (int i = 0; i < 3; ++i) {
                counts[i] += c[i];
            }
            layer_samples += f.samples;
            vecs.push_back(f);
        }
        BandFractions lf;
        lf.samples = layer_samples;
        if (layer_samples > 0) {
            const auto n = static_cast<double>(layer_samples);
            lf.below = static_cast<double>(counts[0]) / n;
            lf.within = static_cast<double>(counts[1]) / n;
            lf.above = static_cast<double>(counts[2]) / n;
        }
        lf.leading_below = vecs.empty() ? 0 : vecs.front().leading_below;
        out.per_vector.push_back(std::move(vecs));
        out.per_layer.push_back(lf);
    }
    return out;
}

struct WindowFraction {
    double below_lof = 0.0;
    double above_keyhole = 0.0;
    std::size_t samples = 0;
};

struct WindowFlags {
    /// [layer][vector]
    std::vector<std::vector<WindowFraction>> per_vector;
    std::vector<WindowFraction> per_layer;
};

/// Share of commanded-power samples outside the process window.
inline WindowFlags window_flags(const BuildRecord& build, const ProcessWindow& pw = {}) {
    pw.validate();
    WindowFlags out;
    out.per_vector.reserve(build.layers.size());
    for (const auto& layer : build.layers) {
        std::vector<WindowFraction> vecs;
        vecs.reserve(layer.size());
        std::size_t layer_low = 0;
        std::size_t layer_high = 0;
        std::size_t layer_n = 0;
        for (const auto& ev : layer) {
            std::size_t low = 0;
            std::size_t high = 0;
            for (double u : ev.trace.u_W) {
                low += u < pw.lof_W ? 1 : 0;
                high += u > pw.keyhole_W ? 1 : 0;
            }
            WindowFraction f;
            f.samples = ev.trace.u_W.size();
            if (f.samples > 0) {
                f.below_lof = static_cast<double>(low) / static_cast<double>(f.samples);
                f.above_keyhole = static_cast<double>(high) / static_cast<double>(f.samples);
            }
            layer_low += low;
            layer_high += high;
            layer_n += f.samples;
            vecs.push_back(f);
        }
        WindowFraction lf;
        lf.samples = layer_n;
        if (layer_n > 0) {
            lf.below_lof = static_cast<double>(layer_low) / static_cast<double>(layer_n);
            lf.above_keyhole = static_cast<double>(layer_high) / static_cast<double>(layer_n);
        }
        out.per_vector.push_back(std::move(vecs));
        out.per_layer.push_back(lf);
    }
    return out;
}

/// Running minimum.
inline std::vector<double> best_so_far(std::span<const double> costs) {
    if (costs.empty()) {
        throw InputError("analysis: empty cost history");
    }
    std::vector<double> out(costs.size());
    double best = costs[0];
    for (std::size_t i = 0; i < costs.size(); ++i) {
        best = std::min(best, costs[i]);
        out[i] = best;
    }
    return out;
}

inline std::vector<double> best_so_far(const BoHistory& history) {
    std::vector<double> totals;
    totals.reserve(history.records.size());
    for (const auto& r : history.records) {
        totals.push_back(r.cost.total);
    }
    return best_so_far(totals);
}

namespace detail {

/// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

/// Spearman rank correlation (Pearson on average ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("analysis: spearman needs two equally sized samples of length >= 2");
    }
    const auto rx = detail::average_ranks(x);
    const auto ry = detail::average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace pbftune
