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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pbftune/controller.hpp"
#include "pbftune/cost.hpp"
#include "pbftune/error.hpp"
#include "pbftune/gp.hpp"

namespace pbftune {

/// How each gain axis is mapped onto [0, 1].
enum class GainScale {
    Log,     ///< affine in log(gain)
    Linear,  ///< affine in gain
};

/// Box over (kp, ki) and its map to the unit square.
struct GainBounds {
    Point2 lo{1.0, 100.0};
    Point2 hi{100.0, 1.6e6};
    GainScale scale = GainScale::Log;

    void validate() const {
        for (int d = 0; d < 2; ++d) {
            detail::require(std::isfinite(lo[d]) && std::isfinite(hi[d]) && lo[d] < hi[d],
                            "bo: bounds must be finite with lo < hi");
            detail::require(scale != GainScale::Log || lo[d] > 0.0, "bo: log gain scale needs positive bounds");
        }
    }

    Point2 normalize(const ControllerGains& g) const { return {to_unit(g.kp, 0), to_unit(g.ki, 1)}; }

    ControllerGains denormalize(const Point2& t) const { return {from_unit(t[0], 0), from_unit(t[1], 1)}; }

    bool contains(const ControllerGains& g) const {
        return g.kp >= lo[0] && g.kp <= hi[0] && g.ki >= lo[1] && g.ki <= hi[1];
    }

private:
    double to_unit(double v, int d) const {
        if (scale == GainScale::Log) {
            return std::log(v / lo[d]) / std::log(hi[d] / lo[d]);
        }
        return (v - lo[d]) / (hi[d] - lo[d]);
    }

    double from_unit(double t, int d) const {
        const double v = scale == GainScale::Log ? lo[d] * std::exp(t * std::log(hi[d] / lo[d]))
                                                 : lo[d] + t * (hi[d] - lo[d]);
        return std::clamp(v, lo[d], hi[d]);
    }
};

/// Coordinates the GP works in.
enum class InputSpace {
    Normalized,  ///< unit square (see GainScale), costs divided by the first observed cost
    Raw,         ///< physical gain units, costs divided by a fixed output scale
};

struct GpSettings {
    InputSpace space = InputSpace::Normalized;
    double variance = 1.0;
    Point2 length_scales{0.5, 0.5};
    double noise_var = 1e-2;
    double prior_mean = 0.0;
    /// Output scale used in raw mode.
    double raw_cost_scale = 200.0;

    /// Hyperparameters quoted in physical units.
    static GpSettings raw() {
        GpSettings s;
        s.space = InputSpace::Raw;
        s.length_scales = {50.0, 100.0};
        return s;
    }
};

struct BoConfig {
    GainBounds bounds;
    double beta = 2.0;
    int n_iterations = 200;
    ControllerGains init{1.0, 100.0};
    int grid = 101;
    GpSettings gp;

    void validate() const {
        bounds.validate();
        detail::require(std::isfinite(beta) && beta > 0.0, "bo: beta must be > 0");
        detail::require(n_iterations >= 1, "bo: n_iterations must be >= 1");
        detail::require(grid >= 2, "bo: grid must be >= 2");
        detail::require(bounds.contains(init), "bo: init must lie inside the bounds");
        detail::require(std::isfinite(gp.raw_cost_scale) && gp.raw_cost_scale > 0.0,
                        "bo: raw_cost_scale must be > 0");
    }
};

struct IterationRecord {
    int iteration = 0;
    ControllerGains gains;
    CostBreakdown cost;
    /// GP prediction at the chosen gains before evaluating them, in cost units.
    double predicted_mean = 0.0;
    double predicted_var = 0.0;
    double best_so_far = 0.0;
};

struct BoHistory {
    std::vector<IterationRecord> records;

    std::vector<double> best_so_far() const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const auto& r : records) {
            out.push_back(r.best_so_far);
        }
        return out;
    }
};

struct TuneResult {
    ControllerGains best_gains;
    CostBreakdown best_cost;
    int best_iteration = 0;
    BoHistory history;
};

/// Raised when an evaluation fails; carries everything completed so far.
class TuningAborted : public std::runtime_error {
public:
    enum class Kind { Numerical, Loop, Other };

    TuningAborted(const std::string& what, Kind kind, BoHistory partial)
        : std::runtime_error(what), kind_(kind), partial_(std::move(partial)) {}

    Kind kind() const { return kind_; }
    const BoHistory& partial_history() const { return partial_; }

private:
    Kind kind_;
    BoHistory partial_;
};

struct Acquisition {
    Point2 point{0.0, 0.0};  ///< unit-square coordinates
    double value = 0.0;
    double mean = 0.0;       ///< GP units
    double variance = 0.0;   ///< GP units
};

namespace detail {

inline Point2 to_gp_space(const Point2& unit, const BoConfig& cfg) {
    if (cfg.gp.space == InputSpace::Normalized) {
        return unit;
    }
    const auto g = cfg.bounds.denormalize(unit);
    return {g.kp, g.ki};
}

}  // namespace detail

/// Lower-confidence-bound acquisition for minimization, maximized as
/// `-mean + beta * stddev` over a regular grid on the unit square followed by
/// one pass at half spacing around the grid winner. Ties keep the
/// lexicographically smallest (kp, ki) candidate.
inline Acquisition acquire(const GpModel& model, const BoConfig& cfg) {
    const int g = cfg.grid;
    const double h = 1.0 / static_cast<double>(g - 1);
    Eigen::Matrix<double, 2, Eigen::Dynamic> unit(2, static_cast<Eigen::Index>(g) * g);
    Eigen::Matrix<double, 2, Eigen::Dynamic> queries(2, unit.cols());
    Eigen::Index col = 0;
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j, ++col) {
            const Point2 t{i * h, j * h};
            const Point2 q = detail::to_gp_space(t, cfg);
            unit(0, col) = t[0];
            unit(1, col) = t[1];
            queries(0, col) = q[0];
            queries(1, col) = q[1];
        }
    }
    Eigen::VectorXd mean;
    Eigen::VectorXd var;
    model.posterior(queries, mean, var);

    Acquisition best;
    best.value = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < unit.cols(); ++c) {
        const double a = -mean(c) + cfg.beta * std::sqrt(var(c));
        if (a > best.value) {
            best = {{unit(0, c), unit(1, c)}, a, mean(c), var(c)};
        }
    }

    const Point2 centre = best.point;
    for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
            if (a == 0 && b == 0) {
                continue;
            }
            const Point2 t{centre[0] + 0.5 * h * a, centre[1] + 0.5 * h * b};
            if (t[0] < 0.0 || t[0] > 1.0 || t[1] < 0.0 || t[1] > 1.0) {
                continue;
            }
            const Posterior p = model.posterior(detail::to_gp_space(t, cfg));
            const double value = -p.mean + cfg.beta * std::sqrt(p.variance);
            if (value > best.value) {
                best = {t, value, p.mean, p.variance};
            }
        }
    }
    return best;
}

using Objective = std::function<CostBreakdown(const ControllerGains&, int iteration)>;
using IterationCallback = std::function<void(const IterationRecord&)>;

/// Sequential BO: the initial gains first, then `n_iterations - 1` acquired points.
///
/// `resume` replays a previously recorded prefix: its gains are re-evaluated
/// (so stateful objectives reach the same state) and must reproduce the
/// recorded costs exactly; acquisition is skipped for those iterations.
inline TuneResult tune(const Objective& objective, const BoConfig& cfg,
                       const std::vector<IterationRecord>& resume = {},
                       const IterationCallback& on_iteration = {}) {
    cfg.validate();
    if (static_cast<int>(resume.size()) > cfg.n_iterations) {
        throw InputError("bo: resume history is longer than the iteration budget");
    }
    GpModel model(Kernel{cfg.gp.variance, cfg.gp.length_scales}, cfg.gp.noise_var, cfg.gp.prior_mean);
    double scale = cfg.gp.space == InputSpace::Raw ? cfg.gp.raw_cost_scale : 1.0;

    TuneResult result;
    auto& records = result.history.records;
    records.reserve(static_cast<std::size_t>(cfg.n_iterations));
    double best = std::numeric_limits<double>::infinity();

    for (int j = 0; j < cfg.n_iterations; ++j) {
        IterationRecord rec;
        rec.iteration = j;
        const bool replay = j < static_cast<int>(resume.size());
        if (replay) {
            rec.gains = resume[static_cast<std::size_t>(j)].gains;
            rec.predicted_mean = resume[static_cast<std::size_t>(j)].predicted_mean;
            rec.predicted_var = resume[static_cast<std::size_t>(j)].predicted_var;
            if (!cfg.bounds.contains(rec.gains)) {
                throw InputError("bo: resumed gains outside the bounds");
            }
        } else if (j == 0) {
            rec.gains = cfg.init;
            const Posterior prior = model.posterior(detail::to_gp_space(cfg.bounds.normalize(cfg.init), cfg));
            rec.predicted_mean = prior.mean * scale;
            rec.predicted_var = prior.variance * scale * scale;
        } else {
            const Acquisition acq = acquire(model, cfg);
            rec.gains = cfg.bounds.denormalize(acq.point);
            rec.predicted_mean = acq.mean * scale;
            rec.predicted_var = acq.variance * scale * scale;
        }

        try {
            rec.cost = objective(rec.gains, j);
        } catch (const LoopFault& e) {
            throw TuningAborted(e.what(), TuningAborted::Kind::Loop, result.history);
        } catch (const NumericalError& e) {
            throw TuningAborted(e.what(), TuningAborted::Kind::Numerical, result.history);
        } catch (const std::exception& e) {
            throw TuningAborted(e.what(), TuningAborted::Kind::Other, result.history);
        }
        if (replay && rec.cost.total != resume[static_cast<std::size_t>(j)].cost.total) {
            throw InputError("bo: resumed iteration " + std::to_string(j) +
                             " does not reproduce its recorded cost");
        }
        if (!std::isfinite(rec.cost.total)) {
            throw TuningAborted("bo: non-finite cost", TuningAborted::Kind::Numerical, result.history);
        }
        if (j == 0 && cfg.gp.space == InputSpace::Normalized) {
            scale = rec.cost.total > 0.0 ? rec.cost.total : 1.0;
        }
        try {
            model.add(detail::to_gp_space(cfg.bounds.normalize(rec.gains), cfg), rec.cost.total / scale);
        } catch (const NumericalError& e) {
            throw TuningAborted(e.what(), TuningAborted::Kind::Numerical, result.history);
        }

        if (rec.cost.total < best) {
            best = rec.cost.total;
            result.best_gains = rec.gains;
            result.best_cost = rec.cost;
            result.best_iteration = j;
        }
        rec.best_so_far = best;
        records.push_back(rec);
        if (on_iteration) {
            on_iteration(rec);
        }
    }
    return result;
}

}  // namespace pbftune
