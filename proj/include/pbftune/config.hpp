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
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pbftune/analysis.hpp"
#include "pbftune/bo.hpp"
#include "pbftune/closedloop.hpp"
#include "pbftune/cost.hpp"
#include "pbftune/csv.hpp"
#include "pbftune/error.hpp"
#include "pbftune/scanpath.hpp"
#include "pbftune/tuning.hpp"

namespace pbftune {

struct ControllerSection {
    double u_min_W = 0.0;
    double u_max_W = 300.0;
    double sample_dt_s = 1e-5;
    double offline_reference_mV = 30.0;
    double online_reference_mV = 60.0;
    double wedge_reference_mV = 80.0;
};

struct ProcedureSection {
    double offline_pause_s = 3.0;
    double recoat_s = 13.0;
    double tuning_vector_mm = 10.0;
    double tuning_speed_mm_s = 800.0;
    double uncontrolled_power_W = 150.0;
};

struct AnalysisSection {
    int eval_layer = 90;
    ProcessWindow window;
};

/// Everything an experiment needs; every field has a default.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    PlantConfig plate = PlantConfig::plate();
    PlantConfig powder = PlantConfig::powder();
    ControllerSection controller;
    ProcedureSection procedure;
    CostConfig cost;
    BoConfig bo;
    WedgeGeometry geometry;
    AnalysisSection analysis;

    ControllerConfig controller_config(double reference_mV) const {
        return {reference_mV, controller.u_min_W, controller.u_max_W, controller.sample_dt_s};
    }

    PlantConfig plant_config(SubstrateKind kind) const {
        PlantConfig p = kind == SubstrateKind::Plate ? plate : powder;
        p.substrate = kind;
        p.sample_dt_s = controller.sample_dt_s;
        return p;
    }

    TuningSetup offline_setup() const {
        TuningSetup s;
        s.procedure.plant = plant_config(SubstrateKind::Plate);
        s.procedure.controller = controller_config(controller.offline_reference_mV);
        s.procedure.vector = tuning_vector(procedure.tuning_vector_mm, procedure.tuning_speed_mm_s);
        s.procedure.pause_s = procedure.offline_pause_s;
        s.cost = cost;
        s.bo = bo;
        s.seed = seed;
        return s;
    }

    TuningSetup online_setup() const {
        TuningSetup s = offline_setup();
        s.procedure.plant = plant_config(SubstrateKind::Powder);
        s.procedure.controller = controller_config(controller.online_reference_mV);
        s.procedure.pause_s = procedure.recoat_s;
        return s;
    }

    WedgeOptions wedge_options(bool uncontrolled) const {
        WedgeOptions w;
        w.plant = plant_config(SubstrateKind::Powder);
        w.controller = controller_config(controller.wedge_reference_mV);
        w.recoat_s = procedure.recoat_s;
        if (uncontrolled) {
            w.fixed_power_W = procedure.uncontrolled_power_W;
        }
        w.seed = seed;
        return w;
    }

    csv::BuildContext build_context() const {
        return {geometry, controller.wedge_reference_mV, controller.u_min_W, controller.sample_dt_s};
    }

    void validate() const {
        plant_config(SubstrateKind::Plate).validate();
        plant_config(SubstrateKind::Powder).validate();
        for (double r : {controller.offline_reference_mV, controller.online_reference_mV,
                         controller.wedge_reference_mV}) {
            controller_config(r).validate();
        }
        detail::require(procedure.offline_pause_s >= 0.0 && procedure.recoat_s >= 0.0,
                        "procedure: pauses must be >= 0");
        detail::require(procedure.tuning_vector_mm > 0.0 && procedure.tuning_speed_mm_s > 0.0,
                        "procedure: tuning vector length and speed must be > 0");
        detail::require(procedure.uncontrolled_power_W >= controller.u_min_W &&
                            procedure.uncontrolled_power_W <= controller.u_max_W,
                        "procedure: uncontrolled_power_W outside [u_min_W, u_max_W]");
        cost.validate();
        bo.validate();
        Kernel{bo.gp.variance, bo.gp.length_scales}.validate();
        detail::require(bo.gp.noise_var >= 0.0, "gp: noise_var must be >= 0");
        geometry.validate();
        detail::require(analysis.eval_layer >= 0, "analysis: eval_layer must be >= 0");
        analysis.window.validate();
    }
};

namespace detail {

using nlohmann::json;

/// Reads keys of one JSON object into fields, rejecting anything unknown.
class Section {
public:
    Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigError(path_ + ": expected an object");
        }
    }

    template <typename T>
    Section& get(const char* key, T& out) {
        seen_.push_back(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) {
            return *this;
        }
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
        return *this;
    }

    Section& get_pair(const char* key, Point2& out) {
        seen_.push_back(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) {
            return *this;
        }
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
            throw ConfigError(path_ + "." + key + ": expected [number, number]");
        }
        out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
        return *this;
    }

    template <typename F>
    Section& sub(const char* key, F&& read) {
        seen_.push_back(key);
        const auto it = obj_.find(key);
        if (it != obj_.end()) {
            Section s(*it, path_.empty() ? key : path_ + "." + key);
            read(s);
            s.finish();
        }
        return *this;
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            bool known = false;
            for (const auto& s : seen_) {
                known = known || s == key;
            }
            if (!known) {
                throw ConfigError("unknown config key '" + (path_.empty() ? key : path_ + "." + key) + "'");
            }
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string_view> seen_;
};

inline void read_plant(Section& s, PlantConfig& p) {
    s.get("gain_mV_per_W", p.gain_mV_per_W)
        .get("tau_rise_s", p.tau_rise_s)
        .get("tau_cool_s", p.tau_cool_s)
        .get("preheat_coupling", p.preheat_coupling)
        .get("concentration_ref_mm", p.concentration_ref_mm)
        .get("concentration_spread_mm", p.concentration_spread_mm)
        .get("noise_std_mV", p.noise_std_mV)
        .get("ambient_mV", p.ambient_mV);
}

}  // namespace detail

/// Parses a JSON config (comments allowed). Missing keys keep their defaults.
inline RunConfig parse_config(std::string_view text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig cfg;
    detail::Section top(root, "");
    std::string input_space = "normalized";
    std::string gain_scale = "log";
    Point2 kp_bounds{cfg.bo.bounds.lo[0], cfg.bo.bounds.hi[0]};
    Point2 ki_bounds{cfg.bo.bounds.lo[1], cfg.bo.bounds.hi[1]};
    Point2 init{cfg.bo.init.kp, cfg.bo.init.ki};
    Point2 length_scales{std::nan(""), std::nan("")};
    top.get("seed", cfg.seed)
        .get("output_dir", cfg.output_dir)
        .sub("plant",
             [&](detail::Section& s) {
                 s.sub("plate", [&](detail::Section& p) { detail::read_plant(p, cfg.plate); })
                     .sub("powder", [&](detail::Section& p) { detail::read_plant(p, cfg.powder); });
             })
        .sub("controller",
             [&](detail::Section& s) {
                 s.get("u_min_W", cfg.controller.u_min_W)
                     .get("u_max_W", cfg.controller.u_max_W)
                     .get("sample_dt_s", cfg.controller.sample_dt_s)
                     .get("offline_reference_mV", cfg.controller.offline_reference_mV)
                     .get("online_reference_mV", cfg.controller.online_reference_mV)
                     .get("wedge_reference_mV", cfg.controller.wedge_reference_mV);
             })
        .sub("procedure",
             [&](detail::Section& s) {
                 s.get("offline_pause_s", cfg.procedure.offline_pause_s)
                     .get("recoat_s", cfg.procedure.recoat_s)
                     .get("tuning_vector_mm", cfg.procedure.tuning_vector_mm)
                     .get("tuning_speed_mm_s", cfg.procedure.tuning_speed_mm_s)
                     .get("uncontrolled_power_W", cfg.procedure.uncontrolled_power_W);
             })
        .sub("cost",
             [&](detail::Section& s) {
                 s.get("c_mse", cfg.cost.c_mse)
                     .get("c_sigma", cfg.cost.c_sigma)
                     .get("window_w", cfg.cost.window_w)
                     .get("band", cfg.cost.band);
             })
        .sub("gp",
             [&](detail::Section& s) {
                 s.get("input_space", input_space)
                     .get("variance", cfg.bo.gp.variance)
                     .get_pair("length_scales", length_scales)
                     .get("noise_var", cfg.bo.gp.noise_var)
                     .get("prior_mean", cfg.bo.gp.prior_mean)
                     .get("raw_cost_scale", cfg.bo.gp.raw_cost_scale);
             })
        .sub("bo",
             [&](detail::Section& s) {
                 s.get("gain_scale", gain_scale)
                     .get_pair("kp_bounds", kp_bounds)
                     .get_pair("ki_bounds", ki_bounds)
                     .get_pair("init", init)
                     .get("beta", cfg.bo.beta)
                     .get("iterations", cfg.bo.n_iterations)
                     .get("grid", cfg.bo.grid);
             })
        .sub("geometry",
             [&](detail::Section& s) {
                 s.get("angle_deg", cfg.geometry.angle_deg)
                     .get("max_vector_mm", cfg.geometry.max_vector_mm)
                     .get("hatch_spacing_mm", cfg.geometry.hatch_spacing_mm)
                     .get("layers", cfg.geometry.layers)
                     .get("speed_mm_s", cfg.geometry.speed_mm_s)
                     .get("turnaround_s", cfg.geometry.turnaround_s);
             })
        .sub("analysis",
             [&](detail::Section& s) {
                 s.get("eval_layer", cfg.analysis.eval_layer)
                     .get("lof_W", cfg.analysis.window.lof_W)
                     .get("keyhole_W", cfg.analysis.window.keyhole_W);
             })
        .finish();

    if (input_space == "normalized") {
        cfg.bo.gp.space = InputSpace::Normalized;
    } else if (input_space == "raw") {
        const GpSettings raw = GpSettings::raw();
        cfg.bo.gp.space = InputSpace::Raw;
        cfg.bo.gp.length_scales = raw.length_scales;
    } else {
        throw ConfigError("gp.input_space must be \"normalized\" or \"raw\"");
    }
    if (gain_scale == "log") {
        cfg.bo.bounds.scale = GainScale::Log;
    } else if (gain_scale == "linear") {
        cfg.bo.bounds.scale = GainScale::Linear;
    } else {
        throw ConfigError("bo.gain_scale must be \"log\" or \"linear\"");
    }
    if (!std::isnan(length_scales[0])) {
        cfg.bo.gp.length_scales = length_scales;
    }
    cfg.bo.bounds.lo = {kp_bounds[0], ki_bounds[0]};
    cfg.bo.bounds.hi = {kp_bounds[1], ki_bounds[1]};
    cfg.bo.init = {init[0], init[1]};
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = csv::read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return parse_config(text);
}

}  // namespace pbftune
