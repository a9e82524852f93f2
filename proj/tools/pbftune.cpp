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

// Command-line front end: BO tuning runs, wedge builds and offline analysis.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pbftune/analysis.hpp"
#include "pbftune/bo.hpp"
#include "pbftune/closedloop.hpp"
#include "pbftune/config.hpp"
#include "pbftune/csv.hpp"
#include "pbftune/error.hpp"
#include "pbftune/tuning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pbftune;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

RunConfig load(const CommonOptions& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
    }
    if (!opts.out_dir.empty()) {
        cfg.output_dir = opts.out_dir;
    }
    return cfg;
}

fs::path make_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir + ": " + ec.message());
    }
    return fs::path(dir);
}

json read_json(const fs::path& path) {
    const std::string text = csv::read_file(path.string());
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { csv::write_file(path.string(), j.dump(2) + "\n"); }

json gains_json(const ControllerGains& g) { return {{"kp", g.kp}, {"ki", g.ki}}; }

// --- tune -------------------------------------------------------------------

struct TuneOptions {
    CommonOptions common;
    std::string mode;
    std::optional<int> iterations;
    std::string resume_path;
};

int run_tune(const TuneOptions& opts) {
    RunConfig cfg = load(opts.common);
    if (opts.iterations) {
        cfg.bo.n_iterations = *opts.iterations;
    }
    cfg.validate();
    const bool offline = opts.mode == "offline";
    const TuningSetup setup = offline ? cfg.offline_setup() : cfg.online_setup();

    std::vector<IterationRecord> resume;
    if (!opts.resume_path.empty()) {
        resume = csv::parse_history(csv::read_file(opts.resume_path), opts.resume_path).records;
    }

    const fs::path dir = make_output_dir(cfg.output_dir);
    const fs::path history_path = dir / "history.csv";
    std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
    if (!history) {
        throw IoError("cannot open " + history_path.string() + " for writing");
    }
    history << csv::kHistoryHeader << '\n' << std::flush;
    const IterationCallback on_iteration = [&](const IterationRecord& r) {
        std::string line;
        csv::append_history_row(line, r);
        history << line << std::flush;
        if (!history) {
            throw IoError("failed writing " + history_path.string());
        }
    };

    const TuneResult result =
        offline ? run_offline_tuning(setup, resume, on_iteration) : run_online_tuning(setup, resume, on_iteration);

    const json summary = {
        {"mode", opts.mode},
        {"seed", cfg.seed},
        {"iterations", result.history.records.size()},
        {"best_gains", gains_json(result.best_gains)},
        {"best_cost", result.best_cost.total},
        {"best_iteration", result.best_iteration},
        {"initial_cost", result.history.records.front().cost.total},
    };
    write_json(dir / "summary.json", summary);
    std::cout << opts.mode << " tuning: best cost " << result.best_cost.total << " at iteration "
              << result.best_iteration << " (kp=" << result.best_gains.kp << ", ki=" << result.best_gains.ki
              << ")\n";
    return kOk;
}

// --- wedge ------------------------------------------------------------------

struct WedgeCliOptions {
    CommonOptions common;
    std::optional<double> angle;
    std::optional<int> layers;
    std::vector<double> gains;
    std::string summary_path;
    bool uncontrolled = false;
};

struct AnalysisOutputs {
    std::vector<VectorCostStat> stats;
};

AnalysisOutputs write_analysis(const fs::path& dir, const BuildRecord& build, const RunConfig& cfg) {
    const double reference = cfg.controller.wedge_reference_mV;
    AnalysisOutputs out;
    out.stats = per_vector_costs(build, cfg.cost);
    csv::write_file((dir / "vector_costs.csv").string(), csv::vector_costs_csv(out.stats));
    const auto bands = band_classification(build, reference, cfg.cost.band);
    csv::write_file((dir / "band_fractions.csv").string(), csv::band_fractions_csv(build, bands));
    const std::size_t eval_layer =
        std::min(static_cast<std::size_t>(cfg.analysis.eval_layer), build.layers.size() - 1);
    csv::write_file((dir / "band_map.csv").string(), csv::band_map_csv(build, eval_layer, reference, cfg.cost.band));
    csv::write_file((dir / "window_flags.csv").string(),
                    csv::window_flags_csv(build, window_flags(build, cfg.analysis.window)));
    return out;
}

void print_length_trend(const std::vector<VectorCostStat>& stats) {
    std::vector<double> lengths;
    std::vector<double> costs;
    for (const auto& s : stats) {
        lengths.push_back(s.length_mm);
        costs.push_back(s.mean_cost);
    }
    if (stats.size() >= 2) {
        std::cout << "spearman(length, mean cost) = " << spearman(lengths, costs) << "\n";
    }
}

int run_wedge(const WedgeCliOptions& opts) {
    RunConfig cfg = load(opts.common);
    if (opts.angle) {
        cfg.geometry.angle_deg = *opts.angle;
    }
    if (opts.layers) {
        cfg.geometry.layers = *opts.layers;
    }
    cfg.validate();

    ControllerGains gains;
    if (!opts.gains.empty()) {
        gains = {opts.gains[0], opts.gains[1]};
    } else if (!opts.summary_path.empty()) {
        const json summary = read_json(opts.summary_path);
        try {
            gains = {summary.at("best_gains").at("kp").get<double>(), summary.at("best_gains").at("ki").get<double>()};
        } catch (const json::exception& e) {
            throw IoError(opts.summary_path + ": " + e.what());
        }
    }
    if (!opts.uncontrolled && !(gains.kp >= 0.0 && gains.ki >= 0.0)) {
        throw ConfigError("wedge: gains must be >= 0");
    }

    const WedgeOptions wopts = cfg.wedge_options(opts.uncontrolled);
    const BuildRecord build = print_wedge(cfg.geometry, gains, wopts);

    const fs::path dir = make_output_dir(cfg.output_dir);
    csv::write_file((dir / "build.csv").string(), csv::build_csv(build));
    json meta = {
        {"geometry",
         {{"angle_deg", cfg.geometry.angle_deg},
          {"max_vector_mm", cfg.geometry.max_vector_mm},
          {"hatch_spacing_mm", cfg.geometry.hatch_spacing_mm},
          {"layers", cfg.geometry.layers},
          {"speed_mm_s", cfg.geometry.speed_mm_s},
          {"turnaround_s", cfg.geometry.turnaround_s}}},
        {"reference_mV", wopts.controller.reference_mV},
        {"u_min_W", wopts.controller.u_min_W},
        {"u_max_W", wopts.controller.u_max_W},
        {"sample_dt_s", wopts.controller.sample_dt_s},
        {"seed", cfg.seed},
        {"gains", opts.uncontrolled ? json(nullptr) : gains_json(gains)},
        {"fixed_power_W", wopts.fixed_power_W ? json(*wopts.fixed_power_W) : json(nullptr)},
    };
    write_json(dir / "build.meta.json", meta);
    const AnalysisOutputs a = write_analysis(dir, build, cfg);

    std::cout << "wedge " << cfg.geometry.angle_deg << " deg: " << build.layers.size() << " layers, "
              << build.layers.front().size() << " vectors per layer, " << build.sample_count() << " samples\n";
    print_length_trend(a.stats);
    return kOk;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeOptions {
    CommonOptions common;
    std::string build_path;
    std::string history_path;
};

csv::BuildContext context_from_meta(const json& meta, const std::string& source) {
    csv::BuildContext ctx;
    try {
        const json& g = meta.at("geometry");
        ctx.geometry.angle_deg = g.at("angle_deg").get<double>();
        ctx.geometry.max_vector_mm = g.at("max_vector_mm").get<double>();
        ctx.geometry.hatch_spacing_mm = g.at("hatch_spacing_mm").get<double>();
        ctx.geometry.layers = g.at("layers").get<int>();
        ctx.geometry.speed_mm_s = g.at("speed_mm_s").get<double>();
        ctx.geometry.turnaround_s = g.at("turnaround_s").get<double>();
        ctx.reference_mV = meta.at("reference_mV").get<double>();
        ctx.u_min_W = meta.at("u_min_W").get<double>();
        ctx.sample_dt_s = meta.at("sample_dt_s").get<double>();
    } catch (const json::exception& e) {
        throw IoError(source + ": " + e.what());
    }
    return ctx;
}

int run_analyze(const AnalyzeOptions& opts) {
    RunConfig cfg = load(opts.common);
    const fs::path build_path(opts.build_path);
    const fs::path meta_path = build_path.parent_path() / "build.meta.json";
    const csv::BuildContext ctx = context_from_meta(read_json(meta_path), meta_path.string());
    cfg.geometry = ctx.geometry;
    cfg.controller.wedge_reference_mV = ctx.reference_mV;
    cfg.controller.u_min_W = ctx.u_min_W;
    cfg.controller.sample_dt_s = ctx.sample_dt_s;
    cfg.validate();

    const BuildRecord build = csv::parse_build(csv::read_file(build_path.string()), ctx, build_path.string());
    const fs::path dir = make_output_dir(opts.common.out_dir.empty() ? build_path.parent_path().string()
                                                                     : opts.common.out_dir);
    const AnalysisOutputs a = write_analysis(dir, build, cfg);
    std::cout << "analyzed " << build.layers.size() << " layers\n";
    print_length_trend(a.stats);

    if (!opts.history_path.empty()) {
        const BoHistory history = csv::parse_history(csv::read_file(opts.history_path), opts.history_path);
        if (history.records.empty()) {
            throw IoError(opts.history_path + ": no iterations");
        }
        const auto best = best_so_far(history);
        csv::write_file((dir / "best_so_far.csv").string(), csv::best_so_far_csv(best));
        std::cout << "best cost " << best.back() << " after " << best.size() << " iterations\n";
    }
    return kOk;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file (comments allowed)");
    cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
    cmd->add_option("--out", opts.out_dir, "Output directory (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated PI tuning by Bayesian optimization for melt-pool emission control"};
    app.require_subcommand(1);

    TuneOptions tune_opts;
    CLI::App* tune_cmd = app.add_subcommand("tune", "Run a BO tuning campaign on the simulated rig");
    tune_cmd->add_option("mode", tune_opts.mode, "offline (bare plate) or online (powder wall)")
        ->required()
        ->check(CLI::IsMember({"offline", "online"}));
    add_common(tune_cmd, tune_opts.common);
    tune_cmd->add_option("--iterations", tune_opts.iterations, "Iteration budget")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--resume", tune_opts.resume_path, "history.csv of an interrupted run")
        ->check(CLI::ExistingFile);

    WedgeCliOptions wedge_opts;
    CLI::App* wedge_cmd = app.add_subcommand("wedge", "Print a wedge and export per-vector analysis");
    add_common(wedge_cmd, wedge_opts.common);
    wedge_cmd->add_option("--angle", wedge_opts.angle, "Wedge angle in degrees");
    wedge_cmd->add_option("--layers", wedge_opts.layers, "Number of layers")->check(CLI::PositiveNumber);
    auto* gains_opt = wedge_cmd->add_option("--gains", wedge_opts.gains, "Controller gains KP KI")->expected(2);
    auto* summary_opt =
        wedge_cmd->add_option("--from-summary", wedge_opts.summary_path, "Take gains from a tuning summary.json");
    auto* uncontrolled_opt =
        wedge_cmd->add_flag("--uncontrolled", wedge_opts.uncontrolled, "Constant power, controller off");
    gains_opt->excludes(summary_opt)->excludes(uncontrolled_opt);
    summary_opt->excludes(uncontrolled_opt);

    AnalyzeOptions analyze_opts;
    CLI::App* analyze_cmd = app.add_subcommand("analyze", "Analyze a stored build.csv");
    analyze_cmd->add_option("build", analyze_opts.build_path, "build.csv written by the wedge command")->required();
    add_common(analyze_cmd, analyze_opts.common);
    analyze_cmd->add_option("--history", analyze_opts.history_path, "history.csv to reduce to best-so-far");

    try {
        app.parse(argc, argv);
        if (*wedge_cmd && gains_opt->count() == 0 && summary_opt->count() == 0 && !wedge_opts.uncontrolled) {
            throw CLI::RequiredError("wedge needs one of --gains, --from-summary or --uncontrolled");
        }
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*tune_cmd) {
            return run_tune(tune_opts);
        }
        if (*wedge_cmd) {
            return run_wedge(wedge_opts);
        }
        return run_analyze(analyze_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const TuningAborted& e) {
        std::cerr << "tuning aborted after " << e.partial_history().records.size() << " iterations: " << e.what()
                  << "\n";
        return kNumerical;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const LoopFault& e) {
        std::cerr << "loop fault: " << e.what() << "\n";
        return kNumerical;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kIo;
    }
}
