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

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pbftune/analysis.hpp"
#include "pbftune/bo.hpp"
#include "pbftune/error.hpp"
#include "pbftune/scanpath.hpp"
#include "pbftune/trace.hpp"

namespace pbftune::csv {

/// Shortest exact decimal is not required; 17 significant digits round-trips every double.
inline void append(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

inline void append(std::string& out, long long v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline void append(std::string& out, std::size_t v) { append(out, static_cast<long long>(v)); }
inline void append(std::string& out, int v) { append(out, static_cast<long long>(v)); }
inline void append(std::string& out, std::string_view v) { out.append(v); }
inline void append(std::string& out, const char* v) { out.append(v); }

/// Appends one comma-separated row terminated by '\n'.
template <typename... Ts>
void row(std::string& out, const Ts&... fields) {
    bool first = true;
    ((out.append(first ? "" : ","), append(out, fields), first = false), ...);
    out.push_back('\n');
}

inline void write_file(const std::string& path, std::string_view contents) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open " + path + " for writing");
    }
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) {
        throw IoError("failed writing " + path);
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Splits text into lines (a final newline is required for the last line to count as complete).
class LineReader {
public:
    LineReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) {
            return false;
        }
        const auto nl = text_.find('\n', pos_);
        if (nl == std::string_view::npos) {
            throw IoError(source_ + ": truncated line " + std::to_string(line_no_ + 1));
        }
        line = text_.substr(pos_, nl - pos_);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        pos_ = nl + 1;
        ++line_no_;
        return true;
    }

    std::size_t line_no() const { return line_no_; }
    const std::string& source() const { return source_; }

private:
    std::string_view text_;
    std::string source_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

template <typename T>
T parse_number(std::string_view field, const LineReader& reader) {
    T value{};
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        throw IoError(reader.source() + ": bad number '" + std::string(field) + "' on line " +
                      std::to_string(reader.line_no()));
    }
    return value;
}

inline void expect_header(LineReader& reader, std::string_view header) {
    std::string_view line;
    if (!reader.next(line) || line != header) {
        throw IoError(reader.source() + ": expected header '" + std::string(header) + "'");
    }
}

// ---------------------------------------------------------------------------
// Iteration history

inline constexpr std::string_view kHistoryHeader =
    "iteration,kp,ki,mse_prime,rise_prime,sigma_prime,total,best_so_far,predicted_mean,predicted_var";

inline void append_history_row(std::string& out, const IterationRecord& r) {
    row(out, r.iteration, r.gains.kp, r.gains.ki, r.cost.mse_prime, r.cost.rise_prime, r.cost.sigma_prime,
        r.cost.total, r.best_so_far, r.predicted_mean, r.predicted_var);
}

inline std::string history_csv(const BoHistory& history) {
    std::string out(kHistoryHeader);
    out.push_back('\n');
    for (const auto& r : history.records) {
        append_history_row(out, r);
    }
    return out;
}

inline BoHistory parse_history(std::string_view text, const std::string& source = "history") {
    LineReader reader(text, source);
    expect_header(reader, kHistoryHeader);
    BoHistory history;
    std::string_view line;
    while (reader.next(line)) {
        const auto f = split(line);
        if (f.size() != 10) {
            throw IoError(source + ": expected 10 fields on line " + std::to_string(reader.line_no()));
        }
        IterationRecord r;
        r.iteration = parse_number<int>(f[0], reader);
        r.gains.kp = parse_number<double>(f[1], reader);
        r.gains.ki = parse_number<double>(f[2], reader);
        r.cost.mse_prime = parse_number<double>(f[3], reader);
        r.cost.rise_prime = parse_number<double>(f[4], reader);
        r.cost.sigma_prime = parse_number<double>(f[5], reader);
        r.cost.total = parse_number<double>(f[6], reader);
        r.best_so_far = parse_number<double>(f[7], reader);
        r.predicted_mean = parse_number<double>(f[8], reader);
        r.predicted_var = parse_number<double>(f[9], reader);
        if (r.iteration != static_cast<int>(history.records.size())) {
            throw IoError(source + ": iterations must be consecutive from 0");
        }
        history.records.push_back(r);
    }
    return history;
}

// ---------------------------------------------------------------------------
// Build record

inline constexpr std::string_view kBuildHeader = "layer,vector_idx,sample_idx,t_us,u_W,y_mV";

inline std::string build_csv(const BuildRecord& build) {
    std::string out(kBuildHeader);
    out.push_back('\n');
    out.reserve(build.sample_count() * 56 + out.size());
    for (std::size_t l = 0; l < build.layers.size(); ++l) {
        const auto& layer = build.layers[l];
        for (std::size_t v = 0; v < layer.size(); ++v) {
            const Trace& t = layer[v].trace;
            for (std::size_t k = 0; k < t.size(); ++k) {
                row(out, l, v, k, static_cast<double>(k) * t.dt_s * 1e6, t.u_W[k], t.y_mV[k]);
            }
        }
    }
    return out;
}

/// Context a build CSV cannot carry by itself.
struct BuildContext {
    WedgeGeometry geometry;
    double reference_mV = 80.0;
    double u_min_W = 0.0;
    double sample_dt_s = 1e-5;
};

/// Reads a build CSV back; vectors and sample counts are checked against the geometry.
inline BuildRecord parse_build(std::string_view text, const BuildContext& ctx, const std::string& source = "build") {
    const auto vectors = wedge_layer(ctx.geometry, 0, ctx.sample_dt_s);
    LineReader reader(text, source);
    expect_header(reader, kBuildHeader);
    BuildRecord build;
    std::string_view line;
    auto fail = [&](const std::string& what) {
        throw IoError(source + ": " + what + " on line " + std::to_string(reader.line_no()));
    };
    while (reader.next(line)) {
        const auto f = split(line);
        if (f.size() != 6) {
            fail("expected 6 fields");
        }
        const auto layer = parse_number<std::size_t>(f[0], reader);
        const auto vec = parse_number<std::size_t>(f[1], reader);
        const auto sample = parse_number<std::size_t>(f[2], reader);
        const double u = parse_number<double>(f[4], reader);
        const double y = parse_number<double>(f[5], reader);
        (void)parse_number<double>(f[3], reader);

        if (layer == build.layers.size()) {
            build.layers.emplace_back();
        } else if (layer + 1 != build.layers.size()) {
            fail("layers out of order");
        }
        auto& record = build.layers.back();
        if (vec == record.size()) {
            if (vec >= vectors.size()) {
                fail("more vectors than the geometry provides");
            }
            if (!record.empty() && record.back().trace.size() != static_cast<std::size_t>(record.back().vector.sample_count(ctx.sample_dt_s))) {
                fail("previous vector is incomplete");
            }
            ExposedVector ev;
            ev.vector = vectors[vec];
            ev.trace.dt_s = ctx.sample_dt_s;
            ev.trace.reference_mV = ctx.reference_mV;
            record.push_back(std::move(ev));
        } else if (vec + 1 != record.size()) {
            fail("vectors out of order");
        }
        Trace& t = record.back().trace;
        if (sample != t.size()) {
            fail("samples out of order");
        }
        t.applied_W.push_back(t.u_W.empty() ? ctx.u_min_W : t.u_W.back());
        t.u_W.push_back(u);
        t.y_mV.push_back(y);
    }
    if (build.layers.empty()) {
        throw IoError(source + ": no samples");
    }
    for (const auto& layer : build.layers) {
        if (layer.size() != vectors.size()) {
            throw IoError(source + ": layer with " + std::to_string(layer.size()) + " of " +
                          std::to_string(vectors.size()) + " vectors");
        }
        for (const auto& ev : layer) {
            if (ev.trace.size() != static_cast<std::size_t>(ev.vector.sample_count(ctx.sample_dt_s))) {
                throw IoError(source + ": incomplete vector");
            }
        }
    }
    return build;
}

// ---------------------------------------------------------------------------
// Analysis exports

inline std::string vector_costs_csv(const std::vector<VectorCostStat>& stats) {
    std::string out = "vector_idx,length_mm,mean_cost,ci95_halfwidth,n,mse_prime_mean,rise_prime_mean,sigma_prime_mean\n";
    for (const auto& s : stats) {
        row(out, s.vector_idx, s.length_mm, s.mean_cost, s.ci95_halfwidth, s.n, s.term_means.mse_prime,
            s.term_means.rise_prime, s.term_means.sigma_prime);
    }
    return out;
}

inline const char* label_name(BandLabel label) {
    switch (label) {
        case BandLabel::Below:
            return "below";
        case BandLabel::Within:
            return "within";
        case BandLabel::Above:
            return "above";
    }
    return "?";
}

/// Per-sample band labels of one layer with scan coordinates: x across the
/// hatch, y along the vector.
inline std::string band_map_csv(const BuildRecord& build, std::size_t layer_idx, double reference_mV, double band) {
    std::string out = "layer,vector,x_mm,y_mm,label\n";
    const auto& layer = build.layers.at(layer_idx);
    for (std::size_t v = 0; v < layer.size(); ++v) {
        const auto& ev = layer[v];
        const double step_mm = ev.vector.speed_mm_s * ev.trace.dt_s;
        for (std::size_t k = 0; k < ev.trace.size(); ++k) {
            row(out, layer_idx, v, ev.vector.x_mm, static_cast<double>(k) * step_mm,
                label_name(classify(ev.trace.y_mV[k], reference_mV, band)));
        }
    }
    return out;
}

inline std::string band_fractions_csv(const BuildRecord& build, const BandClassification& bands) {
    std::string out = "layer,vector,length_mm,below,within,above,leading_below\n";
    for (std::size_t l = 0; l < bands.per_vector.size(); ++l) {
        for (std::size_t v = 0; v < bands.per_vector[l].size(); ++v) {
            const auto& f = bands.per_vector[l][v];
            row(out, l, v, build.layers[l][v].vector.length_mm, f.below, f.within, f.above, f.leading_below);
        }
    }
    return out;
}

inline std::string window_flags_csv(const BuildRecord& build, const WindowFlags& flags) {
    std::string out = "layer,vector,length_mm,below_lof,above_keyhole\n";
    for (std::size_t l = 0; l < flags.per_vector.size(); ++l) {
        for (std::size_t v = 0; v < flags.per_vector[l].size(); ++v) {
            const auto& f = flags.per_vector[l][v];
            row(out, l, v, build.layers[l][v].vector.length_mm, f.below_lof, f.above_keyhole);
        }
    }
    return out;
}

inline std::string best_so_far_csv(std::span<const double> best) {
    std::string out = "iteration,best_so_far\n";
    for (std::size_t i = 0; i < best.size(); ++i) {
        row(out, i, best[i]);
    }
    return out;
}

}  // namespace pbftune::csv
