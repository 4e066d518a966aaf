// Run configuration: one JSON file drives the whole pipeline (system to
// simulate, burst grid, flow architecture, training and extraction
// settings). Stage digests derived here decide what the pipeline may skip.
#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "levyflow/digest.hpp"
#include "levyflow/errors.hpp"
#include "levyflow/extract.hpp"
#include "levyflow/io.hpp"
#include "levyflow/sde.hpp"
#include "levyflow/train.hpp"

namespace levyflow {

struct GridSpec {
    std::vector<double> lo, hi;
    std::vector<int> points;

    void validate(int dim) const {
        if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim ||
            static_cast<int>(points.size()) != dim)
            throw ValidationError("grid: min/max/points must each have one entry per dimension");
        for (int d = 0; d < dim; ++d) {
            const std::size_t k = static_cast<std::size_t>(d);
            if (!(lo[k] < hi[k])) throw ValidationError("grid: min must be below max");
            if (points[k] < 2) throw ValidationError("grid: need at least 2 points per axis");
        }
    }

    // Tensor grid, first coordinate slowest.
    std::vector<Point> make_points(int dim) const {
        validate(dim);
        auto axis = [&](int d) {
            const std::size_t k = static_cast<std::size_t>(d);
            std::vector<double> v(static_cast<std::size_t>(points[k]));
            for (int i = 0; i < points[k]; ++i)
                v[static_cast<std::size_t>(i)] =
                    lo[k] + (hi[k] - lo[k]) * static_cast<double>(i) /
                                static_cast<double>(points[k] - 1);
            return v;
        };
        std::vector<Point> out;
        const auto a1 = axis(0);
        if (dim == 1) {
            out.reserve(a1.size());
            for (double x : a1) out.push_back({x, 0.0});
            return out;
        }
        const auto a2 = axis(1);
        out.reserve(a1.size() * a2.size());
        for (double x1 : a1)
            for (double x2 : a2) out.push_back({x1, x2});
        return out;
    }
};

struct FlowArch {
    // dim 1: spline stack
    int layers = 32;
    int bins = 5;
    double bound = 3.0;
    // dim 2: coupling stack
    int couplings = 3;
    double C = 1.0 / 3.0;
    // shared
    std::vector<int> hidden;  // empty -> {32,32,32} (dim 1) or {16,16,16} (dim 2)

    std::vector<int> hidden_for(int dim) const {
        if (!hidden.empty()) return hidden;
        return dim == 1 ? std::vector<int>{32, 32, 32} : std::vector<int>{16, 16, 16};
    }

    void validate(int dim) const {
        if (dim == 1) {
            if (layers < 1 || bins < 2 || !(bound > 0.0))
                throw ValidationError("arch: bad spline stack settings");
        } else {
            if (couplings < 1 || !(C > 0.0)) throw ValidationError("arch: bad coupling settings");
        }
        for (int h : hidden)
            if (h < 1) throw ValidationError("arch: hidden widths must be positive");
    }
};

struct ReportConfig {
    double interior_margin = 0.0;  // coordinate margin stripped from error norms
};

namespace detail {

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("config: bad value for '") + key + "'");
    }
}

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

struct RunConfig {
    std::string name;
    std::uint64_t seed = 1;
    std::string output_root = "runs";
    SdeSpec sde;
    GridSpec grid;
    std::size_t samples_per_burst = 5000;
    TrainConfig train;
    FlowArch arch;
    ExtractConfig extract;
    ReportConfig report;

    void validate() const {
        if (name.empty()) throw ValidationError("config: name is required");
        for (char c : name)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
                throw ValidationError("config: name must be alphanumeric/underscore/dash");
        sde.validate();
        grid.validate(sde.dim);
        if (samples_per_burst < 16) throw ValidationError("config: samples_per_burst too small");
        train.validate();
        arch.validate(sde.dim);
        extract.validate(sde.dim);
        if (report.interior_margin < 0.0)
            throw ValidationError("config: interior_margin must be >= 0");
    }

    // Output directory: $LEVY_EXTRACT_OUTPUT_ROOT (if set) or output_root,
    // with the run name appended.
    fs::path output_dir() const {
        const char* env = std::getenv("LEVY_EXTRACT_OUTPUT_ROOT");
        fs::path root = (env && *env) ? fs::path(env) : fs::path(output_root);
        return root / name;
    }

    std::string grid_canonical() const {
        std::string s;
        for (std::size_t d = 0; d < grid.lo.size(); ++d)
            s += detail::fmt17(grid.lo[d]) + ":" + detail::fmt17(grid.hi[d]) + ":" +
                 std::to_string(grid.points[d]) + ";";
        return s;
    }

    std::string simulate_digest() const {
        return digest_hex("sim|" + sde.canonical_string() + "|" + grid_canonical() + "|n=" +
                          std::to_string(samples_per_burst) + "|seed=" + std::to_string(seed));
    }

    std::string train_digest() const {
        std::string s = "train|" + simulate_digest() + "|epochs=" + std::to_string(train.epochs) +
                        ";batch=" + std::to_string(train.batch_size) + ";lr=" +
                        detail::fmt17(train.lr) + ";b1=" + detail::fmt17(train.beta1) + ";b2=" +
                        detail::fmt17(train.beta2) + ";eps=" + detail::fmt17(train.adam_eps) +
                        ";holdout=" + detail::fmt17(train.holdout_fraction) + ";clipg=" +
                        detail::fmt17(train.grad_clip) + ";clipr=" +
                        detail::fmt17(train.clip_radius) + "|arch=";
        if (sde.dim == 1)
            s += "spline:" + std::to_string(arch.layers) + "," + std::to_string(arch.bins) + "," +
                 detail::fmt17(arch.bound);
        else
            s += "coupling:" + std::to_string(arch.couplings) + "," + detail::fmt17(arch.C);
        s += ";hidden=";
        for (int h : arch.hidden_for(sde.dim)) s += std::to_string(h) + ",";
        return digest_hex(s);
    }

    std::string extract_digest() const {
        std::string s = "extract|" + train_digest() + "|ball=" + detail::fmt17(extract.ball_eps) +
                        ";m=" + detail::fmt17(extract.jump_m) + ";q1=" +
                        std::to_string(extract.quad_points_1d) + ";q2=" +
                        std::to_string(extract.quad_points_2d) + ";jumps=" +
                        (extract.estimate_jumps ? "1" : "0") + ";src=" + extract.jump_source +
                        ";resample=" + std::to_string(extract.resample_n) + ";eps=";
        for (double e : extract.jump_eps) s += detail::fmt17(e) + ",";
        return digest_hex(s);
    }

    std::string report_digest() const {
        return digest_hex("report|" + extract_digest() +
                          "|margin=" + detail::fmt17(report.interior_margin));
    }
};

inline SdeSpec parse_system(const nlohmann::json& j) {
    detail::require_keys(j, {"dim", "drift", "diffusion", "levy", "t_star", "dt"}, "system");
    SdeSpec s;
    s.dim = detail::get_or<int>(j, "dim", 1);
    if (s.dim < 1 || s.dim > 2) throw ValidationError("config: system.dim must be 1 or 2");
    if (!j.contains("drift")) throw ValidationError("config: system.drift is required");
    for (const auto& e : j.at("drift")) s.drift.push_back(Expr::parse(e.get<std::string>(), s.dim));

    if (j.contains("diffusion")) {
        for (const auto& row : j.at("diffusion")) {
            std::vector<Expr> r;
            for (const auto& e : row) r.push_back(Expr::parse(e.get<std::string>(), s.dim));
            s.diffusion.push_back(std::move(r));
        }
    } else {
        for (int i = 0; i < s.dim; ++i) {
            std::vector<Expr> r;
            for (int k = 0; k < s.dim; ++k) r.push_back(Expr::parse("0", s.dim));
            s.diffusion.push_back(std::move(r));
        }
    }

    if (j.contains("levy") && !j.at("levy").is_null()) {
        const auto& lj = j.at("levy");
        detail::require_keys(lj, {"alpha", "sigma"}, "system.levy");
        StableParams sp;
        sp.alpha = lj.at("alpha").get<double>();
        sp.sigma = detail::get_or<double>(lj, "sigma", 1.0);
        sp.dim = s.dim;
        s.levy = sp;
    }
    s.t_star = detail::get_or<double>(j, "t_star", 0.01);
    s.dt = detail::get_or<double>(j, "dt", 0.0);
    s.validate();
    return s;
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
    detail::require_keys(j,
                         {"name", "seed", "output_root", "system", "grid", "samples_per_burst",
                          "train", "extract", "report"},
                         "top level");
    RunConfig cfg;
    cfg.name = detail::get_or<std::string>(j, "name", "");
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    cfg.output_root = detail::get_or<std::string>(j, "output_root", "runs");
    if (!j.contains("system")) throw ValidationError("config: system block is required");
    cfg.sde = parse_system(j.at("system"));

    if (!j.contains("grid")) throw ValidationError("config: grid block is required");
    const auto& gj = j.at("grid");
    detail::require_keys(gj, {"min", "max", "points"}, "grid");
    cfg.grid.lo = gj.at("min").get<std::vector<double>>();
    cfg.grid.hi = gj.at("max").get<std::vector<double>>();
    cfg.grid.points = gj.at("points").get<std::vector<int>>();

    cfg.samples_per_burst = detail::get_or<std::size_t>(j, "samples_per_burst", 5000);

    if (j.contains("train")) {
        const auto& tj = j.at("train");
        detail::require_keys(tj,
                             {"epochs", "batch_size", "lr", "beta1", "beta2", "adam_eps",
                              "holdout_fraction", "grad_clip", "clip_radius", "arch"},
                             "train");
        cfg.train.epochs = detail::get_or<int>(tj, "epochs", cfg.train.epochs);
        cfg.train.batch_size = detail::get_or<int>(tj, "batch_size", cfg.train.batch_size);
        cfg.train.lr = detail::get_or<double>(tj, "lr", cfg.train.lr);
        cfg.train.beta1 = detail::get_or<double>(tj, "beta1", cfg.train.beta1);
        cfg.train.beta2 = detail::get_or<double>(tj, "beta2", cfg.train.beta2);
        cfg.train.adam_eps = detail::get_or<double>(tj, "adam_eps", cfg.train.adam_eps);
        cfg.train.holdout_fraction =
            detail::get_or<double>(tj, "holdout_fraction", cfg.train.holdout_fraction);
        cfg.train.grad_clip = detail::get_or<double>(tj, "grad_clip", cfg.train.grad_clip);
        cfg.train.clip_radius = detail::get_or<double>(tj, "clip_radius", cfg.train.clip_radius);
        if (tj.contains("arch")) {
            const auto& aj = tj.at("arch");
            detail::require_keys(aj, {"layers", "bins", "bound", "couplings", "C", "hidden"},
                                 "train.arch");
            cfg.arch.layers = detail::get_or<int>(aj, "layers", cfg.arch.layers);
            cfg.arch.bins = detail::get_or<int>(aj, "bins", cfg.arch.bins);
            cfg.arch.bound = detail::get_or<double>(aj, "bound", cfg.arch.bound);
            cfg.arch.couplings = detail::get_or<int>(aj, "couplings", cfg.arch.couplings);
            cfg.arch.C = detail::get_or<double>(aj, "C", cfg.arch.C);
            cfg.arch.hidden = detail::get_or<std::vector<int>>(aj, "hidden", {});
        }
    }

    if (j.contains("extract")) {
        const auto& ej = j.at("extract");
        detail::require_keys(ej,
                             {"ball_eps", "jump_eps", "jump_m", "quad_points_1d", "quad_points_2d",
                              "estimate_jumps", "jump_source", "resample_n"},
                             "extract");
        cfg.extract.ball_eps = detail::get_or<double>(ej, "ball_eps", cfg.extract.ball_eps);
        cfg.extract.jump_eps =
            detail::get_or<std::vector<double>>(ej, "jump_eps", cfg.extract.jump_eps);
        cfg.extract.jump_m = detail::get_or<double>(ej, "jump_m", cfg.extract.jump_m);
        cfg.extract.quad_points_1d =
            detail::get_or<int>(ej, "quad_points_1d", cfg.extract.quad_points_1d);
        cfg.extract.quad_points_2d =
            detail::get_or<int>(ej, "quad_points_2d", cfg.extract.quad_points_2d);
        cfg.extract.estimate_jumps =
            detail::get_or<bool>(ej, "estimate_jumps", cfg.extract.estimate_jumps);
        cfg.extract.jump_source =
            detail::get_or<std::string>(ej, "jump_source", cfg.extract.jump_source);
        cfg.extract.resample_n = detail::get_or<std::size_t>(ej, "resample_n", cfg.extract.resample_n);
    }

    if (j.contains("report")) {
        const auto& rj = j.at("report");
        detail::require_keys(rj, {"interior_margin"}, "report");
        cfg.report.interior_margin =
            detail::get_or<double>(rj, "interior_margin", cfg.report.interior_margin);
    }

    cfg.validate();
    return cfg;
}

inline RunConfig load_run_config(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config: JSON parse error in " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

}  // namespace levyflow
