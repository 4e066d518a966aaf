// Stage orchestration: simulate -> train -> extract -> report, with
// digest-based caching. Every stage directory carries a stage.json recording
// the input digest; a stage reruns only when its digest changes, an output
// is missing, or it is explicitly forced. Worker parallelism never changes
// results because bursts use per-index substreams.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "levyflow/config.hpp"
#include "levyflow/dataset_io.hpp"
#include "levyflow/report.hpp"
#include "levyflow/train.hpp"

namespace levyflow {

enum class Stage { Simulate, Train, Extract, Report };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::Simulate: return "simulate";
        case Stage::Train: return "train";
        case Stage::Extract: return "extract";
        case Stage::Report: return "report";
    }
    return "?";
}

inline Stage parse_stage(const std::string& s) {
    if (s == "simulate") return Stage::Simulate;
    if (s == "train") return Stage::Train;
    if (s == "extract") return Stage::Extract;
    if (s == "report") return Stage::Report;
    throw ValidationError("unknown stage '" + s + "' (use simulate|train|extract|report)");
}

template <typename F>
inline void parallel_for(std::size_t n, int workers, F&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mtx;
    std::exception_ptr first_error;
    auto body = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mtx);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const int nt = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct PipelineOptions {
    int workers = 1;
    std::vector<std::string> force;  // stage names to rerun unconditionally
    bool quiet = false;
};

// Train one flow per burst and write burst_<i>.json plus train_summary.json
// into dir. Per-burst seeds derive from (seed, burst index), so results do
// not depend on the worker count.
inline void train_flows_to_dir(const BurstDataset& ds, const TrainConfig& base,
                               const FlowArch& arch, std::uint64_t seed, int workers,
                               const fs::path& dir, bool quiet) {
    const std::size_t nb = ds.bursts.size();
    fs::create_directories(dir);
    std::vector<TrainResult> results(nb);
    std::atomic<std::size_t> done{0};
    parallel_for(nb, workers, [&](std::size_t i) {
        const std::uint64_t model_seed = mix64(mix64(seed, 0xf10a), static_cast<std::uint64_t>(i));
        FlowModel model =
            ds.dim == 1 ? make_flow_1d(arch.layers, arch.bins, arch.bound, arch.hidden_for(1),
                                       model_seed)
                        : make_flow_2d(arch.couplings, arch.C, arch.hidden_for(2), model_seed);
        // center on the burst mean; scale stays 1 so jump annuli keep their
        // physical radii inside the spline box
        for (int d = 0; d < model.dim; ++d) {
            double s = 0.0;
            for (const auto& p : ds.bursts[i].samples) s += p[static_cast<std::size_t>(d)];
            model.shift[static_cast<std::size_t>(d)] =
                s / static_cast<double>(ds.bursts[i].samples.size());
            model.scale[static_cast<std::size_t>(d)] = 1.0;
        }
        TrainConfig tc = base;
        tc.seed = mix64(mix64(seed, 0x7ea1), static_cast<std::uint64_t>(i));
        results[i] = train_flow(model, ds.bursts[i].samples, tc);
        save_flow(model, dir / ("burst_" + std::to_string(i) + ".json"));
        const std::size_t k = ++done;
        if (!quiet && (k % 10 == 0 || k == nb))
            std::fprintf(stdout, "[train] %zu/%zu flows done\n", k, nb);
    });

    nlohmann::ordered_json summary;
    summary["format"] = "levyflow-train-summary";
    summary["n_bursts"] = nb;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < nb; ++i) {
        nlohmann::ordered_json r;
        r["burst"] = i;
        r["best_epoch"] = results[i].best_epoch;
        r["best_val_nll"] = results[i].best_val_nll;
        r["n_train"] = results[i].n_train;
        r["n_val"] = results[i].n_val;
        r["n_dropped"] = results[i].n_dropped;
        r["train_curve"] = results[i].train_curve;
        r["val_curve"] = results[i].val_curve;
        rows.push_back(std::move(r));
    }
    summary["bursts"] = std::move(rows);
    atomic_write_file(dir / "train_summary.json", summary.dump(2) + "\n");
}

class Pipeline {
  public:
    Pipeline(RunConfig cfg, PipelineOptions opt) : cfg_(std::move(cfg)), opt_(std::move(opt)) {
        cfg_.validate();
        if (opt_.workers < 1) throw ValidationError("workers must be >= 1");
        for (const auto& f : opt_.force) parse_stage(f);
        root_ = cfg_.output_dir();
    }

    const RunConfig& config() const { return cfg_; }
    fs::path stage_dir(Stage s) const {
        switch (s) {
            case Stage::Simulate: return root_ / "dataset";
            case Stage::Train: return root_ / "flows";
            case Stage::Extract: return root_ / "extract";
            case Stage::Report: return root_ / "report";
        }
        return root_;
    }

    void run_until(Stage last) {
        simulate();
        if (last == Stage::Simulate) return;
        train();
        if (last == Stage::Train) return;
        extract_stage();
        if (last == Stage::Extract) return;
        report_stage();
    }

    void simulate() {
        const fs::path dir = stage_dir(Stage::Simulate);
        const std::string digest = cfg_.simulate_digest();
        std::vector<fs::path> outputs{dir / "meta.json"};
        const std::size_t nb = grid_size();
        for (std::size_t i = 0; i < nb; ++i)
            outputs.push_back(dir / ("burst_" + std::to_string(i) + ".csv"));
        if (stage_fresh(Stage::Simulate, digest, outputs)) return;

        log("simulate", "generating %zu bursts x %zu samples", nb, cfg_.samples_per_burst);
        const auto grid = cfg_.grid.make_points(cfg_.sde.dim);
        BurstDataset ds;
        ds.dim = cfg_.sde.dim;
        ds.t_star = cfg_.sde.t_star;
        ds.seed = cfg_.seed;
        ds.spec_digest = cfg_.sde.digest();
        ds.bursts.resize(grid.size());
        parallel_for(grid.size(), opt_.workers, [&](std::size_t i) {
            ds.bursts[i] = dataset_burst(cfg_.sde, grid[i], cfg_.samples_per_burst, cfg_.seed, i);
        });
        save_dataset(ds, dir);
        mark_stage(Stage::Simulate, digest, outputs);
    }

    void train() {
        const fs::path dir = stage_dir(Stage::Train);
        const std::string digest = cfg_.train_digest();
        const std::size_t nb = grid_size();
        std::vector<fs::path> outputs{dir / "train_summary.json"};
        for (std::size_t i = 0; i < nb; ++i)
            outputs.push_back(dir / ("burst_" + std::to_string(i) + ".json"));
        if (stage_fresh(Stage::Train, digest, outputs)) return;

        const BurstDataset ds = load_dataset(stage_dir(Stage::Simulate));
        if (ds.bursts.size() != nb) throw IoError("train: dataset burst count mismatch");
        log("train", "training %zu flows (%d worker%s)", nb, opt_.workers,
            opt_.workers == 1 ? "" : "s");
        train_flows_to_dir(ds, cfg_.train, cfg_.arch, cfg_.seed, opt_.workers, dir, opt_.quiet);
        mark_stage(Stage::Train, digest, outputs);
    }

    void extract_stage() {
        const fs::path dir = stage_dir(Stage::Extract);
        const std::string digest = cfg_.extract_digest();
        std::vector<fs::path> outputs{dir / "result.json", dir / "drift.csv",
                                      dir / "diffusion.csv"};
        if (cfg_.extract.estimate_jumps) outputs.push_back(dir / "jump_fit.csv");
        if (stage_fresh(Stage::Extract, digest, outputs)) return;

        const BurstDataset ds = load_dataset(stage_dir(Stage::Simulate));
        std::vector<FlowModel> flows(ds.bursts.size());
        for (std::size_t i = 0; i < flows.size(); ++i)
            flows[i] = load_flow(stage_dir(Stage::Train) / ("burst_" + std::to_string(i) + ".json"));

        log("extract", "running nonlocal Kramers-Moyal estimators on %zu grid points",
            ds.bursts.size());
        ExtractConfig ec = cfg_.extract;
        ec.seed = mix64(cfg_.seed, 0xe27ac7);
        const ExtractResult res = extract(ds, flows, ec);
        save_extract_result(res, cfg_.name, ec.ball_eps, dir / "result.json");

        const int n = res.dim;
        std::string drift_csv = n == 1 ? "z1,b1\n" : "z1,z2,b1,b2\n";
        std::string diff_csv = n == 1 ? "z1,a11\n" : "z1,z2,a11,a12,a21,a22\n";
        for (const auto& e : res.estimates) {
            std::string zs = format_g17(e.z[0]);
            if (n == 2) zs += "," + format_g17(e.z[1]);
            drift_csv += zs + "," + format_g17(e.drift[0]);
            if (n == 2) drift_csv += "," + format_g17(e.drift[1]);
            drift_csv += "\n";
            diff_csv += zs + "," + format_g17(e.diffusion[0]);
            if (n == 2)
                diff_csv += "," + format_g17(e.diffusion[1]) + "," + format_g17(e.diffusion[2]) +
                            "," + format_g17(e.diffusion[3]);
            diff_csv += "\n";
        }
        atomic_write_file(dir / "drift.csv", drift_csv);
        atomic_write_file(dir / "diffusion.csv", diff_csv);

        if (res.jumps_estimated) {
            std::string jf = "eps,count,rate,fit_rate\n";
            for (std::size_t j = 0; j < res.jump.eps.size(); ++j) {
                const double fit =
                    std::exp(res.jump.intercept - res.jump.alpha * std::log(res.jump.eps[j]));
                jf += format_g17(res.jump.eps[j]) + "," + std::to_string(res.jump.counts[j]) +
                      "," + format_g17(res.jump.rates[j]) + "," + format_g17(fit) + "\n";
            }
            atomic_write_file(dir / "jump_fit.csv", jf);
            log("extract", "alpha_hat=%.4f sigma_hat=%.4f", res.jump.alpha, res.jump.sigma);
        }
        mark_stage(Stage::Extract, digest, outputs);
    }

    void report_stage() {
        const fs::path dir = stage_dir(Stage::Report);
        const std::string digest = cfg_.report_digest();
        std::vector<fs::path> outputs{dir / "report.json", dir / "drift_table.csv",
                                      dir / "diffusion_table.csv"};
        if (stage_fresh(Stage::Report, digest, outputs)) return;

        const ExtractResult res = load_extract_result(stage_dir(Stage::Extract) / "result.json");
        const ReportMetrics m = write_report(cfg_, res, dir);
        if (!opt_.quiet) {
            if (res.jumps_estimated)
                std::fprintf(stdout, "[report] alpha_hat=%.4f sigma_hat=%.4f\n", res.jump.alpha,
                             res.jump.sigma);
            if (std::isfinite(m.drift_rel_l2))
                std::fprintf(stdout, "[report] drift relative L2 error (interior): %.4f\n",
                             m.drift_rel_l2);
            std::fprintf(stdout, "[report] drift max abs error (interior): %.4f\n",
                         m.drift_max_abs_err);
            if (std::isfinite(m.diff_diag_rel_l2))
                std::fprintf(stdout, "[report] diffusion diag relative L2 error: %.4f\n",
                             m.diff_diag_rel_l2);
            std::fprintf(stdout, "[report] diffusion diag max abs error: %.4f\n",
                         m.diff_diag_max_abs_err);
            std::fprintf(stdout, "[report] ball mass in [%.4f, %.4f]\n", m.ball_mass_min,
                         m.ball_mass_max);
        }
        mark_stage(Stage::Report, digest, outputs);
    }

  private:
    std::size_t grid_size() const {
        std::size_t n = 1;
        for (int p : cfg_.grid.points) n *= static_cast<std::size_t>(p);
        return n;
    }

    bool forced(Stage s) const {
        for (const auto& f : opt_.force)
            if (parse_stage(f) == s) return true;
        return false;
    }

    bool stage_fresh(Stage s, const std::string& digest, const std::vector<fs::path>& outputs) {
        if (forced(s)) return false;
        const fs::path marker = stage_dir(s) / "stage.json";
        if (!fs::exists(marker)) return false;
        try {
            const auto j = nlohmann::json::parse(read_file(marker));
            if (j.value("digest", "") != digest) return false;
        } catch (...) {
            return false;
        }
        for (const auto& p : outputs)
            if (!fs::exists(p)) return false;
        log(stage_name(s), "up to date, skipping");
        return true;
    }

    void mark_stage(Stage s, const std::string& digest, const std::vector<fs::path>& outputs) {
        nlohmann::ordered_json j;
        j["stage"] = stage_name(s);
        j["digest"] = digest;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : outputs) arr.push_back(p.filename().string());
        j["outputs"] = std::move(arr);
        atomic_write_file(stage_dir(s) / "stage.json", j.dump(2) + "\n");
    }

    void log(const char* stage, const char* fmt, ...) const {
        if (opt_.quiet) return;
        std::fprintf(stdout, "[%s] ", stage);
        va_list args;
        va_start(args, fmt);
        std::vfprintf(stdout, fmt, args);
        va_end(args);
        std::fprintf(stdout, "\n");
    }

    RunConfig cfg_;
    PipelineOptions opt_;
    fs::path root_;
};

}  // namespace levyflow
