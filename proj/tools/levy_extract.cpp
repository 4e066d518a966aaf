// levy-extract: learn the governing law of an SDE with Brownian and
// alpha-stable Levy noise from short-burst simulations.
//
//   levy-extract all      --config cfg.json [--workers N] [--force-stage S]
//   levy-extract simulate --config cfg.json ...
//   levy-extract train    --config cfg.json ...
//   levy-extract train    --dataset DIR --out DIR [--params p.json] [--seed N]
//   levy-extract extract  --config cfg.json ...
//   levy-extract report   --config cfg.json ...
//
// Exit codes: 0 success, 2 configuration/validation error, 3 I/O error,
// 4 numerical failure (integration, training or estimation), 1 otherwise.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "levyflow/levyflow.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    int workers = 1;
    std::vector<std::string> force;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* c = cmd->add_option("--config", args.config_path, "run configuration JSON");
    if (config_required) c->required();
    cmd->add_option("--workers", args.workers, "parallel workers for burst-level stages")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--force-stage", args.force,
                    "rerun a stage even if cached (simulate|train|extract|report)");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

int run_pipeline_stage(const CommonArgs& args, levyflow::Stage last) {
    levyflow::RunConfig cfg = levyflow::load_run_config(args.config_path);
    levyflow::PipelineOptions opt;
    opt.workers = args.workers;
    opt.force = args.force;
    opt.quiet = args.quiet;
    levyflow::Pipeline pipe(std::move(cfg), opt);
    pipe.run_until(last);
    return 0;
}

int run_standalone_train(const std::string& dataset_dir, const std::string& out_dir,
                         const std::string& params_path, std::uint64_t seed, int workers,
                         bool quiet) {
    using nlohmann::json;
    const levyflow::BurstDataset ds = levyflow::load_dataset(dataset_dir);
    levyflow::TrainConfig tc;
    levyflow::FlowArch arch;
    if (!params_path.empty()) {
        json j;
        try {
            j = json::parse(levyflow::read_file(params_path));
        } catch (const json::exception& e) {
            throw levyflow::ValidationError("params: JSON parse error: " + std::string(e.what()));
        }
        // reuse the run-config schema: {"train": {..., "arch": {...}}}
        json wrapper;
        wrapper["name"] = "standalone";
        wrapper["system"] = {{"dim", ds.dim},
                             {"drift", ds.dim == 1 ? json::array({"0"}) : json::array({"0", "0"})},
                             {"t_star", ds.t_star}};
        wrapper["grid"] = {{"min", ds.dim == 1 ? json::array({-1.0}) : json::array({-1.0, -1.0})},
                           {"max", ds.dim == 1 ? json::array({1.0}) : json::array({1.0, 1.0})},
                           {"points", ds.dim == 1 ? json::array({2}) : json::array({2, 2})}};
        if (j.contains("train"))
            wrapper["train"] = j.at("train");
        else
            wrapper["train"] = j;
        const levyflow::RunConfig parsed = levyflow::parse_run_config(wrapper);
        tc = parsed.train;
        arch = parsed.arch;
    }
    tc.validate();
    arch.validate(ds.dim);
    levyflow::train_flows_to_dir(ds, tc, arch, seed, workers, out_dir, quiet);
    if (!quiet) std::fprintf(stdout, "[train] wrote flows to %s\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learn SDE drift, diffusion and Levy jump parameters from burst data"};
    app.require_subcommand(1);

    CommonArgs sim_args, train_args, extract_args, report_args, all_args;
    std::string train_dataset, train_out, train_params;
    std::uint64_t train_seed = 1;

    auto* sim = app.add_subcommand("simulate", "generate the burst dataset");
    add_common(sim, sim_args, true);

    auto* train = app.add_subcommand("train", "fit one normalizing flow per burst");
    add_common(train, train_args, false);
    train->add_option("--dataset", train_dataset, "train directly from a dataset directory");
    train->add_option("--out", train_out, "output directory for standalone training");
    train->add_option("--params", train_params, "JSON with train/arch settings (standalone mode)");
    train->add_option("--seed", train_seed, "seed for standalone training");

    auto* extract = app.add_subcommand("extract", "run the nonlocal Kramers-Moyal estimators");
    add_common(extract, extract_args, true);

    auto* report = app.add_subcommand("report", "error metrics, tables and plots");
    add_common(report, report_args, true);

    auto* all = app.add_subcommand("all", "run simulate, train, extract and report");
    add_common(all, all_args, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_pipeline_stage(sim_args, levyflow::Stage::Simulate);
        if (train->parsed()) {
            if (!train_dataset.empty() || !train_out.empty()) {
                if (train_dataset.empty() || train_out.empty())
                    throw levyflow::ValidationError(
                        "standalone training needs both --dataset and --out");
                if (!train_args.config_path.empty())
                    throw levyflow::ValidationError("use either --config or --dataset, not both");
                return run_standalone_train(train_dataset, train_out, train_params, train_seed,
                                            train_args.workers, train_args.quiet);
            }
            if (train_args.config_path.empty())
                throw levyflow::ValidationError("train needs --config or --dataset/--out");
            return run_pipeline_stage(train_args, levyflow::Stage::Train);
        }
        if (extract->parsed()) return run_pipeline_stage(extract_args, levyflow::Stage::Extract);
        if (report->parsed()) return run_pipeline_stage(report_args, levyflow::Stage::Report);
        if (all->parsed()) return run_pipeline_stage(all_args, levyflow::Stage::Report);
    } catch (const levyflow::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const levyflow::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const levyflow::IntegrationError& e) {
        std::fprintf(stderr, "integration error: %s\n", e.what());
        return 4;
    } catch (const levyflow::TrainError& e) {
        std::fprintf(stderr, "training error: %s\n", e.what());
        return 4;
    } catch (const levyflow::EstimationError& e) {
        std::fprintf(stderr, "estimation error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
