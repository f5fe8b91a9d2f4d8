// Command-line front end: data generation, offline training, simulation
// and method comparison over a shared block stream.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperrx/checkpoint.hpp"
#include "hyperrx/harness.hpp"

namespace fs = std::filesystem;
using namespace hyperrx;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::string trace;
    std::string method;
    std::string data;
    std::string checkpoints;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", args.seed, "override the config master seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    sub->add_option("--trace", args.trace, "channel trace file (switches channel to trace replay)");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (args.seed_set) {
        cfg.seed = args.seed;
        cfg.snr.seed = args.seed;
    }
    if (!args.trace.empty()) {
        cfg.channel_kind = "trace";
        cfg.trace_path = args.trace;
    }
    if (!args.method.empty()) cfg.method = args.method;
    if (!args.data.empty()) cfg.data_path = args.data;
    if (!args.checkpoints.empty()) cfg.checkpoint_dir = args.checkpoints;
    cfg.validate();
    return cfg;
}

MethodWeights load_weights_for(Method method, const ExperimentConfig& cfg) {
    MethodWeights weights;
    const fs::path dir = cfg.checkpoint_dir;
    if (method == Method::Joint)
        weights.joint = load_joint_checkpoint(dir / "joint.ckpt");
    if (method == Method::Hyper)
        weights.hyper = load_hyper_checkpoint(dir / "hyper.ckpt");
    return weights;
}

int cmd_gen_data(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    const Dataset data = build_training_data(cfg);
    const fs::path out = args.out.empty() ? fs::path(cfg.data_path) : fs::path(args.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_dataset(out, data);
    std::size_t total = 0;
    for (const auto& [k, blks] : data.blocks) total += data.symbols_for(k);
    std::cout << "wrote " << out.string() << " (" << data.blocks.size() << " user counts, "
              << total << " symbols)\n";
    return 0;
}

int cmd_train_joint(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    const Dataset data = load_dataset(cfg.data_path);
    const auto weights = run_joint_training(cfg, data);
    const fs::path dir = args.out.empty() ? fs::path(cfg.checkpoint_dir) : fs::path(args.out);
    fs::create_directories(dir);
    save_joint_checkpoint(dir / "joint.ckpt", weights, cfg.n_antennas, cfg.k_max);
    std::cout << "wrote " << (dir / "joint.ckpt").string() << " (" << weights.size()
              << " parameter sets, K=" << weights.begin()->first << ".." << weights.rbegin()->first
              << ")\n";
    return 0;
}

int cmd_train_hyper(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    const Dataset data = load_dataset(cfg.data_path);
    std::vector<double> losses;
    const HypernetParams hp = run_hyper_training(cfg, data, &losses);
    const fs::path dir = args.out.empty() ? fs::path(cfg.checkpoint_dir) : fs::path(args.out);
    fs::create_directories(dir);
    save_hyper_checkpoint(dir / "hyper.ckpt", hp);
    double first = losses.empty() ? 0.0 : losses.front();
    double last = losses.empty() ? 0.0 : losses.back();
    std::cout << "wrote " << (dir / "hyper.ckpt").string() << " (" << hp.scalar_count()
              << " scalars, loss " << first << " -> " << last << ")\n";
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    const Method method = method_from_string(cfg.method);
    const MethodWeights weights = load_weights_for(method, cfg);
    const RunResult run = run_experiment(cfg, method, weights);
    const fs::path out = args.out.empty() ? fs::path("results") : fs::path(args.out);
    emit_results(run, cfg, out);
    std::cout << method_to_string(method) << ": aggregate SER " << run.aggregate_ser
              << " over " << run.blocks.size() << " blocks, total units "
              << run.ledger.total() << ", wall " << run.total_wall_ms << " ms\n"
              << "results in " << out.string() << "\n";
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    const fs::path out = args.out.empty() ? fs::path("results") : fs::path(args.out);

    MethodWeights weights;
    weights.joint = load_joint_checkpoint(fs::path(cfg.checkpoint_dir) / "joint.ckpt");
    weights.hyper = load_hyper_checkpoint(fs::path(cfg.checkpoint_dir) / "hyper.ckpt");

    // identical seeds: all three methods see the same block stream
    nlohmann::json cmp;
    RunResult runs[3] = {run_experiment(cfg, Method::Joint, weights),
                         run_experiment(cfg, Method::Online, weights),
                         run_experiment(cfg, Method::Hyper, weights)};
    for (const RunResult& run : runs) {
        emit_results(run, cfg, out / method_to_string(run.method));
        cmp["aggregate_ser"][method_to_string(run.method)] = run.aggregate_ser;
        cmp["adapt_detect_wall_ms"][method_to_string(run.method)] = run.adapt_detect_wall_ms;
        std::cout << method_to_string(run.method) << ": SER " << run.aggregate_ser
                  << ", units " << run.ledger.total() << ", adapt+detect "
                  << run.adapt_detect_wall_ms << " ms\n";
    }

    const double measured = complexity_ratio(runs[2].ledger, runs[1].ledger);
    cmp["complexity_ratio"]["measured_hyper_over_online"] = measured;
    for (int k : schedule_support(cfg.schedule, cfg.blocks, cfg.seed)) {
        const auto theta = static_cast<std::size_t>(param_count(cfg.n_antennas, k));
        const std::size_t phi = weights.hyper->dnn_scalar_count();
        cmp["complexity_ratio"]["closed_form_k" + std::to_string(k)] = closed_form_ratio(
            cfg.complexity.alpha_t, cfg.complexity.alpha_i, theta, phi,
            static_cast<std::size_t>(cfg.b_pilot), static_cast<std::size_t>(cfg.b_info),
            cfg.n_antennas, cfg.complexity.c_ls);
        cmp["complexity_ratio"]["approx_k" + std::to_string(k)] =
            approx_ratio(cfg.complexity.alpha_t, cfg.complexity.alpha_i, theta, phi,
                         static_cast<std::size_t>(cfg.b_pilot),
                         static_cast<std::size_t>(cfg.b_info));
    }
    cmp["wall_speedup_online_over_hyper"] =
        runs[1].adapt_detect_wall_ms / std::max(runs[2].adapt_detect_wall_ms, 1e-9);

    fs::create_directories(out);
    std::ofstream cj(out / "comparison.json");
    cj << cmp.dump(2) << '\n';
    std::cout << "measured hyper/online complexity ratio: " << measured << "\n"
              << "comparison in " << (out / "comparison.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperrx: adaptive deep MIMO receiver simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* gen = app.add_subcommand("gen-data", "generate offline training data");
    add_common(gen, args);
    gen->add_option("--out", args.out, "output dataset path");

    CLI::App* tj = app.add_subcommand("train-joint", "train static per-K receivers offline");
    add_common(tj, args);
    tj->add_option("--data", args.data, "training dataset path");
    tj->add_option("--out", args.out, "checkpoint directory");

    CLI::App* th = app.add_subcommand("train-hyper", "train the weight-generator network offline");
    add_common(th, args);
    th->add_option("--data", args.data, "training dataset path");
    th->add_option("--out", args.out, "checkpoint directory");

    CLI::App* sim = app.add_subcommand("simulate", "run one method over T blocks");
    add_common(sim, args);
    sim->add_option("--method", args.method, "joint|online|hyper");
    sim->add_option("--out", args.out, "output directory");
    sim->add_option("--checkpoints", args.checkpoints, "checkpoint directory");

    CLI::App* cmp = app.add_subcommand("compare", "run all methods on the same block stream");
    add_common(cmp, args);
    cmp->add_option("--out", args.out, "output directory");
    cmp->add_option("--checkpoints", args.checkpoints, "checkpoint directory");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(args);
        if (tj->parsed()) return cmd_train_joint(args);
        if (th->parsed()) return cmd_train_hyper(args);
        if (sim->parsed()) return cmd_simulate(args);
        if (cmp->parsed()) return cmd_compare(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
