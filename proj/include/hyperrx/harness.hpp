#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperrx/adaptation.hpp"
#include "hyperrx/config.hpp"
#include "hyperrx/ledger.hpp"

namespace hyperrx {

enum class Method { Joint, Online, Hyper };

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);

// Fraction of differing symbol entries.
double ser(const Tensor& estimates, const Tensor& truth);

struct BlockResult {
    int t = 0;
    int k_users = 0;
    double ser = 0.0;
    double train_units = 0.0;  // this block's ledger increments
    double infer_units = 0.0;
    double wall_ms = 0.0;  // adaptation + detection
    int modules_used = 0;
};

struct RunResult {
    Method method = Method::Hyper;
    std::vector<BlockResult> blocks;
    ComplexityLedger ledger{100.0, 1.0};
    double aggregate_ser = 0.0;  // per-block SER weighted by detected symbols
    double total_wall_ms = 0.0;
    double adapt_detect_wall_ms = 0.0;  // sum of per-block wall_ms
};

// Weights a method needs before a run.
struct MethodWeights {
    std::map<int, ReceiverParams> joint;  // Joint: one entry per user count
    std::optional<HypernetParams> hyper;  // Hyper
};

// Simulates T blocks with the chosen method: generate/load the block,
// adapt per method, detect the information symbols, account the work.
// Deterministic given (config, method, weights).
RunResult run_experiment(const ExperimentConfig& cfg, Method method,
                         const MethodWeights& weights);

// Dataset generation, training and checkpoint orchestration used by the
// CLI and the acceptance suite.
Dataset build_training_data(const ExperimentConfig& cfg);
std::map<int, ReceiverParams> run_joint_training(const ExperimentConfig& cfg,
                                                 const Dataset& data);
HypernetParams run_hyper_training(const ExperimentConfig& cfg, const Dataset& data,
                                  std::vector<double>* loss_history = nullptr);

// Writes results.csv, summary.json and config.resolved.json into out_dir.
void emit_results(const RunResult& run, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir);

}  // namespace hyperrx
