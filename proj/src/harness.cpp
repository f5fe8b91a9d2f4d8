#include "hyperrx/harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace hyperrx {

Method method_from_string(const std::string& s) {
    if (s == "joint") return Method::Joint;
    if (s == "online") return Method::Online;
    if (s == "hyper") return Method::Hyper;
    throw config_error("unknown method: " + s + " (expected joint|online|hyper)");
}

std::string method_to_string(Method m) {
    switch (m) {
        case Method::Joint: return "joint";
        case Method::Online: return "online";
        case Method::Hyper: return "hyper";
    }
    return "hyper";
}

double ser(const Tensor& estimates, const Tensor& truth) {
    if (!estimates.same_shape(truth))
        throw std::invalid_argument("ser: estimate and truth shapes differ");
    if (estimates.numel() == 0) throw std::invalid_argument("ser: empty symbol matrices");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < estimates.numel(); ++i)
        if (estimates[i] != truth[i]) ++errors;
    return static_cast<double>(errors) / static_cast<double>(estimates.numel());
}

namespace {

Tensor head_rows(const Tensor& m, std::size_t rows) {
    if (rows >= m.rows()) return m;
    Tensor out({rows, m.cols()});
    std::copy(m.data().begin(),
              m.data().begin() + static_cast<std::ptrdiff_t>(rows * m.cols()),
              out.data().begin());
    return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point from) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - from)
        .count();
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, Method method,
                         const MethodWeights& weights) {
    cfg.validate();
    const LinkConfig link = cfg.link();
    const Rng master(cfg.seed);
    const Constellation& constellation = link.constellation;

    std::vector<TraceRecord> trace;
    if (link.use_trace) {
        trace = load_trace(link.trace_path, link.n_antennas, link.k_max);
        if (trace.size() < static_cast<std::size_t>(cfg.blocks))
            throw std::runtime_error("trace has fewer records than requested blocks");
    }

    RunResult run;
    run.method = method;
    run.ledger = ComplexityLedger(cfg.complexity.alpha_t, cfg.complexity.alpha_i,
                                  cfg.complexity.c_ls);
    run.blocks.reserve(static_cast<std::size_t>(cfg.blocks));

    ReceiverParams online_prev;
    int online_prev_k = -1;

    SicTrainOptions online_opt;
    online_opt.lr = cfg.training.online_lr;
    online_opt.iterations = cfg.training.online_iterations;
    online_opt.batch_size = cfg.training.online_batch_size;  // 0 = full pilot batch
    online_opt.q_iterations = cfg.q_iterations;
    online_opt.end_to_end = cfg.training.end_to_end;
    online_opt.seed = Rng(cfg.seed).derive(rng_stream::kTraining).next_u64();

    double total_errors = 0.0, total_symbols = 0.0;
    const auto run_start = std::chrono::steady_clock::now();

    for (int t = 1; t <= cfg.blocks; ++t) {
        const TraceRecord* rec = link.use_trace ? &trace[static_cast<std::size_t>(t - 1)] : nullptr;
        const int k_users =
            link.use_trace ? rec->k_users : schedule_users(cfg.schedule, t, cfg.seed);
        const TransmissionBlock block = make_block(t, k_users, link, master, rec);
        const auto module_size = static_cast<std::size_t>(param_count(cfg.n_antennas, k_users));

        const double train_before = run.ledger.training_units();
        const double infer_before = run.ledger.inference_units();
        const auto block_start = std::chrono::steady_clock::now();

        ReceiverParams receiver;
        switch (method) {
            case Method::Joint: {
                const auto it = weights.joint.find(k_users);
                if (it == weights.joint.end())
                    throw std::runtime_error("joint run is missing weights for K=" +
                                             std::to_string(k_users));
                receiver = it->second;
                break;
            }
            case Method::Online: {
                const ReceiverParams* prev =
                    online_prev_k == k_users ? &online_prev : nullptr;
                receiver = online_adapt(prev, block, cfg.n_antennas, constellation, online_opt);
                if (cfg.training.online_iterations > 0)
                    run.ledger.record_training(module_size, block.b_pilot(), k_users);
                online_prev = receiver;
                online_prev_k = k_users;
                break;
            }
            case Method::Hyper: {
                if (!weights.hyper.has_value())
                    throw std::runtime_error("hyper run requires hypernetwork weights");
                receiver = hypernet_adapt(*weights.hyper, block);
                run.ledger.record_ls(cfg.n_antennas, block.b_pilot(), k_users);
                run.ledger.record_hyper(weights.hyper->dnn_scalar_count(), k_users);
                break;
            }
        }

        const Tensor info_y = cfg.max_detect_symbols > 0
                                  ? head_rows(block.info_y,
                                              static_cast<std::size_t>(cfg.max_detect_symbols))
                                  : block.info_y;
        const Tensor info_s = cfg.max_detect_symbols > 0
                                  ? head_rows(block.info_s,
                                              static_cast<std::size_t>(cfg.max_detect_symbols))
                                  : block.info_s;
        const SoftEstimates est = sic_forward(receiver, info_y, cfg.q_iterations);
        const Tensor detected = detect(est.final_round(), constellation);
        run.ledger.record_inference(module_size, block.b_info(), k_users);

        BlockResult res;
        res.t = t;
        res.k_users = k_users;
        res.modules_used = receiver.users();
        res.ser = ser(detected, info_s);
        res.wall_ms = elapsed_ms(block_start);
        res.train_units = run.ledger.training_units() - train_before;
        res.infer_units = run.ledger.inference_units() - infer_before;
        run.blocks.push_back(res);

        total_errors += res.ser * static_cast<double>(detected.numel());
        total_symbols += static_cast<double>(detected.numel());
        run.adapt_detect_wall_ms += res.wall_ms;
    }

    run.aggregate_ser = total_symbols > 0.0 ? total_errors / total_symbols : 0.0;
    run.total_wall_ms = elapsed_ms(run_start);
    return run;
}

Dataset build_training_data(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<int> ks;
    for (int k = 2; k <= cfg.k_max; ++k) ks.push_back(k);
    const std::uint64_t data_seed = Rng(cfg.seed).derive(rng_stream::kTraining, 0xda7a).next_u64();
    LinkConfig link = cfg.link();
    if (cfg.training.data_b_pilot > 0) link.b_pilot = cfg.training.data_b_pilot;
    if (cfg.training.data_b_info > 0) link.b_info = cfg.training.data_b_info;
    if (cfg.training.has_data_snr) {
        // most blocks draw from the training profile, a fraction replays
        // the deployment profile (fresh noise and symbols)
        LinkConfig data_link = link;
        data_link.snr = cfg.training.data_snr;
        return generate_dataset(data_link, ks, cfg.training.symbols_per_k, data_seed,
                                &link.snr, cfg.training.data_replay_fraction);
    }
    return generate_dataset(link, ks, cfg.training.symbols_per_k, data_seed);
}

std::map<int, ReceiverParams> run_joint_training(const ExperimentConfig& cfg,
                                                 const Dataset& data) {
    SicTrainOptions opt;
    opt.lr = cfg.training.joint_lr;
    opt.iterations = cfg.training.joint_iterations;
    opt.batch_size = cfg.training.batch_size;
    opt.q_iterations = cfg.q_iterations;
    opt.end_to_end = cfg.training.end_to_end;
    opt.seed = Rng(cfg.seed).derive(rng_stream::kTraining, 0x101).next_u64();
    return joint_train(data, opt);
}

HypernetParams run_hyper_training(const ExperimentConfig& cfg, const Dataset& data,
                                  std::vector<double>* loss_history) {
    HyperTrainOptions opt;
    opt.lr = cfg.training.hyper_lr;
    opt.iterations_per_block = cfg.training.hyper_iterations;
    opt.block_samples = cfg.training.hyper_block_samples;
    opt.batch_size = cfg.training.batch_size;
    opt.q_iterations = cfg.q_iterations;
    opt.seed = Rng(cfg.seed).derive(rng_stream::kTraining, 0x202).next_u64();
    return hypernet_train(data, opt, loss_history);
}

void emit_results(const RunResult& run, const ExperimentConfig& cfg,
                  const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + out_dir.string());

    const auto csv_path = out_dir / "results.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    csv << "t,K,ser,train_units,infer_units,wall_ms\n";
    char line[256];
    for (const BlockResult& b : run.blocks) {
        std::snprintf(line, sizeof(line), "%d,%d,%.10g,%.10g,%.10g,%.6g\n", b.t, b.k_users,
                      b.ser, b.train_units, b.infer_units, b.wall_ms);
        csv << line;
    }
    if (!csv) throw std::runtime_error("write failed: " + csv_path.string());

    nlohmann::json summary{
        {"method", method_to_string(run.method)},
        {"blocks", run.blocks.size()},
        {"aggregate_ser", run.aggregate_ser},
        {"total_train_units", run.ledger.training_units()},
        {"total_infer_units", run.ledger.inference_units()},
        {"total_hyper_units", run.ledger.hyper_units()},
        {"total_ls_units", run.ledger.ls_units()},
        {"total_units", run.ledger.total()},
        {"adapt_detect_wall_ms", run.adapt_detect_wall_ms},
        {"total_wall_ms", run.total_wall_ms},
    };
    const auto summary_path = out_dir / "summary.json";
    std::ofstream js(summary_path);
    if (!js) throw std::runtime_error("cannot write " + summary_path.string());
    js << summary.dump(2) << '\n';

    nlohmann::json resolved = config_to_json(cfg);
    resolved["method"] = method_to_string(run.method);
    const auto cfg_path = out_dir / "config.resolved.json";
    std::ofstream cj(cfg_path);
    if (!cj) throw std::runtime_error("cannot write " + cfg_path.string());
    cj << resolved.dump(2) << '\n';
}

}  // namespace hyperrx
