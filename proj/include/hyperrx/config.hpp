#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperrx/channel.hpp"

namespace hyperrx {

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// How many users are active in block t.
struct UserSchedule {
    enum class Kind { Fixed, List, RandomSet };
    Kind kind = Kind::Fixed;
    int fixed_k = 8;
    std::vector<int> values;  // per-block list (cycled) or random choice set
    // RandomSet only: each drawn K persists for this many consecutive
    // blocks (users join and leave occasionally rather than the whole
    // network reshuffling every block).
    int hold_blocks = 1;
    // RandomSet only: draw without replacement in shuffled cycles over the
    // choice set, so every value appears once per cycle.
    bool shuffle = false;
};

int schedule_users(const UserSchedule& schedule, int t, std::uint64_t seed);

// Every K the schedule can produce (ascending).
std::vector<int> schedule_support(const UserSchedule& schedule, int blocks,
                                  std::uint64_t seed);

struct TrainingConfig {
    int symbols_per_k = 100000;
    // Block shape for generated training data; 0 = same as the experiment.
    // Smaller info halves give more distinct channel realizations for the
    // same symbol budget.
    int data_b_pilot = 0;
    int data_b_info = 0;
    // SNR profile for generated training data. When set, all but
    // data_replay_fraction of the blocks draw their SNRs from it; the rest
    // replay the experiment profile under fresh noise and symbols.
    bool has_data_snr = false;
    SnrProfileConfig data_snr;
    double data_replay_fraction = 0.0;
    double joint_lr = 1e-3;
    double online_lr = 1e-3;
    double hyper_lr = 5e-4;
    int joint_iterations = 100;
    int online_iterations = 100;
    int hyper_iterations = 25;   // Adam steps per sampled block
    int hyper_block_samples = 300;
    int batch_size = 512;        // offline minibatch
    int online_batch_size = 0;   // 0 = full pilot batch
    bool end_to_end = false;
};

struct ComplexityConfig {
    double alpha_t = 100.0;
    double alpha_i = 1.0;
    double c_ls = 1.0;
};

struct ExperimentConfig {
    int n_antennas = 12;
    int k_max = 12;
    UserSchedule schedule;
    int blocks = 100;  // T
    int b_pilot = 800;
    int b_info = 15200;
    std::string constellation = "bpsk";
    std::string channel_kind = "synthetic";  // synthetic | trace
    std::string trace_path;
    SnrProfileConfig snr;
    std::uint64_t seed = 1;
    std::string method = "hyper";  // default for `simulate`
    int q_iterations = 3;
    TrainingConfig training;
    ComplexityConfig complexity;
    std::string data_path = "train_data.bin";
    std::string checkpoint_dir = "checkpoints";
    // 0 detects every info symbol; otherwise SER is measured on the first
    // max_detect_symbols of each block (unit accounting is unaffected).
    int max_detect_symbols = 0;

    LinkConfig link() const;
    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace hyperrx
