#include "hyperrx/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "hyperrx/rng.hpp"

namespace hyperrx {

using nlohmann::json;

int schedule_users(const UserSchedule& schedule, int t, std::uint64_t seed) {
    switch (schedule.kind) {
        case UserSchedule::Kind::Fixed:
            return schedule.fixed_k;
        case UserSchedule::Kind::List:
            if (schedule.values.empty()) throw config_error("user schedule list is empty");
            return schedule.values[static_cast<std::size_t>(t - 1) % schedule.values.size()];
        case UserSchedule::Kind::RandomSet: {
            if (schedule.values.empty()) throw config_error("user schedule set is empty");
            const int hold = std::max(schedule.hold_blocks, 1);
            const int draw = (t - 1) / hold;  // one draw per run of hold blocks
            if (!schedule.shuffle) {
                Rng rng = Rng(seed).derive(rng_stream::kSchedule, static_cast<std::uint64_t>(draw));
                return schedule.values[static_cast<std::size_t>(
                    rng.next_u64() % schedule.values.size())];
            }
            // without replacement: a fresh seeded permutation per cycle
            const auto n = schedule.values.size();
            const auto cycle = static_cast<std::uint64_t>(draw) / n;
            const std::size_t pos = static_cast<std::size_t>(draw) % n;
            std::vector<int> order = schedule.values;
            Rng rng = Rng(seed).derive(rng_stream::kSchedule, cycle);
            for (std::size_t i = n - 1; i > 0; --i)
                std::swap(order[i], order[static_cast<std::size_t>(rng.next_u64() % (i + 1))]);
            return order[pos];
        }
    }
    throw config_error("unknown user schedule kind");
}

std::vector<int> schedule_support(const UserSchedule& schedule, int blocks,
                                  std::uint64_t seed) {
    std::set<int> support;
    if (schedule.kind == UserSchedule::Kind::Fixed) {
        support.insert(schedule.fixed_k);
    } else if (schedule.kind == UserSchedule::Kind::RandomSet) {
        support.insert(schedule.values.begin(), schedule.values.end());
    } else {
        for (int t = 1; t <= blocks; ++t) support.insert(schedule_users(schedule, t, seed));
    }
    return {support.begin(), support.end()};
}

LinkConfig ExperimentConfig::link() const {
    LinkConfig l;
    l.n_antennas = n_antennas;
    l.k_max = k_max;
    l.b_pilot = b_pilot;
    l.b_info = b_info;
    l.constellation = Constellation::bpsk();
    l.snr = snr;
    l.use_trace = channel_kind == "trace";
    l.trace_path = trace_path;
    return l;
}

void ExperimentConfig::validate() const {
    if (n_antennas < 1) throw config_error("n_antennas must be >= 1");
    if (k_max < 1 || k_max > n_antennas) throw config_error("requires 1 <= k_max <= n_antennas");
    if (blocks < 1) throw config_error("blocks must be >= 1");
    if (b_pilot < 1 || b_info < 1) throw config_error("b_pilot and b_info must be >= 1");
    if (q_iterations < 1) throw config_error("q_iterations must be >= 1");
    if (constellation != "bpsk") throw config_error("unsupported constellation: " + constellation);
    if (channel_kind != "synthetic" && channel_kind != "trace")
        throw config_error("unsupported channel kind: " + channel_kind);
    if (channel_kind == "trace" && trace_path.empty())
        throw config_error("trace channel requires trace_path");
    if (snr.period_blocks < 1) throw config_error("snr.period_blocks must be >= 1");
    if (snr.amplitude_db < 0) throw config_error("snr.amplitude_db must be >= 0");
    const auto support = schedule_support(schedule, blocks, seed);
    for (int k : support)
        if (k < 1 || k > k_max) throw config_error("user schedule leaves 1..k_max");
    if (complexity.alpha_t <= 0 || complexity.alpha_i <= 0)
        throw config_error("alpha_t and alpha_i must be positive");
}

namespace {

SnrProfileConfig::Kind snr_kind_from_string(const std::string& s) {
    if (s == "constant") return SnrProfileConfig::Kind::Constant;
    if (s == "sinusoid") return SnrProfileConfig::Kind::Sinusoid;
    if (s == "random_walk") return SnrProfileConfig::Kind::RandomWalk;
    throw config_error("unknown snr profile kind: " + s);
}

std::string snr_kind_to_string(SnrProfileConfig::Kind k) {
    switch (k) {
        case SnrProfileConfig::Kind::Constant: return "constant";
        case SnrProfileConfig::Kind::Sinusoid: return "sinusoid";
        case SnrProfileConfig::Kind::RandomWalk: return "random_walk";
    }
    return "constant";
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

SnrProfileConfig snr_from_json(const json& s, std::uint64_t default_seed) {
    SnrProfileConfig snr;
    snr.kind = snr_kind_from_string(get_or<std::string>(s, "kind", "constant"));
    snr.base_snr_db = get_or(s, "base_db", snr.base_snr_db);
    snr.amplitude_db = get_or(s, "amplitude_db", snr.amplitude_db);
    snr.period_blocks = get_or(s, "period_blocks", snr.period_blocks);
    snr.phase_offset = get_or(s, "phase_offset", snr.phase_offset);
    snr.seed = get_or<std::uint64_t>(s, "seed", default_seed);
    return snr;
}

json snr_to_json(const SnrProfileConfig& snr) {
    return json{{"kind", snr_kind_to_string(snr.kind)},
                {"base_db", snr.base_snr_db},
                {"amplitude_db", snr.amplitude_db},
                {"period_blocks", snr.period_blocks},
                {"phase_offset", snr.phase_offset},
                {"seed", snr.seed}};
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        cfg.n_antennas = get_or(j, "n_antennas", cfg.n_antennas);
        cfg.k_max = get_or(j, "k_max", cfg.k_max);
        cfg.blocks = get_or(j, "blocks", cfg.blocks);
        cfg.b_pilot = get_or(j, "b_pilot", cfg.b_pilot);
        cfg.b_info = get_or(j, "b_info", cfg.b_info);
        cfg.constellation = get_or<std::string>(j, "constellation", cfg.constellation);
        cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
        cfg.method = get_or<std::string>(j, "method", cfg.method);
        cfg.q_iterations = get_or(j, "q_iterations", cfg.q_iterations);
        cfg.max_detect_symbols = get_or(j, "max_detect_symbols", cfg.max_detect_symbols);
        cfg.data_path = get_or<std::string>(j, "data_path", cfg.data_path);
        cfg.checkpoint_dir = get_or<std::string>(j, "checkpoint_dir", cfg.checkpoint_dir);

        if (j.contains("users")) {
            const json& u = j.at("users");
            const auto kind = u.at("kind").get<std::string>();
            if (kind == "fixed") {
                cfg.schedule.kind = UserSchedule::Kind::Fixed;
                cfg.schedule.fixed_k = u.at("k").get<int>();
            } else if (kind == "list") {
                cfg.schedule.kind = UserSchedule::Kind::List;
                cfg.schedule.values = u.at("values").get<std::vector<int>>();
            } else if (kind == "random") {
                cfg.schedule.kind = UserSchedule::Kind::RandomSet;
                cfg.schedule.values = u.at("choices").get<std::vector<int>>();
                cfg.schedule.hold_blocks = get_or(u, "hold", cfg.schedule.hold_blocks);
                cfg.schedule.shuffle = get_or(u, "shuffle", cfg.schedule.shuffle);
            } else {
                throw config_error("unknown users.kind: " + kind);
            }
        }

        if (j.contains("channel")) {
            const json& c = j.at("channel");
            cfg.channel_kind = get_or<std::string>(c, "kind", cfg.channel_kind);
            cfg.trace_path = get_or<std::string>(c, "path", cfg.trace_path);
        }

        if (j.contains("snr")) {
            cfg.snr = snr_from_json(j.at("snr"), cfg.seed);
        } else {
            cfg.snr.seed = cfg.seed;
        }

        if (j.contains("training")) {
            const json& t = j.at("training");
            TrainingConfig& tc = cfg.training;
            tc.symbols_per_k = get_or(t, "symbols_per_k", tc.symbols_per_k);
            tc.data_b_pilot = get_or(t, "data_b_pilot", tc.data_b_pilot);
            tc.data_b_info = get_or(t, "data_b_info", tc.data_b_info);
            if (t.contains("data_snr")) {
                tc.has_data_snr = true;
                tc.data_snr = snr_from_json(t.at("data_snr"), cfg.seed);
                tc.data_replay_fraction =
                    get_or(t, "data_replay_fraction", tc.data_replay_fraction);
            }
            tc.joint_lr = get_or(t, "joint_lr", tc.joint_lr);
            tc.online_lr = get_or(t, "online_lr", tc.online_lr);
            tc.hyper_lr = get_or(t, "hyper_lr", tc.hyper_lr);
            tc.joint_iterations = get_or(t, "joint_iterations", tc.joint_iterations);
            tc.online_iterations = get_or(t, "online_iterations", tc.online_iterations);
            tc.hyper_iterations = get_or(t, "hyper_iterations", tc.hyper_iterations);
            tc.hyper_block_samples = get_or(t, "hyper_block_samples", tc.hyper_block_samples);
            tc.batch_size = get_or(t, "batch_size", tc.batch_size);
            tc.online_batch_size = get_or(t, "online_batch_size", tc.online_batch_size);
            tc.end_to_end = get_or(t, "end_to_end", tc.end_to_end);
        }

        if (j.contains("complexity")) {
            const json& c = j.at("complexity");
            cfg.complexity.alpha_t = get_or(c, "alpha_t", cfg.complexity.alpha_t);
            cfg.complexity.alpha_i = get_or(c, "alpha_i", cfg.complexity.alpha_i);
            cfg.complexity.c_ls = get_or(c, "c_ls", cfg.complexity.c_ls);
        }
    } catch (const json::exception& e) {
        throw config_error(std::string("invalid config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json u;
    switch (cfg.schedule.kind) {
        case UserSchedule::Kind::Fixed:
            u = {{"kind", "fixed"}, {"k", cfg.schedule.fixed_k}};
            break;
        case UserSchedule::Kind::List:
            u = {{"kind", "list"}, {"values", cfg.schedule.values}};
            break;
        case UserSchedule::Kind::RandomSet:
            u = {{"kind", "random"},
                 {"choices", cfg.schedule.values},
                 {"hold", cfg.schedule.hold_blocks},
                 {"shuffle", cfg.schedule.shuffle}};
            break;
    }
    json j{
        {"n_antennas", cfg.n_antennas},
        {"k_max", cfg.k_max},
        {"users", u},
        {"blocks", cfg.blocks},
        {"b_pilot", cfg.b_pilot},
        {"b_info", cfg.b_info},
        {"constellation", cfg.constellation},
        {"channel", {{"kind", cfg.channel_kind}, {"path", cfg.trace_path}}},
        {"snr", snr_to_json(cfg.snr)},
        {"seed", cfg.seed},
        {"method", cfg.method},
        {"q_iterations", cfg.q_iterations},
        {"max_detect_symbols", cfg.max_detect_symbols},
        {"data_path", cfg.data_path},
        {"checkpoint_dir", cfg.checkpoint_dir},
        {"training",
         {{"symbols_per_k", cfg.training.symbols_per_k},
          {"data_b_pilot", cfg.training.data_b_pilot},
          {"data_b_info", cfg.training.data_b_info},
          {"joint_lr", cfg.training.joint_lr},
          {"online_lr", cfg.training.online_lr},
          {"hyper_lr", cfg.training.hyper_lr},
          {"joint_iterations", cfg.training.joint_iterations},
          {"online_iterations", cfg.training.online_iterations},
          {"hyper_iterations", cfg.training.hyper_iterations},
          {"hyper_block_samples", cfg.training.hyper_block_samples},
          {"batch_size", cfg.training.batch_size},
          {"online_batch_size", cfg.training.online_batch_size},
          {"end_to_end", cfg.training.end_to_end}}},
        {"complexity",
         {{"alpha_t", cfg.complexity.alpha_t},
          {"alpha_i", cfg.complexity.alpha_i},
          {"c_ls", cfg.complexity.c_ls}}},
    };
    if (cfg.training.has_data_snr) {
        j["training"]["data_snr"] = snr_to_json(cfg.training.data_snr);
        j["training"]["data_replay_fraction"] = cfg.training.data_replay_fraction;
    }
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("config is not valid JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

}  // namespace hyperrx
