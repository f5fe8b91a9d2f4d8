#include "hyperrx/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hyperrx/adam.hpp"

namespace hyperrx {

namespace {

constexpr double kConditionLimit = 1e12;

// Cholesky factor of a symmetric positive-definite matrix, in place.
// Returns false when a pivot collapses.
bool cholesky(std::vector<double>& g, std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
        double d = g[j * k + j];
        for (std::size_t l = 0; l < j; ++l) d -= g[j * k + l] * g[j * k + l];
        if (d <= 0.0 || !std::isfinite(d)) return false;
        const double root = std::sqrt(d);
        g[j * k + j] = root;
        for (std::size_t i = j + 1; i < k; ++i) {
            double v = g[i * k + j];
            for (std::size_t l = 0; l < j; ++l) v -= g[i * k + l] * g[j * k + l];
            g[i * k + j] = v / root;
        }
    }
    return true;
}

}  // namespace

Tensor ls_estimate(const Tensor& pilots_s, const Tensor& pilots_y) {
    if (pilots_s.rank() != 2 || pilots_y.rank() != 2 || pilots_s.rows() != pilots_y.rows())
        throw std::invalid_argument("ls_estimate: pilot matrices must share row count");
    const std::size_t b = pilots_s.rows(), k = pilots_s.cols(), n = pilots_y.cols();
    if (b < k) throw singular_pilot_error("ls_estimate: fewer pilots than users");

    // Gram = s^T s (K×K), rhs = s^T y (K×N)
    std::vector<double> gram(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < b; ++r) acc += pilots_s.at(r, i) * pilots_s.at(r, j);
            gram[i * k + j] = gram[j * k + i] = acc;
        }
    Tensor h_hat({k, n});
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c = 0; c < n; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < b; ++r) acc += pilots_s.at(r, i) * pilots_y.at(r, c);
            h_hat.at(i, c) = acc;
        }

    if (!cholesky(gram, k))
        throw singular_pilot_error("ls_estimate: rank-deficient pilot Gram matrix");
    double dmin = gram[0], dmax = gram[0];
    for (std::size_t j = 1; j < k; ++j) {
        dmin = std::min(dmin, gram[j * k + j]);
        dmax = std::max(dmax, gram[j * k + j]);
    }
    if ((dmax / dmin) * (dmax / dmin) > kConditionLimit)
        throw singular_pilot_error("ls_estimate: ill-conditioned pilot Gram matrix");

    // solve L L^T x = rhs, column by column
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < k; ++i) {
            double v = h_hat.at(i, c);
            for (std::size_t l = 0; l < i; ++l) v -= gram[i * k + l] * h_hat.at(l, c);
            h_hat.at(i, c) = v / gram[i * k + i];
        }
        for (std::size_t i = k; i-- > 0;) {
            double v = h_hat.at(i, c);
            for (std::size_t l = i + 1; l < k; ++l) v -= gram[l * k + i] * h_hat.at(l, c);
            h_hat.at(i, c) = v / gram[i * k + i];
        }
    }
    return h_hat;
}

HypernetParams HypernetParams::init(int n_antennas, int k_max, Rng& rng) {
    HypernetParams hp;
    hp.n_antennas = n_antennas;
    hp.k_max = k_max;
    const auto in = static_cast<std::size_t>(n_antennas * k_max);
    const auto out = static_cast<std::size_t>(hp.output_dim());
    hp.w1 = Tensor::zeros({in, 64});
    hp.b1 = Tensor::zeros({64});
    hp.w2 = Tensor::zeros({64, 32});
    hp.b2 = Tensor::zeros({32});
    hp.w3 = Tensor::zeros({32, out});
    hp.b3 = Tensor::zeros({out});
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : hp.w1.data()) v = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(64.0);
    for (auto& v : hp.w2.data()) v = rng.uniform(-bound2, bound2);
    // small output layer so generated modules start near zero and the
    // receiver output starts near uniform
    for (auto& v : hp.w3.data()) v = rng.uniform(-1e-2, 1e-2);
    for (auto& v : hp.b3.data()) v = rng.uniform(-1e-2, 1e-2);
    hp.e_self = Tensor::zeros({static_cast<std::size_t>(n_antennas)});
    hp.e_pad = Tensor::zeros({static_cast<std::size_t>(n_antennas)});
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    for (auto& v : hp.e_self.data()) v = scale * rng.gaussian();
    for (auto& v : hp.e_pad.data()) v = scale * rng.gaussian();
    return hp;
}

std::size_t HypernetParams::scalar_count() const {
    return dnn_scalar_count() + e_self.numel() + e_pad.numel();
}

std::size_t HypernetParams::dnn_scalar_count() const {
    return w1.numel() + b1.numel() + w2.numel() + b2.numel() + w3.numel() + b3.numel();
}

std::vector<double> build_user_embedding(const Tensor& h_hat, int user, int k_max,
                                         std::span<const double> e_self,
                                         std::span<const double> e_pad) {
    const int k_users = static_cast<int>(h_hat.rows());
    const std::size_t n = h_hat.cols();
    if (user < 0 || user >= k_users)
        throw std::invalid_argument("build_user_embedding: user index out of range");
    if (k_users > k_max) throw std::invalid_argument("build_user_embedding: K exceeds K_max");
    if (e_self.size() != n || e_pad.size() != n)
        throw std::invalid_argument("build_user_embedding: embedding vector length != N");

    std::vector<double> u;
    u.reserve(static_cast<std::size_t>(k_max) * n);
    for (int l = 0; l < k_max; ++l) {
        if (l == user) {
            u.insert(u.end(), e_self.begin(), e_self.end());
        } else if (l < k_users) {
            const double* row = h_hat.data().data() + static_cast<std::size_t>(l) * n;
            u.insert(u.end(), row, row + n);
        } else {
            u.insert(u.end(), e_pad.begin(), e_pad.end());
        }
    }
    return u;
}

namespace {

// x <- relu(x W + b) done into a fresh buffer
std::vector<double> dense(const std::vector<double>& x, const Tensor& w, const Tensor& b,
                          bool apply_relu) {
    const std::size_t m = w.rows(), n = w.cols();
    std::vector<double> out(b.data().begin(), b.data().end());
    for (std::size_t i = 0; i < m; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* wrow = w.data().data() + i * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += xi * wrow[j];
    }
    if (apply_relu)
        for (auto& v : out) v = v > 0.0 ? v : 0.0;
    return out;
}

}  // namespace

ModuleParams hypernet_forward(const HypernetParams& hp, std::span<const double> embedding,
                              int k_users) {
    if (k_users < 1 || k_users > hp.k_max)
        throw std::invalid_argument("hypernet_forward: K out of range");
    if (embedding.size() != static_cast<std::size_t>(hp.embedding_dim()))
        throw std::invalid_argument("hypernet_forward: embedding length mismatch");
    std::vector<double> x(embedding.begin(), embedding.end());
    x = dense(x, hp.w1, hp.b1, true);
    x = dense(x, hp.w2, hp.b2, true);
    x = dense(x, hp.w3, hp.b3, false);
    return ModuleParams::unflatten(x, hp.n_antennas, k_users);
}

ReceiverParams hypernet_adapt(const HypernetParams& hp, const TransmissionBlock& block) {
    const Tensor h_hat = ls_estimate(block.pilots_s, block.pilots_y);
    ReceiverParams params;
    params.modules.reserve(static_cast<std::size_t>(block.k_users));
    for (int k = 0; k < block.k_users; ++k) {
        const auto u = build_user_embedding(h_hat, k, hp.k_max, hp.e_self.data(),
                                            hp.e_pad.data());
        params.modules.push_back(hypernet_forward(hp, u, block.k_users));
    }
    return params;
}

std::size_t Dataset::symbols_for(int k_users) const {
    auto it = blocks.find(k_users);
    if (it == blocks.end()) return 0;
    std::size_t total = 0;
    for (const auto& blk : it->second) total += blk.b_pilot() + blk.b_info();
    return total;
}

Dataset generate_dataset(const LinkConfig& link, std::span<const int> k_values,
                         int symbols_per_k, std::uint64_t seed,
                         const SnrProfileConfig* alt_snr, double replay_fraction) {
    Dataset data;
    data.n_antennas = link.n_antennas;
    data.k_max = link.k_max;
    data.channel_kind = link.use_trace ? "trace" : "synthetic";
    data.seed = seed;
    const int per_block = link.b_pilot + link.b_info;
    const int n_blocks = (symbols_per_k + per_block - 1) / per_block;
    std::vector<TraceRecord> trace;
    if (link.use_trace) trace = load_trace(link.trace_path, link.n_antennas, link.k_max);
    for (int k : k_values) {
        const Rng master = Rng(seed).derive(rng_stream::kTraining, static_cast<std::uint64_t>(k));
        auto& blks = data.blocks[k];
        blks.reserve(static_cast<std::size_t>(n_blocks));
        for (int t = 1; t <= n_blocks; ++t) {
            LinkConfig block_link = link;
            if (alt_snr != nullptr) {
                const double f = std::clamp(replay_fraction, 0.0, 1.0);
                const bool replay = std::floor(t * f) > std::floor((t - 1) * f);
                if (!replay) block_link.snr = *alt_snr;
            }
            const TraceRecord* rec = nullptr;
            TraceRecord resized;
            if (link.use_trace) {
                if (trace.empty()) throw std::runtime_error("generate_dataset: empty trace");
                resized = trace[static_cast<std::size_t>(t - 1) % trace.size()];
                if (resized.k_users < k)
                    throw std::runtime_error("generate_dataset: trace K below requested K");
                if (resized.k_users > k) {
                    // keep the first k columns so every K sees the same scatterers
                    Tensor h({resized.h.rows(), static_cast<std::size_t>(k)});
                    for (std::size_t r = 0; r < h.rows(); ++r)
                        for (std::size_t c = 0; c < h.cols(); ++c) h.at(r, c) = resized.h.at(r, c);
                    resized.h = std::move(h);
                    resized.k_users = k;
                }
                rec = &resized;
            }
            blks.push_back(make_block(t, k, block_link, master, rec));
        }
    }
    return data;
}

namespace {

constexpr std::uint32_t kDatasetMagic = 0x48525844;  // "HRXD"
constexpr std::uint32_t kDatasetVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_tensor(std::ofstream& out, const Tensor& t) {
    write_u32(out, static_cast<std::uint32_t>(t.rows()));
    write_u32(out, static_cast<std::uint32_t>(t.rank() == 2 ? t.cols() : 0));
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
}
std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
Tensor read_tensor(std::ifstream& in) {
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    Tensor t = cols == 0 ? Tensor({rows}) : Tensor({rows, cols});
    in.read(reinterpret_cast<char*>(t.data().data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    return t;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset: " + path.string());
    write_u32(out, kDatasetMagic);
    write_u32(out, kDatasetVersion);
    write_u32(out, static_cast<std::uint32_t>(data.n_antennas));
    write_u32(out, static_cast<std::uint32_t>(data.k_max));
    write_u64(out, data.seed);
    write_u32(out, static_cast<std::uint32_t>(data.channel_kind.size()));
    out.write(data.channel_kind.data(), static_cast<std::streamsize>(data.channel_kind.size()));
    write_u32(out, static_cast<std::uint32_t>(data.blocks.size()));
    for (const auto& [k, blks] : data.blocks) {
        write_u32(out, static_cast<std::uint32_t>(k));
        write_u32(out, static_cast<std::uint32_t>(blks.size()));
        for (const auto& blk : blks) {
            write_u32(out, static_cast<std::uint32_t>(blk.t));
            write_u32(out, static_cast<std::uint32_t>(blk.k_users));
            write_tensor(out, blk.pilots_s);
            write_tensor(out, blk.pilots_y);
            write_tensor(out, blk.info_s);
            write_tensor(out, blk.info_y);
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
    if (read_u32(in) != kDatasetMagic) throw std::runtime_error("not a dataset file: " + path.string());
    if (read_u32(in) != kDatasetVersion) throw std::runtime_error("unsupported dataset version");
    Dataset data;
    data.n_antennas = static_cast<int>(read_u32(in));
    data.k_max = static_cast<int>(read_u32(in));
    data.seed = read_u64(in);
    std::string kind(read_u32(in), '\0');
    in.read(kind.data(), static_cast<std::streamsize>(kind.size()));
    data.channel_kind = std::move(kind);
    const std::uint32_t sections = read_u32(in);
    for (std::uint32_t s = 0; s < sections; ++s) {
        const int k = static_cast<int>(read_u32(in));
        const std::uint32_t count = read_u32(in);
        auto& blks = data.blocks[k];
        blks.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            TransmissionBlock blk;
            blk.t = static_cast<int>(read_u32(in));
            blk.k_users = static_cast<int>(read_u32(in));
            blk.pilots_s = read_tensor(in);
            blk.pilots_y = read_tensor(in);
            blk.info_s = read_tensor(in);
            blk.info_y = read_tensor(in);
            blks.push_back(std::move(blk));
        }
    }
    if (!in) throw std::runtime_error("truncated dataset: " + path.string());
    return data;
}

namespace {

// Pooled labelled rows of one or more blocks.
struct Pool {
    Tensor y;  // M × N
    Tensor s;  // M × K
};

Pool pool_blocks(const std::vector<TransmissionBlock>& blks) {
    std::size_t rows = 0;
    for (const auto& b : blks) rows += b.b_pilot() + b.b_info();
    const std::size_t n = blks.front().pilots_y.cols();
    const std::size_t k = blks.front().pilots_s.cols();
    Pool p{Tensor({rows, n}), Tensor({rows, k})};
    std::size_t r = 0;
    auto copy_rows = [&](const Tensor& ys, const Tensor& ss) {
        for (std::size_t i = 0; i < ys.rows(); ++i, ++r) {
            for (std::size_t c = 0; c < n; ++c) p.y.at(r, c) = ys.at(i, c);
            for (std::size_t c = 0; c < k; ++c) p.s.at(r, c) = ss.at(i, c);
        }
    };
    for (const auto& b : blks) {
        copy_rows(b.pilots_y, b.pilots_s);
        copy_rows(b.info_y, b.info_s);
    }
    return p;
}

std::vector<std::size_t> sample_rows(Rng& rng, std::size_t total, int batch_size) {
    std::vector<std::size_t> rows;
    if (batch_size <= 0 || static_cast<std::size_t>(batch_size) >= total) {
        rows.resize(total);
        for (std::size_t i = 0; i < total; ++i) rows[i] = i;
    } else {
        rows.resize(static_cast<std::size_t>(batch_size));
        for (auto& r : rows) r = static_cast<std::size_t>(rng.next_u64() % total);
    }
    return rows;
}

// Frozen prob-of-+1 features for round q (estimates after q-1 rounds with
// the current weights; round 1 sees the uniform priors).
Tensor round_inputs(const ReceiverParams& params, const Tensor& y, int q) {
    const auto k = static_cast<std::size_t>(params.users());
    Tensor probs({y.rows(), k});
    if (q <= 1) {
        for (auto& v : probs.data()) v = 0.5;
        return probs;
    }
    const SoftEstimates est = sic_forward(params, y, q - 1);
    for (std::size_t l = 0; l < k; ++l)
        for (std::size_t r = 0; r < y.rows(); ++r) probs.at(r, l) = est.final_round()[l].at(r, 0);
    return probs;
}

void train_module_pass(ModuleParams& module, int user, const Pool& pool,
                       const Tensor& plus_probs, const Constellation& c,
                       const SicTrainOptions& opt, Rng& batch_rng, AdamTrainer& trainer) {
    const std::size_t n = pool.y.cols();
    const std::size_t k = pool.s.cols();
    for (int it = 0; it < opt.iterations; ++it) {
        const auto rows = sample_rows(batch_rng, pool.y.rows(), opt.batch_size);
        Tensor input({rows.size(), n + k - 1});
        std::vector<int> labels(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::size_t r = rows[i];
            std::size_t col = 0;
            for (std::size_t cidx = 0; cidx < n; ++cidx) input.at(i, col++) = pool.y.at(r, cidx);
            for (std::size_t l = 0; l < k; ++l)
                if (l != static_cast<std::size_t>(user)) input.at(i, col++) = plus_probs.at(r, l);
            labels[i] = c.index_of(pool.s.at(r, static_cast<std::size_t>(user)));
        }
        Tape tape;
        const ModuleVars mv = module_leaves(tape, module);
        const Var in_const = tape.constant(std::move(input));
        const Var probs = module_forward_graph(tape, mv, in_const);
        const Var loss = tape.cross_entropy(probs, std::move(labels));
        tape.backward(loss);
        const std::array<Var, 4> leaves{mv.w1, mv.b1, mv.w2, mv.b2};
        trainer.step(tape, leaves);
    }
}

void train_receiver_end_to_end(ReceiverParams& params, const Pool& pool,
                               const Constellation& c, const SicTrainOptions& opt,
                               Rng& batch_rng) {
    const std::size_t n = pool.y.cols();
    const int k = params.users();
    AdamTrainer trainer(opt.lr);
    for (auto& m : params.modules) {
        trainer.attach(&m.w1);
        trainer.attach(&m.b1);
        trainer.attach(&m.w2);
        trainer.attach(&m.b2);
    }
    for (int it = 0; it < opt.iterations; ++it) {
        const auto rows = sample_rows(batch_rng, pool.y.rows(), opt.batch_size);
        Tensor y({rows.size(), n});
        std::vector<std::vector<int>> labels(static_cast<std::size_t>(k),
                                             std::vector<int>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t cidx = 0; cidx < n; ++cidx) y.at(i, cidx) = pool.y.at(rows[i], cidx);
            for (int l = 0; l < k; ++l)
                labels[static_cast<std::size_t>(l)][i] =
                    c.index_of(pool.s.at(rows[i], static_cast<std::size_t>(l)));
        }
        Tape tape;
        std::vector<Var> leaves;
        std::vector<ModuleVars> mvs;
        for (auto& m : params.modules) {
            const ModuleVars mv = module_leaves(tape, m);
            mvs.push_back(mv);
            leaves.insert(leaves.end(), {mv.w1, mv.b1, mv.w2, mv.b2});
        }
        const Var y_const = tape.constant(std::move(y));
        const auto rounds = sic_forward_graph(tape, mvs, y_const, opt.q_iterations);
        Var loss = tape.cross_entropy(rounds.back()[0], labels[0]);
        for (int l = 1; l < k; ++l)
            loss = tape.add(loss, tape.cross_entropy(rounds.back()[static_cast<std::size_t>(l)],
                                                     labels[static_cast<std::size_t>(l)]));
        tape.backward(loss);
        trainer.step(tape, leaves);
    }
}

void train_receiver(ReceiverParams& params, const Pool& pool, const Constellation& c,
                    const SicTrainOptions& opt, Rng& batch_rng) {
    if (opt.end_to_end) {
        train_receiver_end_to_end(params, pool, c, opt, batch_rng);
        return;
    }
    // one optimizer per module, moments carried across the Q rounds
    std::vector<AdamTrainer> trainers;
    trainers.reserve(params.modules.size());
    for (auto& m : params.modules) {
        AdamTrainer trainer(opt.lr);
        trainer.attach(&m.w1);
        trainer.attach(&m.b1);
        trainer.attach(&m.w2);
        trainer.attach(&m.b2);
        trainers.push_back(std::move(trainer));
    }
    for (int q = 1; q <= opt.q_iterations; ++q) {
        const Tensor plus_probs = round_inputs(params, pool.y, q);
        for (int k = 0; k < params.users(); ++k)
            train_module_pass(params.modules[static_cast<std::size_t>(k)], k, pool, plus_probs,
                              c, opt, batch_rng, trainers[static_cast<std::size_t>(k)]);
    }
}

}  // namespace

std::map<int, ReceiverParams> joint_train(const Dataset& data, const SicTrainOptions& opt) {
    if (data.blocks.empty()) throw std::invalid_argument("joint_train: empty dataset");
    const Constellation c = Constellation::bpsk();
    std::map<int, ReceiverParams> trained;
    for (const auto& [k, blks] : data.blocks) {
        if (blks.empty())
            throw std::invalid_argument("joint_train: empty dataset for K=" + std::to_string(k));
        const Pool pool = pool_blocks(blks);
        Rng init_rng = Rng(opt.seed).derive(rng_stream::kInit, static_cast<std::uint64_t>(k));
        Rng batch_rng = Rng(opt.seed).derive(rng_stream::kTraining, static_cast<std::uint64_t>(k));
        ReceiverParams params = ReceiverParams::init(data.n_antennas, k, init_rng);
        train_receiver(params, pool, c, opt, batch_rng);
        trained.emplace(k, std::move(params));
    }
    return trained;
}

ReceiverParams online_adapt(const ReceiverParams* prev, const TransmissionBlock& block,
                            int n_antennas, const Constellation& c,
                            const SicTrainOptions& opt) {
    if (block.b_pilot() == 0) throw std::invalid_argument("online_adapt: block has no pilots");
    ReceiverParams params;
    if (prev != nullptr) {
        if (prev->users() != block.k_users)
            throw std::invalid_argument("online_adapt: warm start with mismatched K");
        params = *prev;
    } else {
        Rng init_rng = Rng(opt.seed).derive(rng_stream::kInit, static_cast<std::uint64_t>(block.t));
        params = ReceiverParams::init(n_antennas, block.k_users, init_rng);
    }
    if (opt.iterations <= 0) return params;

    Pool pool{block.pilots_y, block.pilots_s};
    Rng batch_rng = Rng(opt.seed).derive(rng_stream::kTraining, static_cast<std::uint64_t>(block.t));
    train_receiver(params, pool, c, opt, batch_rng);
    return params;
}

HypernetParams hypernet_train(const Dataset& data, const HyperTrainOptions& opt,
                              std::vector<double>* loss_history) {
    for (int k = 2; k <= data.k_max; ++k)
        if (!data.blocks.contains(k) || data.blocks.at(k).empty())
            throw std::invalid_argument("hypernet_train: dataset missing K=" + std::to_string(k));
    const Constellation c = Constellation::bpsk();
    const int n = data.n_antennas;

    Rng init_rng = Rng(opt.seed).derive(rng_stream::kInit);
    Rng pick_rng = Rng(opt.seed).derive(rng_stream::kSchedule);
    Rng batch_rng = Rng(opt.seed).derive(rng_stream::kTraining);
    HypernetParams hp = HypernetParams::init(n, data.k_max, init_rng);

    AdamTrainer trainer(opt.lr);
    trainer.attach(&hp.w1);
    trainer.attach(&hp.b1);
    trainer.attach(&hp.w2);
    trainer.attach(&hp.b2);
    trainer.attach(&hp.w3);
    trainer.attach(&hp.b3);
    trainer.attach(&hp.e_self);
    trainer.attach(&hp.e_pad);

    for (int sample = 0; sample < opt.block_samples; ++sample) {
        const int k_users = pick_rng.uniform_int(2, data.k_max);
        const auto& blks = data.blocks.at(k_users);
        const auto& blk = blks[static_cast<std::size_t>(
            pick_rng.next_u64() % blks.size())];
        const Tensor h_hat = ls_estimate(blk.pilots_s, blk.pilots_y);
        const Pool pool = pool_blocks({blk});

        for (int it = 0; it < opt.iterations_per_block; ++it) {
            const auto rows = sample_rows(batch_rng, pool.y.rows(), opt.batch_size);
            Tensor y({rows.size(), static_cast<std::size_t>(n)});
            std::vector<std::vector<int>> labels(
                static_cast<std::size_t>(k_users), std::vector<int>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                for (std::size_t cidx = 0; cidx < static_cast<std::size_t>(n); ++cidx)
                    y.at(i, cidx) = pool.y.at(rows[i], cidx);
                for (int l = 0; l < k_users; ++l)
                    labels[static_cast<std::size_t>(l)][i] =
                        c.index_of(pool.s.at(rows[i], static_cast<std::size_t>(l)));
            }

            Tape tape;
            const HypernetVars hv = hypernet_leaves(tape, hp);
            std::vector<ModuleVars> mvs;
            mvs.reserve(static_cast<std::size_t>(k_users));
            for (int k = 0; k < k_users; ++k) {
                const Var u = user_embedding_graph(tape, hv, h_hat, k, k_users, data.k_max, n);
                const Var flat = hypernet_forward_graph(tape, hv, u);
                mvs.push_back(module_slices(tape, flat, n, k_users));
            }
            const Var y_const = tape.constant(std::move(y));
            const auto rounds = sic_forward_graph(tape, mvs, y_const, opt.q_iterations);
            Var loss = tape.cross_entropy(rounds.back()[0], labels[0]);
            for (int l = 1; l < k_users; ++l)
                loss = tape.add(loss,
                                tape.cross_entropy(rounds.back()[static_cast<std::size_t>(l)],
                                                   labels[static_cast<std::size_t>(l)]));
            tape.backward(loss);
            if (loss_history != nullptr)
                loss_history->push_back(tape.value(loss)[0] / k_users);  // per-user, comparable across K
            const std::array<Var, 8> leaves{hv.w1, hv.b1, hv.w2, hv.b2,
                                            hv.w3, hv.b3, hv.e_self, hv.e_pad};
            trainer.step(tape, leaves);
        }
    }
    return hp;
}

double receiver_ce_loss(const ReceiverParams& params, const Tensor& y, const Tensor& s,
                        const Constellation& c, int q_iterations) {
    const SoftEstimates est = sic_forward(params, y, q_iterations);
    const std::size_t b = y.rows();
    double loss = 0.0;
    for (int k = 0; k < params.users(); ++k) {
        const Tensor& p = est.final_round()[static_cast<std::size_t>(k)];
        double acc = 0.0;
        for (std::size_t r = 0; r < b; ++r) {
            const int label = c.index_of(s.at(r, static_cast<std::size_t>(k)));
            acc -= std::log(std::max(p.at(r, static_cast<std::size_t>(label)), 1e-12));
        }
        loss += acc / static_cast<double>(b);
    }
    return loss;
}

HypernetVars hypernet_leaves(Tape& tape, const HypernetParams& hp) {
    return {tape.leaf(hp.w1), tape.leaf(hp.b1), tape.leaf(hp.w2), tape.leaf(hp.b2),
            tape.leaf(hp.w3), tape.leaf(hp.b3), tape.leaf(hp.e_self), tape.leaf(hp.e_pad)};
}

Var user_embedding_graph(Tape& tape, const HypernetVars& hv, const Tensor& h_hat, int user,
                         int k_users, int k_max, int n_antennas) {
    const auto n = static_cast<std::size_t>(n_antennas);
    std::vector<Var> parts;
    parts.reserve(static_cast<std::size_t>(k_max));
    for (int l = 0; l < k_max; ++l) {
        if (l == user) {
            parts.push_back(hv.e_self);
        } else if (l < k_users) {
            Tensor row({n});
            for (std::size_t c = 0; c < n; ++c) row[c] = h_hat.at(static_cast<std::size_t>(l), c);
            parts.push_back(tape.constant(std::move(row)));
        } else {
            parts.push_back(hv.e_pad);
        }
    }
    return tape.concat(parts);
}

Var hypernet_forward_graph(Tape& tape, const HypernetVars& hv, Var embedding) {
    Var h1 = tape.relu(tape.affine(embedding, hv.w1, hv.b1));
    Var h2 = tape.relu(tape.affine(h1, hv.w2, hv.b2));
    return tape.affine(h2, hv.w3, hv.b3);
}

}  // namespace hyperrx
