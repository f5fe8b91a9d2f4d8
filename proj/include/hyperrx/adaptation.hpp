#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperrx/channel.hpp"
#include "hyperrx/deepsic.hpp"
#include "hyperrx/rng.hpp"
#include "hyperrx/tape.hpp"

namespace hyperrx {

// Pilot Gram matrix is rank deficient; callers may regenerate pilots.
class singular_pilot_error : public std::runtime_error {
public:
    explicit singular_pilot_error(const std::string& what) : std::runtime_error(what) {}
};

// Linear least-squares channel estimate from pilots:
// H_hat = (s^T s)^{-1} s^T y, shape K×N. Row l is user l's spatial
// signature (H^T row l in the noiseless linear case). Throws
// singular_pilot_error when the Gram matrix is rank deficient or its
// condition estimate exceeds 1e12.
Tensor ls_estimate(const Tensor& pilots_s, const Tensor& pilots_y);

// Hypernetwork weights: three FC layers (N*K_max)x64, 64x32, 32xD_out with
// ReLU activations in between, where D_out = param_count(N, K_max), plus
// the two trainable embedding vectors shared by all users.
struct HypernetParams {
    int n_antennas = 0;
    int k_max = 0;
    Tensor w1, b1;      // (N*K_max) x 64
    Tensor w2, b2;      // 64 x 32
    Tensor w3, b3;      // 32 x D_out
    Tensor e_self;      // N
    Tensor e_pad;       // N

    static HypernetParams init(int n_antennas, int k_max, Rng& rng);

    int output_dim() const { return param_count(n_antennas, k_max); }
    int embedding_dim() const { return n_antennas * k_max; }
    std::size_t scalar_count() const;        // includes e_self and e_pad
    std::size_t dnn_scalar_count() const;    // |phi| without the embeddings
};

// Fixed-length context vector of one user: K_max segments of length N, with
// the user's own slot holding e_self, active interferers their estimated
// signatures, and non-existing users e_pad.
std::vector<double> build_user_embedding(const Tensor& h_hat, int user, int k_max,
                                         std::span<const double> e_self,
                                         std::span<const double> e_pad);

// Generates one user's module weights from its embedding: the first
// param_count(N, K) outputs of the hypernetwork are unflattened into the
// declared module layout, the remainder is discarded.
ModuleParams hypernet_forward(const HypernetParams& hp, std::span<const double> embedding,
                              int k_users);

// Pilot-driven receiver assembly for one block: LS estimate, K user
// embeddings, K hypernetwork runs. Involves no gradient computation and
// never mutates hp.
ReceiverParams hypernet_adapt(const HypernetParams& hp, const TransmissionBlock& block);

// ---- Datasets ------------------------------------------------------------

// Offline training data: blocks over many channel realizations, keyed by
// the number of active users.
struct Dataset {
    int n_antennas = 0;
    int k_max = 0;
    std::string channel_kind;
    std::uint64_t seed = 0;
    std::map<int, std::vector<TransmissionBlock>> blocks;

    std::size_t symbols_for(int k_users) const;
};

// Training blocks follow link.snr; when alt_snr is given, all but a
// replay_fraction of the blocks use it instead (off-trajectory channel
// draws from the same family, with the rest replaying the deployment
// profile under fresh noise and symbols).
Dataset generate_dataset(const LinkConfig& link, std::span<const int> k_values,
                         int symbols_per_k, std::uint64_t seed,
                         const SnrProfileConfig* alt_snr = nullptr,
                         double replay_fraction = 0.0);

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

// ---- Training strategies ---------------------------------------------------

struct SicTrainOptions {
    double lr = 1e-3;
    int iterations = 100;  // Adam steps per module per sequential round
    int batch_size = 512;  // 0 = full batch
    int q_iterations = 3;
    bool end_to_end = false;  // train all modules jointly through the unrolled graph
    std::uint64_t seed = 0;
};

struct HyperTrainOptions {
    double lr = 5e-4;
    int iterations_per_block = 25;  // Adam steps per sampled block
    int block_samples = 300;
    int batch_size = 512;
    int q_iterations = 3;
    std::uint64_t seed = 0;
};

// Offline joint learning: one static receiver per user count, trained by
// Adam on the pooled per-K data. Sequential regime: for each round
// q=1..Q, every module is trained against its user's symbols given the
// previous round's soft estimates (frozen), which are then recomputed.
std::map<int, ReceiverParams> joint_train(const Dataset& data, const SicTrainOptions& opt);

// Per-block online learning on the pilots only. Starts from prev when
// given (caller ensures matching K), otherwise from a fresh seeded init.
// iterations == 0 returns the starting point unchanged.
ReceiverParams online_adapt(const ReceiverParams* prev, const TransmissionBlock& block,
                            int n_antennas, const Constellation& c,
                            const SicTrainOptions& opt);

// Offline hypernetwork training. Each outer step samples a user count and
// a block, takes the LS estimate from its pilots, then runs
// iterations_per_block Adam steps on minibatches of the block's symbols,
// backpropagating the summed per-user cross-entropy through the unrolled
// receiver, the hypernetwork and the embedding vectors. loss_history, when
// given, records the per-step loss normalized per user (comparable across
// sampled K).
HypernetParams hypernet_train(const Dataset& data, const HyperTrainOptions& opt,
                              std::vector<double>* loss_history = nullptr);

// Mean cross-entropy of the receiver output on (y, s); the sum over users
// of per-user mean -log p. Evaluation helper shared by trainers and tests.
double receiver_ce_loss(const ReceiverParams& params, const Tensor& y, const Tensor& s,
                        const Constellation& c, int q_iterations);

// ---- Tape builders ---------------------------------------------------------

struct HypernetVars {
    Var w1, b1, w2, b2, w3, b3, e_self, e_pad;
};

HypernetVars hypernet_leaves(Tape& tape, const HypernetParams& hp);

// Embedding as a graph node so gradients reach e_self / e_pad.
Var user_embedding_graph(Tape& tape, const HypernetVars& hv, const Tensor& h_hat, int user,
                         int k_users, int k_max, int n_antennas);

// Full generator MLP; returns the flat D_out output vector node.
Var hypernet_forward_graph(Tape& tape, const HypernetVars& hv, Var embedding);

}  // namespace hyperrx
