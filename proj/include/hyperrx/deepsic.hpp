#pragma once

#include <span>
#include <vector>

#include "hyperrx/channel.hpp"
#include "hyperrx/rng.hpp"
#include "hyperrx/tape.hpp"
#include "hyperrx/tensor.hpp"

namespace hyperrx {

// Architecture constants: two FC layers of sizes (N+K-1)x16 and 16x2 with a
// ReLU in between, one module per user, shared across refinement rounds.
inline constexpr int kModuleHidden = 16;
inline constexpr int kSymbolClasses = 2;

// 16(N+K+1)+18 scalars per module, biases included.
int param_count(int n_antennas, int k_users);

// Weights of one per-user module. Flat layout (also the order a generator
// network's output vector is unflattened in): w1 row-major, b1, w2
// row-major, b2.
struct ModuleParams {
    Tensor w1;  // (N+K-1) x 16
    Tensor b1;  // 16
    Tensor w2;  // 16 x 2
    Tensor b2;  // 2

    static ModuleParams zeros(int n_antennas, int k_users);
    static ModuleParams init(int n_antennas, int k_users, Rng& rng);

    std::size_t scalar_count() const;
    int input_width() const { return static_cast<int>(w1.rows()); }

    std::vector<double> flatten() const;
    static ModuleParams unflatten(std::span<const double> flat, int n_antennas, int k_users);
};

// One module per user; K = modules.size().
struct ReceiverParams {
    std::vector<ModuleParams> modules;

    int users() const { return static_cast<int>(modules.size()); }

    static ReceiverParams init(int n_antennas, int k_users, Rng& rng);
};

// Per-user, per-round soft symbol estimates. probs[q][k] is B×2; q=0 holds
// the uniform priors, probs.back() the receiver output.
struct SoftEstimates {
    std::vector<std::vector<Tensor>> probs;

    const std::vector<Tensor>& final_round() const { return probs.back(); }
    int rounds() const { return static_cast<int>(probs.size()) - 1; }
};

// One module applied to channel outputs plus the interferers' prob-of-+1
// features (ascending user order, K-1 columns). Returns B×2 distributions.
Tensor module_forward(const ModuleParams& m, const Tensor& y, const Tensor& interferer_probs);

// Q rounds of soft interference cancellation over a batch of received
// vectors y (B×N). Pure function of (params, y).
SoftEstimates sic_forward(const ReceiverParams& params, const Tensor& y, int q_iterations);

// Hard detection: per-user argmax over the constellation; an exact tie
// resolves to index 0. Returns a B×K symbol matrix.
Tensor detect(const std::vector<Tensor>& final_probs, const Constellation& c);

// ---- Tape builders (training paths) ------------------------------------
//
// The graph forms mirror the tape-free forwards above; tests pin both
// routes to each other.

struct ModuleVars {
    Var w1, b1, w2, b2;
};

// Register existing weights as trainable leaves.
ModuleVars module_leaves(Tape& tape, const ModuleParams& m);

// Unflatten a node holding at least param_count(n,k) scalars (e.g. a
// generator network output) into module weight views.
ModuleVars module_slices(Tape& tape, Var flat, int n_antennas, int k_users);

// input is [B×(N+K-1)] (already concatenated); returns softmax probs.
Var module_forward_graph(Tape& tape, const ModuleVars& m, Var input);

// Unrolled SIC over Q rounds; y_const is a constant node of shape B×N.
// Returns per-round, per-user prob nodes; [q][k] with q=0 the priors.
std::vector<std::vector<Var>> sic_forward_graph(Tape& tape, const std::vector<ModuleVars>& modules,
                                                Var y_const, int q_iterations);

}  // namespace hyperrx
