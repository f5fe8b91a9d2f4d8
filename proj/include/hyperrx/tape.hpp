#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "hyperrx/tensor.hpp"

namespace hyperrx {

// Handle to a node on a Tape.
struct Var {
    std::uint32_t idx = 0xffffffffu;
    bool valid() const { return idx != 0xffffffffu; }
};

// Reverse-mode tape. Nodes are appended in topological order during the
// forward pass; backward() walks them in reverse and accumulates gradients
// into every node reachable from the loss. Weight operands may themselves
// be op outputs (e.g. slices of a generator network's output vector), so
// gradients flow through generated parameters exactly as through leaves.
//
// A tape is single-threaded during construction and backward; independent
// tapes may run concurrently.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Trainable input; participates in gradient accumulation.
    Var leaf(Tensor value);
    // Non-differentiable input (observations, frozen soft estimates, ...).
    Var constant(Tensor value);

    // x:[m] or [B×m], w:[m×n], b:[n]  ->  x·w + b, shape [n] or [B×n].
    Var affine(Var x, Var w, Var b);
    // Elementwise max(0, x). Subgradient at 0 is 0.
    Var relu(Var x);
    // Row-wise softmax with max-subtraction; vectors are one row.
    Var softmax(Var x);
    // probs:[B×n] (or [n] with a single label); mean of -log prob of the
    // labelled entry, log argument clamped at 1e-12.
    Var cross_entropy(Var probs, std::vector<int> labels);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var scale(Var a, double c);
    Var sum(Var a);  // -> scalar

    // Concatenate along the last axis. Vector parts give a vector, matrix
    // parts (equal row counts) give a matrix.
    Var concat(std::span<const Var> parts);
    // Column j of a matrix as a [B×1] matrix.
    Var col(Var m, std::size_t j);
    // Contiguous range of the (flat) source reinterpreted as a matrix/vector.
    Var slice_matrix(Var src, std::size_t offset, std::size_t rows, std::size_t cols);
    Var slice_vector(Var src, std::size_t offset, std::size_t len);

    // Reverse accumulation from a scalar loss. Gradients accumulate, so
    // call once per tape; training loops rebuild a tape per step.
    void backward(Var loss);

    // References stay valid while nodes are appended (deque storage).
    const Tensor& value(Var v) const { return nodes_[v.idx].value; }
    // Zero until backward reaches the node; shape always matches value.
    const Tensor& grad(Var v) const { return nodes_[v.idx].grad; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::uint32_t> parents;
        std::function<void(Tape&)> backprop;
        bool requires_grad = false;
        bool reached = false;
    };

    Var push(Tensor value, std::vector<std::uint32_t> parents, bool requires_grad,
             std::function<void(Tape&)> backprop);
    bool needs_grad(std::span<const Var> vars) const;

    Tensor& grad_mut(Var v) { return nodes_[v.idx].grad; }
    bool rg(Var v) const { return nodes_[v.idx].requires_grad; }

    std::deque<Node> nodes_;
};

}  // namespace hyperrx
