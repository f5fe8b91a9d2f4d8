#include "hyperrx/tape.hpp"

#include <algorithm>
#include <cmath>

namespace hyperrx {

namespace {

constexpr double kLogClamp = 1e-12;

void check_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("tape: shape mismatch in ") + what);
}

}  // namespace

Var Tape::push(Tensor value, std::vector<std::uint32_t> parents, bool requires_grad,
               std::function<void(Tape&)> backprop) {
    Node node;
    node.grad = Tensor::zeros(value.shape());
    node.value = std::move(value);
    node.parents = std::move(parents);
    node.requires_grad = requires_grad;
    if (requires_grad) node.backprop = std::move(backprop);
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

bool Tape::needs_grad(std::span<const Var> vars) const {
    return std::any_of(vars.begin(), vars.end(), [this](Var v) { return rg(v); });
}

Var Tape::leaf(Tensor value) {
    return push(std::move(value), {}, true, nullptr);
}

Var Tape::constant(Tensor value) {
    return push(std::move(value), {}, false, nullptr);
}

Var Tape::affine(Var x, Var w, Var b) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    check_shape(wv.rank() == 2, "affine weights");
    const std::size_t m = wv.rows(), n = wv.cols();
    check_shape(bv.rank() == 1 && bv.numel() == n, "affine bias");
    const bool batched = xv.rank() == 2;
    check_shape(batched ? xv.cols() == m : (xv.rank() == 1 && xv.numel() == m),
                "affine input");
    const std::size_t rows = batched ? xv.rows() : 1;

    Tensor out = batched ? Tensor::zeros({rows, n}) : Tensor::zeros({n});
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data().data() + r * m;
        double* or_ = out.data().data() + r * n;
        for (std::size_t j = 0; j < n; ++j) or_[j] = bv[j];
        for (std::size_t i = 0; i < m; ++i) {
            const double xi = xr[i];
            if (xi == 0.0) continue;
            const double* wrow = wv.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) or_[j] += xi * wrow[j];
        }
    }

    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {x.idx, w.idx, b.idx}, needs_grad(std::array{x, w, b}),
                [x, w, b, self, m, n, rows](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& xv = t.value(x);
                    const Tensor& wv = t.value(w);
                    if (t.rg(x)) {
                        Tensor& gx = t.grad_mut(x);
                        for (std::size_t r = 0; r < rows; ++r) {
                            const double* gr = g.data().data() + r * n;
                            double* gxr = gx.data().data() + r * m;
                            for (std::size_t i = 0; i < m; ++i) {
                                const double* wrow = wv.data().data() + i * n;
                                double acc = 0.0;
                                for (std::size_t j = 0; j < n; ++j) acc += gr[j] * wrow[j];
                                gxr[i] += acc;
                            }
                        }
                    }
                    if (t.rg(w)) {
                        Tensor& gw = t.grad_mut(w);
                        for (std::size_t r = 0; r < rows; ++r) {
                            const double* xr = xv.data().data() + r * m;
                            const double* gr = g.data().data() + r * n;
                            for (std::size_t i = 0; i < m; ++i) {
                                const double xi = xr[i];
                                if (xi == 0.0) continue;
                                double* gwrow = gw.data().data() + i * n;
                                for (std::size_t j = 0; j < n; ++j) gwrow[j] += xi * gr[j];
                            }
                        }
                    }
                    if (t.rg(b)) {
                        Tensor& gb = t.grad_mut(b);
                        for (std::size_t r = 0; r < rows; ++r) {
                            const double* gr = g.data().data() + r * n;
                            for (std::size_t j = 0; j < n; ++j) gb[j] += gr[j];
                        }
                    }
                });
}

Var Tape::relu(Var x) {
    Tensor out = value(x);
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {x.idx}, rg(x), [x, self](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(x);
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (xv[i] > 0.0) gx[i] += g[i];
    });
}

Var Tape::softmax(Var x) {
    const Tensor& xv = value(x);
    const std::size_t n = xv.cols();
    const std::size_t rows = xv.rank() == 2 ? xv.rows() : 1;
    Tensor out = xv;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.data().data() + r * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = std::exp(row[j] - mx);
            s += row[j];
        }
        for (std::size_t j = 0; j < n; ++j) row[j] /= s;
    }
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {x.idx}, rg(x), [x, self, n, rows](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& gx = t.grad_mut(x);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = y.data().data() + r * n;
            const double* gr = g.data().data() + r * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
            double* gxr = gx.data().data() + r * n;
            for (std::size_t j = 0; j < n; ++j) gxr[j] += yr[j] * (gr[j] - dot);
        }
    });
}

Var Tape::cross_entropy(Var probs, std::vector<int> labels) {
    const Tensor& pv = value(probs);
    const std::size_t n = pv.cols();
    const std::size_t rows = pv.rank() == 2 ? pv.rows() : 1;
    if (rows == 0 || labels.empty())
        throw std::invalid_argument("cross_entropy: empty batch");
    check_shape(labels.size() == rows, "cross_entropy labels");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= n)
            throw std::invalid_argument("cross_entropy: label out of range");

    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        loss -= std::log(std::max(pv[r * n + labels[r]], kLogClamp));
    loss /= static_cast<double>(rows);

    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(Tensor::scalar(loss), {probs.idx}, rg(probs),
                [probs, self, n, rows, labels = std::move(labels)](Tape& t) {
                    const double g = t.grad(self)[0];
                    const Tensor& pv = t.value(probs);
                    Tensor& gp = t.grad_mut(probs);
                    const double inv = 1.0 / static_cast<double>(rows);
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double p = pv[r * n + labels[r]];
                        if (p > kLogClamp) gp[r * n + labels[r]] -= g * inv / p;
                    }
                });
}

Var Tape::add(Var a, Var b) {
    check_shape(value(a).same_shape(value(b)), "add");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += value(b)[i];
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {a.idx, b.idx}, needs_grad(std::array{a, b}),
                [a, b, self](Tape& t) {
                    const Tensor& g = t.grad(self);
                    if (t.rg(a)) {
                        Tensor& ga = t.grad_mut(a);
                        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
                    }
                    if (t.rg(b)) {
                        Tensor& gb = t.grad_mut(b);
                        for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i];
                    }
                });
}

Var Tape::sub(Var a, Var b) {
    check_shape(value(a).same_shape(value(b)), "sub");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= value(b)[i];
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {a.idx, b.idx}, needs_grad(std::array{a, b}),
                [a, b, self](Tape& t) {
                    const Tensor& g = t.grad(self);
                    if (t.rg(a)) {
                        Tensor& ga = t.grad_mut(a);
                        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
                    }
                    if (t.rg(b)) {
                        Tensor& gb = t.grad_mut(b);
                        for (std::size_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
                    }
                });
}

Var Tape::mul(Var a, Var b) {
    check_shape(value(a).same_shape(value(b)), "mul");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= value(b)[i];
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {a.idx, b.idx}, needs_grad(std::array{a, b}),
                [a, b, self](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& av = t.value(a);
                    const Tensor& bv = t.value(b);
                    if (t.rg(a)) {
                        Tensor& ga = t.grad_mut(a);
                        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
                    }
                    if (t.rg(b)) {
                        Tensor& gb = t.grad_mut(b);
                        for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
                    }
                });
}

Var Tape::scale(Var a, double c) {
    Tensor out = value(a);
    for (auto& v : out.data()) v *= c;
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {a.idx}, rg(a), [a, self, c](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += c * g[i];
    });
}

Var Tape::sum(Var a) {
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(Tensor::scalar(s), {a.idx}, rg(a), [a, self](Tape& t) {
        const double g = t.grad(self)[0];
        Tensor& ga = t.grad_mut(a);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    });
}

Var Tape::concat(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no parts");
    const bool batched = value(parts[0]).rank() == 2;
    const std::size_t rows = batched ? value(parts[0]).rows() : 1;
    std::size_t total = 0;
    std::vector<std::uint32_t> parents;
    std::vector<std::size_t> widths;
    for (Var p : parts) {
        const Tensor& v = value(p);
        check_shape((v.rank() == 2) == batched && (!batched || v.rows() == rows),
                    "concat parts");
        widths.push_back(v.cols());
        total += v.cols();
        parents.push_back(p.idx);
    }
    Tensor out = batched ? Tensor::zeros({rows, total}) : Tensor::zeros({total});
    {
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
            const Tensor& v = value(parts[pi]);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < widths[pi]; ++j)
                    out[r * total + off + j] = v[r * widths[pi] + j];
            off += widths[pi];
        }
    }
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    std::vector<Var> part_vec(parts.begin(), parts.end());
    return push(std::move(out), std::move(parents), needs_grad(parts),
                [self, rows, total, widths, part_vec = std::move(part_vec)](Tape& t) {
                    const Tensor& g = t.grad(self);
                    std::size_t off = 0;
                    for (std::size_t pi = 0; pi < part_vec.size(); ++pi) {
                        if (t.rg(part_vec[pi])) {
                            Tensor& gp = t.grad_mut(part_vec[pi]);
                            for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t j = 0; j < widths[pi]; ++j)
                                    gp[r * widths[pi] + j] += g[r * total + off + j];
                        }
                        off += widths[pi];
                    }
                });
}

Var Tape::col(Var m, std::size_t j) {
    const Tensor& mv = value(m);
    check_shape(mv.rank() == 2 && j < mv.cols(), "col");
    const std::size_t rows = mv.rows(), n = mv.cols();
    Tensor out({rows, 1});
    for (std::size_t r = 0; r < rows; ++r) out[r] = mv[r * n + j];
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {m.idx}, rg(m), [m, self, j, rows, n](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gm = t.grad_mut(m);
        for (std::size_t r = 0; r < rows; ++r) gm[r * n + j] += g[r];
    });
}

Var Tape::slice_matrix(Var src, std::size_t offset, std::size_t rows, std::size_t cols) {
    const Tensor& sv = value(src);
    check_shape(offset + rows * cols <= sv.numel(), "slice_matrix");
    Tensor out({rows, cols});
    for (std::size_t i = 0; i < rows * cols; ++i) out[i] = sv[offset + i];
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {src.idx}, rg(src),
                [src, self, offset, n = rows * cols](Tape& t) {
                    const Tensor& g = t.grad(self);
                    Tensor& gs = t.grad_mut(src);
                    for (std::size_t i = 0; i < n; ++i) gs[offset + i] += g[i];
                });
}

Var Tape::slice_vector(Var src, std::size_t offset, std::size_t len) {
    const Tensor& sv = value(src);
    check_shape(offset + len <= sv.numel(), "slice_vector");
    Tensor out({len});
    for (std::size_t i = 0; i < len; ++i) out[i] = sv[offset + i];
    Var self{static_cast<std::uint32_t>(nodes_.size())};
    return push(std::move(out), {src.idx}, rg(src), [src, self, offset, len](Tape& t) {
        const Tensor& g = t.grad(self);
        Tensor& gs = t.grad_mut(src);
        for (std::size_t i = 0; i < len; ++i) gs[offset + i] += g[i];
    });
}

void Tape::backward(Var loss) {
    if (value(loss).numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    for (auto& node : nodes_) node.reached = false;
    nodes_[loss.idx].grad = Tensor::full(value(loss).shape(), 1.0);
    nodes_[loss.idx].reached = true;
    for (std::uint32_t i = loss.idx + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.reached || !node.requires_grad) continue;
        for (std::uint32_t p : node.parents)
            if (nodes_[p].requires_grad) nodes_[p].reached = true;
        if (node.backprop) node.backprop(*this);
    }
}

}  // namespace hyperrx
