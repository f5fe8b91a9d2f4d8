#include "hyperrx/deepsic.hpp"

#include <cmath>

namespace hyperrx {

int param_count(int n_antennas, int k_users) {
    return 16 * (n_antennas + k_users + 1) + 18;
}

ModuleParams ModuleParams::zeros(int n_antennas, int k_users) {
    const auto in = static_cast<std::size_t>(n_antennas + k_users - 1);
    ModuleParams m;
    m.w1 = Tensor::zeros({in, kModuleHidden});
    m.b1 = Tensor::zeros({kModuleHidden});
    m.w2 = Tensor::zeros({kModuleHidden, kSymbolClasses});
    m.b2 = Tensor::zeros({kSymbolClasses});
    return m;
}

ModuleParams ModuleParams::init(int n_antennas, int k_users, Rng& rng) {
    ModuleParams m = zeros(n_antennas, k_users);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(m.w1.rows()));
    for (auto& v : m.w1.data()) v = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(kModuleHidden));
    for (auto& v : m.w2.data()) v = rng.uniform(-bound2, bound2);
    return m;
}

std::size_t ModuleParams::scalar_count() const {
    return w1.numel() + b1.numel() + w2.numel() + b2.numel();
}

std::vector<double> ModuleParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(scalar_count());
    for (const Tensor* t : {&w1, &b1, &w2, &b2})
        flat.insert(flat.end(), t->data().begin(), t->data().end());
    return flat;
}

ModuleParams ModuleParams::unflatten(std::span<const double> flat, int n_antennas,
                                     int k_users) {
    ModuleParams m = zeros(n_antennas, k_users);
    if (flat.size() < m.scalar_count())
        throw std::invalid_argument("ModuleParams::unflatten: flat vector too short");
    std::size_t off = 0;
    for (Tensor* t : {&m.w1, &m.b1, &m.w2, &m.b2}) {
        std::copy(flat.begin() + off, flat.begin() + off + t->numel(), t->data().begin());
        off += t->numel();
    }
    return m;
}

ReceiverParams ReceiverParams::init(int n_antennas, int k_users, Rng& rng) {
    ReceiverParams p;
    p.modules.reserve(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k) p.modules.push_back(ModuleParams::init(n_antennas, k_users, rng));
    return p;
}

Tensor module_forward(const ModuleParams& m, const Tensor& y, const Tensor& interferer_probs) {
    const std::size_t b = y.rows();
    const std::size_t in_width = m.w1.rows();
    if (y.cols() + interferer_probs.cols() != in_width || interferer_probs.rows() != b)
        throw std::invalid_argument("module_forward: input width mismatch");
    const std::size_t ny = y.cols();

    Tensor probs({b, static_cast<std::size_t>(kSymbolClasses)});
    std::vector<double> hidden(kModuleHidden);
    for (std::size_t r = 0; r < b; ++r) {
        for (int j = 0; j < kModuleHidden; ++j) hidden[j] = m.b1[j];
        for (std::size_t i = 0; i < in_width; ++i) {
            const double x = i < ny ? y.at(r, i) : interferer_probs.at(r, i - ny);
            if (x == 0.0) continue;
            const double* wrow = m.w1.data().data() + i * kModuleHidden;
            for (int j = 0; j < kModuleHidden; ++j) hidden[j] += x * wrow[j];
        }
        double logits[kSymbolClasses];
        for (int c = 0; c < kSymbolClasses; ++c) logits[c] = m.b2[c];
        for (int j = 0; j < kModuleHidden; ++j) {
            const double h = hidden[j] > 0.0 ? hidden[j] : 0.0;
            if (h == 0.0) continue;
            for (int c = 0; c < kSymbolClasses; ++c) logits[c] += h * m.w2.at(j, c);
        }
        double mx = logits[0];
        for (int c = 1; c < kSymbolClasses; ++c) mx = std::max(mx, logits[c]);
        double s = 0.0;
        for (int c = 0; c < kSymbolClasses; ++c) {
            logits[c] = std::exp(logits[c] - mx);
            s += logits[c];
        }
        for (int c = 0; c < kSymbolClasses; ++c) probs.at(r, c) = logits[c] / s;
    }
    return probs;
}

SoftEstimates sic_forward(const ReceiverParams& params, const Tensor& y, int q_iterations) {
    if (q_iterations < 1) throw std::invalid_argument("sic_forward: Q >= 1");
    const int k_users = params.users();
    const std::size_t b = y.rows();

    SoftEstimates est;
    est.probs.resize(static_cast<std::size_t>(q_iterations) + 1);
    est.probs[0].assign(static_cast<std::size_t>(k_users),
                        Tensor::full({b, static_cast<std::size_t>(kSymbolClasses)}, 0.5));

    Tensor interf({b, static_cast<std::size_t>(k_users - 1)});
    for (int q = 1; q <= q_iterations; ++q) {
        const auto& prev = est.probs[static_cast<std::size_t>(q - 1)];
        auto& cur = est.probs[static_cast<std::size_t>(q)];
        cur.reserve(static_cast<std::size_t>(k_users));
        for (int k = 0; k < k_users; ++k) {
            // prob-of-+1 of every other user, ascending order
            for (std::size_t r = 0; r < b; ++r) {
                std::size_t c = 0;
                for (int l = 0; l < k_users; ++l) {
                    if (l == k) continue;
                    interf.at(r, c++) = prev[static_cast<std::size_t>(l)].at(r, 0);
                }
            }
            cur.push_back(module_forward(params.modules[static_cast<std::size_t>(k)], y, interf));
        }
    }
    return est;
}

Tensor detect(const std::vector<Tensor>& final_probs, const Constellation& c) {
    const std::size_t k_users = final_probs.size();
    if (k_users == 0) throw std::invalid_argument("detect: no user distributions");
    const std::size_t b = final_probs[0].rows();
    Tensor symbols({b, k_users});
    for (std::size_t k = 0; k < k_users; ++k) {
        const Tensor& p = final_probs[k];
        for (std::size_t r = 0; r < b; ++r) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < c.size(); ++j)
                if (p.at(r, j) > p.at(r, best)) best = j;  // tie keeps lower index
            symbols.at(r, k) = c.points[best];
        }
    }
    return symbols;
}

ModuleVars module_leaves(Tape& tape, const ModuleParams& m) {
    return {tape.leaf(m.w1), tape.leaf(m.b1), tape.leaf(m.w2), tape.leaf(m.b2)};
}

ModuleVars module_slices(Tape& tape, Var flat, int n_antennas, int k_users) {
    const auto in = static_cast<std::size_t>(n_antennas + k_users - 1);
    std::size_t off = 0;
    ModuleVars v;
    v.w1 = tape.slice_matrix(flat, off, in, kModuleHidden);
    off += in * kModuleHidden;
    v.b1 = tape.slice_vector(flat, off, kModuleHidden);
    off += kModuleHidden;
    v.w2 = tape.slice_matrix(flat, off, kModuleHidden, kSymbolClasses);
    off += static_cast<std::size_t>(kModuleHidden) * kSymbolClasses;
    v.b2 = tape.slice_vector(flat, off, kSymbolClasses);
    return v;
}

Var module_forward_graph(Tape& tape, const ModuleVars& m, Var input) {
    Var h = tape.relu(tape.affine(input, m.w1, m.b1));
    return tape.softmax(tape.affine(h, m.w2, m.b2));
}

std::vector<std::vector<Var>> sic_forward_graph(Tape& tape,
                                                const std::vector<ModuleVars>& modules,
                                                Var y_const, int q_iterations) {
    if (q_iterations < 1) throw std::invalid_argument("sic_forward_graph: Q >= 1");
    const int k_users = static_cast<int>(modules.size());
    const std::size_t b = tape.value(y_const).rows();

    std::vector<std::vector<Var>> rounds;
    rounds.resize(static_cast<std::size_t>(q_iterations) + 1);
    const Var prior = tape.constant(Tensor::full({b, static_cast<std::size_t>(kSymbolClasses)}, 0.5));
    rounds[0].assign(static_cast<std::size_t>(k_users), prior);

    for (int q = 1; q <= q_iterations; ++q) {
        const auto& prev = rounds[static_cast<std::size_t>(q - 1)];
        auto& cur = rounds[static_cast<std::size_t>(q)];
        for (int k = 0; k < k_users; ++k) {
            std::vector<Var> parts;
            parts.reserve(static_cast<std::size_t>(k_users));
            parts.push_back(y_const);
            for (int l = 0; l < k_users; ++l)
                if (l != k) parts.push_back(tape.col(prev[static_cast<std::size_t>(l)], 0));
            const Var input = parts.size() == 1 ? y_const : tape.concat(parts);
            cur.push_back(module_forward_graph(tape, modules[static_cast<std::size_t>(k)], input));
        }
    }
    return rounds;
}

}  // namespace hyperrx
