// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.
//
//   ./acceptance            run everything
//   ./acceptance 3          run a single criterion
//
// Criteria 5-7 share one desk-scale experiment (offline training plus a
// T-block comparison of all three adaptation methods), so they run as a
// group when any of them is selected.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "hyperrx/checkpoint.hpp"
#include "hyperrx/harness.hpp"

using namespace hyperrx;

namespace {

struct Outcome {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<Outcome> g_outcomes;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    g_outcomes.push_back({id, name, pass, detail});
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// ---- criterion 1: parameter-count identities -----------------------------

void criterion_1() {
    bool pass = true;
    std::string detail;
    Rng rng(1);
    for (auto [n, k] : {std::pair{12, 8}, std::pair{20, 14}, std::pair{4, 2}}) {
        const ModuleParams m = ModuleParams::init(n, k, rng);
        const int expect = 16 * (n + k + 1) + 18;
        if (param_count(n, k) != expect ||
            m.scalar_count() != static_cast<std::size_t>(expect)) {
            pass = false;
            detail = fmt("module count mismatch at N=%d K=%d", n, k);
        }
    }
    for (auto [n, k_max] : {std::pair{12, 12}, std::pair{8, 6}, std::pair{4, 3}}) {
        const HypernetParams hp = HypernetParams::init(n, k_max, rng);
        const std::size_t expect = 64u * static_cast<std::size_t>(n * k_max + 1) + 32u * 65u +
                                   33u * static_cast<std::size_t>(16 * (n + k_max + 1) + 18) +
                                   2u * static_cast<std::size_t>(n);
        if (hp.scalar_count() != expect) {
            pass = false;
            detail = fmt("hypernet count mismatch at N=%d K_max=%d", n, k_max);
        }
    }
    if (pass)
        detail = fmt("module counts 354/578/130 exact, hypernet count exact (e.g. %zu at N=K_max=12)",
                     [] { Rng r(2); return HypernetParams::init(12, 12, r).scalar_count(); }());
    report(1, "parameter-count identities", pass, detail);
}

// ---- criterion 2: complexity ratio over a 100-block run ------------------

void criterion_2() {
    ExperimentConfig cfg;
    cfg.n_antennas = 12;
    cfg.k_max = 12;
    cfg.schedule.kind = UserSchedule::Kind::Fixed;
    cfg.schedule.fixed_k = 8;
    cfg.blocks = 100;
    cfg.b_pilot = 800;
    cfg.b_info = 15200;
    cfg.snr.kind = SnrProfileConfig::Kind::Constant;
    cfg.snr.base_snr_db = 10.0;
    cfg.seed = 2024;
    cfg.complexity.alpha_t = 100.0;
    cfg.complexity.alpha_i = 1.0;
    // unit accounting is analytic per block; scale the actual numeric work
    // down so the run takes minutes, not hours
    cfg.training.online_iterations = 1;
    cfg.max_detect_symbols = 200;

    MethodWeights weights;
    Rng rng(7);
    weights.hyper = HypernetParams::init(cfg.n_antennas, cfg.k_max, rng);

    const RunResult online = run_experiment(cfg, Method::Online, weights);
    const RunResult hyper = run_experiment(cfg, Method::Hyper, weights);

    const double measured = complexity_ratio(hyper.ledger, online.ledger);
    const auto theta = static_cast<std::size_t>(param_count(12, 8));
    const std::size_t phi = weights.hyper->dnn_scalar_count();
    const double closed = closed_form_ratio(100.0, 1.0, theta, phi, 800, 15200, 12, 1.0);
    const double rel = std::abs(measured - closed) / closed;

    const bool pass = rel < 0.05 && measured < 0.2;
    report(2, "complexity ratio < 0.2 and within 5% of the closed form", pass,
           fmt("measured %.6f, closed form %.6f, rel diff %.3f%%, |theta|=%zu |phi|=%zu",
               measured, closed, rel * 100.0, theta, phi));
}

// ---- criterion 3: gradient correctness ------------------------------------

bool module_kink_free(const ReceiverParams& params, const Tensor& y, int q, double margin) {
    // preactivations of every module at every round must stay away from 0
    const int k = params.users();
    SoftEstimates est = sic_forward(params, y, q);
    for (int qi = 1; qi <= q; ++qi) {
        for (int u = 0; u < k; ++u) {
            const ModuleParams& m = params.modules[static_cast<std::size_t>(u)];
            for (std::size_t r = 0; r < y.rows(); ++r) {
                for (int j = 0; j < kModuleHidden; ++j) {
                    double pre = m.b1[static_cast<std::size_t>(j)];
                    std::size_t col = 0;
                    for (std::size_t c = 0; c < y.cols(); ++c)
                        pre += y.at(r, c) * m.w1.at(col++, static_cast<std::size_t>(j));
                    for (int l = 0; l < k; ++l) {
                        if (l == u) continue;
                        pre += est.probs[static_cast<std::size_t>(qi - 1)]
                                   [static_cast<std::size_t>(l)].at(r, 0) *
                               m.w1.at(col++, static_cast<std::size_t>(j));
                    }
                    if (std::abs(pre) < margin) return false;
                }
            }
        }
    }
    return true;
}

void criterion_3() {
    const int n = 4, k_max = 3, q = 2;
    double worst_a = 0.0, worst_b = 0.0;
    int done_a = 0, done_b = 0;
    Rng rng(33);

    // (a) standalone module: d loss / d(module weights)
    for (std::uint64_t inst = 0; done_a < 20 && inst < 2000; ++inst) {
        Rng local = rng.derive(0xa, inst);
        const int k_users = local.uniform_int(2, k_max);
        ReceiverParams params = ReceiverParams::init(n, k_users, local);
        Tensor y({4, static_cast<std::size_t>(n)});
        for (auto& v : y.data()) v = local.uniform(-2.0, 2.0);
        if (!module_kink_free(params, y, 1, 1e-3)) continue;
        std::vector<int> labels(4);
        for (auto& l : labels) l = local.uniform_int(0, 1);

        Tensor interf({4, static_cast<std::size_t>(k_users - 1)});
        for (auto& v : interf.data()) v = local.uniform(0.05, 0.95);

        auto eval = [&](std::span<const double> flat) {
            const ModuleParams m = ModuleParams::unflatten(flat, n, k_users);
            const Tensor probs = module_forward(m, y, interf);
            double loss = 0.0;
            for (std::size_t r = 0; r < 4; ++r)
                loss -= std::log(std::max(probs.at(r, static_cast<std::size_t>(labels[r])),
                                          1e-12));
            return loss / 4.0;
        };
        const auto fd = finite_difference(eval, params.modules[0].flatten());

        Tape tape;
        const ModuleVars mv = module_leaves(tape, params.modules[0]);
        std::vector<Var> parts{tape.constant(y), tape.constant(interf)};
        const Var input = tape.concat(parts);
        const Var probs = module_forward_graph(tape, mv, input);
        const Var loss = tape.cross_entropy(probs, labels);
        tape.backward(loss);
        std::vector<double> ad;
        for (const Var v : {mv.w1, mv.b1, mv.w2, mv.b2})
            ad.insert(ad.end(), tape.grad(v).data().begin(), tape.grad(v).data().end());
        worst_a = std::max(worst_a, max_rel_error(ad, fd));
        ++done_a;
    }

    // (b) full composition: d loss / d(hypernet weights, e_self, e_pad)
    for (std::uint64_t inst = 0; done_b < 20 && inst < 2000; ++inst) {
        Rng local = rng.derive(0xb, inst);
        const int k_users = local.uniform_int(2, k_max);
        HypernetParams hp = HypernetParams::init(n, k_max, local);
        // moderate generator weights so module preactivations are generic
        for (auto& v : hp.w3.data()) v = local.uniform(-0.05, 0.05);
        for (auto& v : hp.b3.data()) v = local.uniform(-0.05, 0.05);
        Tensor h_hat({static_cast<std::size_t>(k_users), static_cast<std::size_t>(n)});
        for (auto& v : h_hat.data()) v = local.uniform(-1.0, 1.0);
        Tensor y({3, static_cast<std::size_t>(n)});
        for (auto& v : y.data()) v = local.uniform(-2.0, 2.0);
        std::vector<int> labels(3);
        for (auto& l : labels) l = local.uniform_int(0, 1);

        auto receiver_for = [&](const HypernetParams& p) {
            ReceiverParams receiver;
            for (int k = 0; k < k_users; ++k) {
                const auto u =
                    build_user_embedding(h_hat, k, k_max, p.e_self.data(), p.e_pad.data());
                receiver.modules.push_back(hypernet_forward(p, u, k_users));
            }
            return receiver;
        };
        // skip instances near any relu kink (hypernet hidden layers checked
        // via a tiny perturbation of the forward value; module kinks below)
        if (!module_kink_free(receiver_for(hp), y, q, 2e-3)) continue;
        bool hyper_kink = false;
        for (int k = 0; k < k_users && !hyper_kink; ++k) {
            const auto u = build_user_embedding(h_hat, k, k_max, hp.e_self.data(),
                                                hp.e_pad.data());
            std::vector<double> h1(hp.b1.data().begin(), hp.b1.data().end());
            for (std::size_t i = 0; i < u.size(); ++i)
                for (std::size_t j = 0; j < 64; ++j) h1[j] += u[i] * hp.w1.at(i, j);
            for (double v : h1)
                if (std::abs(v) < 2e-3) hyper_kink = true;
            std::vector<double> h2(hp.b2.data().begin(), hp.b2.data().end());
            for (std::size_t i = 0; i < 64; ++i) {
                const double a = std::max(h1[i], 0.0);
                for (std::size_t j = 0; j < 32; ++j) h2[j] += a * hp.w2.at(i, j);
            }
            for (double v : h2)
                if (std::abs(v) < 2e-3) hyper_kink = true;
        }
        if (hyper_kink) continue;

        auto pack = [&](const HypernetParams& p) {
            std::vector<double> flat;
            for (const Tensor* t :
                 {&p.w1, &p.b1, &p.w2, &p.b2, &p.w3, &p.b3, &p.e_self, &p.e_pad})
                flat.insert(flat.end(), t->data().begin(), t->data().end());
            return flat;
        };
        auto eval = [&](std::span<const double> flat) {
            HypernetParams p = hp;
            std::size_t off = 0;
            for (Tensor* t : {&p.w1, &p.b1, &p.w2, &p.b2, &p.w3, &p.b3, &p.e_self, &p.e_pad}) {
                std::copy(flat.begin() + off, flat.begin() + off + t->numel(),
                          t->data().begin());
                off += t->numel();
            }
            const SoftEstimates est = sic_forward(receiver_for(p), y, q);
            double loss = 0.0;
            for (int k = 0; k < k_users; ++k)
                for (std::size_t r = 0; r < 3; ++r)
                    loss -= std::log(std::max(
                        est.final_round()[static_cast<std::size_t>(k)].at(
                            r, static_cast<std::size_t>(labels[r])),
                        1e-12));
            return loss / 3.0;
        };
        const auto fd = finite_difference(eval, pack(hp));

        Tape tape;
        const HypernetVars hv = hypernet_leaves(tape, hp);
        std::vector<ModuleVars> mvs;
        for (int k = 0; k < k_users; ++k) {
            const Var u = user_embedding_graph(tape, hv, h_hat, k, k_users, k_max, n);
            mvs.push_back(module_slices(tape, hypernet_forward_graph(tape, hv, u), n, k_users));
        }
        const auto rounds = sic_forward_graph(tape, mvs, tape.constant(y), q);
        Var loss = tape.cross_entropy(rounds.back()[0], labels);
        for (int k = 1; k < k_users; ++k)
            loss = tape.add(loss,
                            tape.cross_entropy(rounds.back()[static_cast<std::size_t>(k)], labels));
        tape.backward(loss);
        std::vector<double> ad;
        for (const Var v : {hv.w1, hv.b1, hv.w2, hv.b2, hv.w3, hv.b3, hv.e_self, hv.e_pad})
            ad.insert(ad.end(), tape.grad(v).data().begin(), tape.grad(v).data().end());
        worst_b = std::max(worst_b, max_rel_error(ad, fd));
        ++done_b;
    }

    const bool pass = done_a == 20 && done_b == 20 && worst_a < 1e-4 && worst_b < 1e-4;
    report(3, "autodiff matches finite differences", pass,
           fmt("module path max rel err %.2e (%d instances), composition path %.2e (%d instances)",
               worst_a, done_a, worst_b, done_b));
}

// ---- criterion 4: LS recovery ---------------------------------------------

void criterion_4() {
    const Constellation c = Constellation::bpsk();
    const int n = 8, k = 4, b_pilot = 4 * k;
    double worst = 0.0;
    bool pass = true;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng sym(seed * 2 + 1);
        Rng noise(seed * 2 + 2);
        std::vector<double> snr(static_cast<std::size_t>(k));
        Rng snr_rng(seed + 5000);
        for (auto& v : snr) v = snr_rng.uniform(0.5, 4.0);
        const Tensor h = synthetic_channel(n, k, snr);
        Tensor pilots;
        while (true) {
            pilots = generate_symbols(sym, b_pilot, k, c);
            try {
                ls_estimate(pilots, Tensor({static_cast<std::size_t>(b_pilot),
                                            static_cast<std::size_t>(n)}));
                break;
            } catch (const singular_pilot_error&) {
                continue;  // regenerate, as the contract allows
            }
        }
        const Tensor y = transmit(h, pilots, 0.0, noise);
        const Tensor h_hat = ls_estimate(pilots, y);
        double acc = 0.0;
        for (int r = 0; r < k; ++r)
            for (int cc = 0; cc < n; ++cc) {
                const double d = h_hat.at(static_cast<std::size_t>(r), static_cast<std::size_t>(cc)) -
                                 h.at(static_cast<std::size_t>(cc), static_cast<std::size_t>(r));
                acc += d * d;
            }
        const double err = std::sqrt(acc);
        worst = std::max(worst, err);
        if (err >= 1e-8) pass = false;
    }
    report(4, "noiseless LS recovery", pass,
           fmt("worst Frobenius error %.3e over 100 seeds (limit 1e-8)", worst));
}

// ---- criteria 5-7: desk-scale experiment ----------------------------------

ExperimentConfig desk_config() {
    ExperimentConfig cfg;
    cfg.n_antennas = 8;
    cfg.k_max = 6;
    cfg.schedule.kind = UserSchedule::Kind::RandomSet;
    cfg.schedule.values = {3, 4, 5, 6};
    cfg.schedule.hold_blocks = 3;  // users join/leave in runs, not en masse
    cfg.schedule.shuffle = true;   // every K appears once per cycle
    cfg.blocks = 20;
    cfg.b_pilot = 200;
    cfg.b_info = 2000;
    cfg.snr.kind = SnrProfileConfig::Kind::Sinusoid;
    cfg.snr.base_snr_db = 10.0;
    cfg.snr.amplitude_db = 8.0;
    cfg.snr.period_blocks = 7;
    cfg.snr.phase_offset = 1.7;
    cfg.seed = 20240801;
    cfg.snr.seed = cfg.seed;
    cfg.q_iterations = 3;
    cfg.training.symbols_per_k = 20000;
    cfg.training.joint_iterations = 100;
    cfg.training.online_iterations = 100;
    cfg.training.hyper_iterations = 25;
    cfg.training.hyper_block_samples = 800;
    cfg.training.batch_size = 512;
    // many distinct channel realizations from the same symbol budget
    cfg.training.data_b_info = 100;
    // offline data: mostly broad draws from the channel family, one fifth
    // replaying the deployment profile under fresh noise
    cfg.training.has_data_snr = true;
    cfg.training.data_snr.kind = SnrProfileConfig::Kind::RandomWalk;
    cfg.training.data_snr.base_snr_db = 10.0;
    cfg.training.data_snr.amplitude_db = 8.0;
    cfg.training.data_snr.period_blocks = 1;
    cfg.training.data_snr.seed = cfg.seed;
    cfg.training.data_replay_fraction = 0.2;
    return cfg;
}

void criteria_5_to_7() {
    const ExperimentConfig cfg = desk_config();
    std::printf("  [desk-scale experiment: generating data, training joint + hypernetwork...]\n");
    std::fflush(stdout);

    const auto t0 = std::chrono::steady_clock::now();
    const Dataset data = build_training_data(cfg);
    MethodWeights weights;
    weights.joint = run_joint_training(cfg, data);
    weights.hyper = run_hyper_training(cfg, data);
    const double train_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("  [training done in %.1f s; simulating %d blocks per method...]\n", train_s,
                cfg.blocks);
    std::fflush(stdout);

    const RunResult joint = run_experiment(cfg, Method::Joint, weights);
    const RunResult online = run_experiment(cfg, Method::Online, weights);
    const RunResult hyper = run_experiment(cfg, Method::Hyper, weights);

    // criterion 5: SER ordering
    const double sj = joint.aggregate_ser, so = online.aggregate_ser, sh = hyper.aggregate_ser;
    const bool a = sh <= sj;
    const bool b = so <= sj;
    const bool c = sj < 0.4 && so < 0.4 && sh < 0.4;
    const bool d = sh <= 2.0 * so;
    report(5, "desk-scale SER ordering", a && b && c && d,
           fmt("SER joint %.4f, online %.4f, hyper %.4f | hyper<=joint:%s online<=joint:%s "
               "all<0.4:%s hyper<=2x online:%s",
               sj, so, sh, a ? "yes" : "NO", b ? "yes" : "NO", c ? "yes" : "NO",
               d ? "yes" : "NO"));

    // criterion 6: per-block adaptation+detection wall-time ratio
    const double mean_online = online.adapt_detect_wall_ms / cfg.blocks;
    const double mean_hyper = hyper.adapt_detect_wall_ms / cfg.blocks;
    const double speedup = mean_online / std::max(mean_hyper, 1e-9);
    report(6, "hypernetwork adaptation is at least 10x faster than online", speedup >= 10.0,
           fmt("mean per-block wall: online %.1f ms, hyper %.2f ms, speedup %.1fx", mean_online,
               mean_hyper, speedup));

    // criterion 7: one hypernetwork serves every K with zero training units,
    // while joint needs K_max-1 stored parameter sets
    bool elastic = hyper.ledger.training_units() == 0.0;
    bool saw_all = true;
    std::vector<bool> seen(static_cast<std::size_t>(cfg.k_max) + 1, false);
    for (const auto& blk : hyper.blocks) {
        if (blk.modules_used != blk.k_users) elastic = false;
        seen[static_cast<std::size_t>(blk.k_users)] = true;
    }
    for (int k = 3; k <= 6; ++k)
        if (!seen[static_cast<std::size_t>(k)]) saw_all = false;
    const bool joint_full = weights.joint.size() == static_cast<std::size_t>(cfg.k_max - 1);
    report(7, "varying-K elasticity", elastic && saw_all && joint_full,
           fmt("hyper train units %.0f, modules track K[t]:%s, K coverage 3..6:%s, joint stores "
               "%zu parameter sets (K_max-1=%d)",
               hyper.ledger.training_units(), elastic ? "yes" : "NO", saw_all ? "yes" : "NO",
               weights.joint.size(), cfg.k_max - 1));
}

// ---- criterion 8: determinism & invariants --------------------------------

void criterion_8() {
    bool pass = true;
    std::string fail_what;
    auto expect = [&](bool ok, const char* what) {
        if (!ok && pass) {
            pass = false;
            fail_what = what;
        }
    };

    const Constellation c = Constellation::bpsk();
    Rng rng(88);

    // probability normalization across rounds
    for (int trial = 0; trial < 10; ++trial) {
        const int k = rng.uniform_int(1, 4);
        const ReceiverParams params = ReceiverParams::init(6, k, rng);
        Tensor y({8, 6});
        for (auto& v : y.data()) v = rng.uniform(-3.0, 3.0);
        const SoftEstimates est = sic_forward(params, y, 3);
        for (const auto& round : est.probs)
            for (const Tensor& p : round)
                for (std::size_t r = 0; r < p.rows(); ++r) {
                    expect(p.at(r, 0) >= 0.0 && p.at(r, 1) >= 0.0, "probability nonneg");
                    expect(std::abs(p.at(r, 0) + p.at(r, 1) - 1.0) < 1e-9,
                           "probability normalization");
                }
    }

    // factorized argmax equals brute-force joint argmax for K <= 4
    for (int k = 2; k <= 4; ++k) {
        const ReceiverParams params = ReceiverParams::init(5, k, rng);
        Tensor y({16, 5});
        for (auto& v : y.data()) v = rng.uniform(-3.0, 3.0);
        const SoftEstimates est = sic_forward(params, y, 2);
        const Tensor fast = detect(est.final_round(), c);
        for (std::size_t r = 0; r < 16; ++r) {
            double best = -1.0;
            int best_mask = 0;
            for (int mask = 0; mask < (1 << k); ++mask) {
                double prob = 1.0;
                for (int u = 0; u < k; ++u)
                    prob *= est.final_round()[static_cast<std::size_t>(u)].at(
                        r, static_cast<std::size_t>((mask >> u) & 1));
                if (prob > best + 1e-15) {
                    best = prob;
                    best_mask = mask;
                }
            }
            for (int u = 0; u < k; ++u)
                expect(fast.at(r, static_cast<std::size_t>(u)) ==
                           c.points[static_cast<std::size_t>((best_mask >> u) & 1)],
                       "factorized argmax");
        }
    }

    // embedding length invariance
    for (int k_users = 1; k_users <= 5; ++k_users) {
        Tensor h_hat({static_cast<std::size_t>(k_users), 6});
        for (auto& v : h_hat.data()) v = rng.uniform(-1.0, 1.0);
        const std::vector<double> e_self(6, 0.3), e_pad(6, -0.3);
        for (int u = 0; u < k_users; ++u)
            expect(build_user_embedding(h_hat, u, 5, e_self, e_pad).size() == 30,
                   "embedding length invariance");
    }

    // hypernet_adapt purity: trainables bit-identical before and after
    {
        Rng hr(13);
        const HypernetParams hp = HypernetParams::init(6, 4, hr);
        const HypernetParams snap = hp;
        LinkConfig link;
        link.n_antennas = 6;
        link.k_max = 4;
        link.b_pilot = 32;
        link.b_info = 16;
        link.snr.base_snr_db = 10.0;
        const TransmissionBlock blk = make_block(1, 3, link, Rng(77));
        (void)hypernet_adapt(hp, blk);
        const std::vector<std::array<const Tensor*, 2>> pairs{
            {&snap.w1, &hp.w1},       {&snap.w2, &hp.w2},   {&snap.w3, &hp.w3},
            {&snap.e_self, &hp.e_self}, {&snap.e_pad, &hp.e_pad}};
        for (const auto& pair : pairs)
            for (std::size_t i = 0; i < pair[0]->numel(); ++i)
                expect((*pair[0])[i] == (*pair[1])[i], "hypernet_adapt purity");
    }

    // noiseless channel linearity
    {
        Rng nr(5);
        const std::vector<double> snr{2.0, 1.0, 0.5};
        const Tensor h = synthetic_channel(5, 3, snr);
        Rng sym(6);
        const Tensor s = generate_symbols(sym, 32, 3, c);
        const Tensor y = transmit(h, s, 0.0, nr);
        for (std::size_t i = 0; i < s.rows(); ++i)
            for (std::size_t a = 0; a < 5; ++a) {
                double clean = 0.0;
                for (std::size_t u = 0; u < 3; ++u) clean += h.at(a, u) * s.at(i, u);
                expect(y.at(i, a) == clean, "noiseless transmit linearity");
            }
    }

    // end-to-end determinism of block generation
    {
        LinkConfig link;
        link.n_antennas = 6;
        link.k_max = 4;
        link.b_pilot = 16;
        link.b_info = 24;
        link.snr.kind = SnrProfileConfig::Kind::Sinusoid;
        link.snr.amplitude_db = 3.0;
        link.snr.period_blocks = 5;
        const TransmissionBlock b1 = make_block(9, 4, link, Rng(4242));
        const TransmissionBlock b2 = make_block(9, 4, link, Rng(4242));
        for (std::size_t i = 0; i < b1.info_y.numel(); ++i)
            expect(b1.info_y[i] == b2.info_y[i], "seeded block determinism");
    }

    report(8, "determinism & invariants suite", pass,
           pass ? "all property checks hold" : ("first failure: " + fail_what));
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    const auto want = [&](int id) { return only == 0 || only == id; };
    if (want(1)) criterion_1();
    if (want(2)) criterion_2();
    if (want(3)) criterion_3();
    if (want(4)) criterion_4();
    if (want(5) || want(6) || want(7)) criteria_5_to_7();
    if (want(8)) criterion_8();

    int failed = 0;
    for (const auto& o : g_outcomes)
        if (!o.pass) ++failed;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_outcomes.size()) - failed,
                g_outcomes.size());
    return failed == 0 ? 0 : 1;
}
