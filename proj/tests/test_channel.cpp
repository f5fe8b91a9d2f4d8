#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hyperrx/channel.hpp"

using namespace hyperrx;

namespace {

LinkConfig test_link(int n = 4, int k_max = 3) {
    LinkConfig link;
    link.n_antennas = n;
    link.k_max = k_max;
    link.b_pilot = 32;
    link.b_info = 64;
    link.snr.kind = SnrProfileConfig::Kind::Constant;
    link.snr.base_snr_db = 10.0;
    return link;
}

}  // namespace

TEST_CASE("synthetic channel matches the exponential-decay formula") {
    const std::vector<double> snr{1.0, 4.0};
    const Tensor h = synthetic_channel(2, 2, snr);
    CHECK(h.at(0, 0) == doctest::Approx(1.0));
    CHECK(h.at(0, 1) == doctest::Approx(2.0 * std::exp(-1.0)));  // 0.7357588823
    CHECK(h.at(1, 0) == doctest::Approx(std::exp(-1.0)));        // 0.3678794412
    CHECK(h.at(1, 1) == doctest::Approx(2.0));

    // diagonal entries are sqrt(snr_k)
    const std::vector<double> unit{1.0, 1.0, 1.0};
    const Tensor h3 = synthetic_channel(5, 3, unit);
    for (int k = 0; k < 3; ++k) CHECK(h3.at(k, k) == doctest::Approx(1.0));

    // snr 0.25 halves the column relative to snr 1
    const std::vector<double> quarter{0.25, 1.0};
    const Tensor hq = synthetic_channel(3, 2, quarter);
    const std::vector<double> ones{1.0, 1.0};
    const Tensor h1 = synthetic_channel(3, 2, ones);
    for (int n = 0; n < 3; ++n) CHECK(hq.at(n, 0) == doctest::Approx(0.5 * h1.at(n, 0)));

    CHECK_THROWS_AS(synthetic_channel(2, 3, std::vector<double>{1, 1, 1}),
                    std::invalid_argument);
}

TEST_CASE("synthetic channel column norms are monotone in snr") {
    auto col_norm = [](const Tensor& h, int k) {
        double acc = 0.0;
        for (std::size_t n = 0; n < h.rows(); ++n) acc += h.at(n, k) * h.at(n, k);
        return std::sqrt(acc);
    };
    double prev = 0.0;
    for (double snr : {0.5, 1.0, 2.0, 8.0}) {
        const std::vector<double> s{snr, 1.0};
        const double norm = col_norm(synthetic_channel(4, 2, s), 0);
        CHECK(norm > prev);
        prev = norm;
    }
}

TEST_CASE("snr profile kinds") {
    SnrProfileConfig cfg;
    cfg.kind = SnrProfileConfig::Kind::Constant;
    cfg.base_snr_db = 12.0;
    for (int t : {1, 5, 50})
        CHECK(snr_profile_linear(cfg, t, 0) == doctest::Approx(15.848931924611133));

    cfg.kind = SnrProfileConfig::Kind::Sinusoid;
    cfg.amplitude_db = 0.0;
    cfg.period_blocks = 10;
    for (int t : {1, 3, 9})
        CHECK(snr_profile_db(cfg, t, 2) == doctest::Approx(12.0));

    cfg.amplitude_db = 4.0;
    double lo = 1e9, hi = -1e9;
    for (int t = 1; t <= 10; ++t) {
        const double v = snr_profile_db(cfg, t, 0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        CHECK(v >= 12.0 - 4.0 - 1e-9);
        CHECK(v <= 12.0 + 4.0 + 1e-9);
    }
    CHECK(hi - lo > 4.0);  // actually varies

    // per-user phase offsets separate the trajectories
    cfg.phase_offset = 2.0;
    CHECK(snr_profile_db(cfg, 3, 0) != snr_profile_db(cfg, 3, 1));

    cfg.kind = SnrProfileConfig::Kind::RandomWalk;
    cfg.seed = 99;
    const double a = snr_profile_db(cfg, 7, 1);
    CHECK(a == snr_profile_db(cfg, 7, 1));  // deterministic
    CHECK(std::abs(a - 12.0) <= 4.0 + 1e-9);
}

TEST_CASE("symbol generation is uniform and reproducible") {
    const Constellation c = Constellation::bpsk();
    Rng rng(42);
    const int b = 40000;
    const Tensor s = generate_symbols(rng, b, 2, c);
    double mean = 0.0;
    for (std::size_t i = 0; i < s.numel(); ++i) {
        CHECK((s[i] == 1.0 || s[i] == -1.0));
        mean += s[i];
    }
    mean /= static_cast<double>(s.numel());
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(s.numel())));

    Rng rng_a(7), rng_b(7);
    const Tensor sa = generate_symbols(rng_a, 16, 3, c);
    const Tensor sb = generate_symbols(rng_b, 16, 3, c);
    for (std::size_t i = 0; i < sa.numel(); ++i) CHECK(sa[i] == sb[i]);

    Rng rng_c(1);
    const Tensor col = generate_symbols(rng_c, 8, 1, c);
    CHECK(col.shape() == std::vector<std::size_t>{8, 1});

    CHECK_THROWS_AS(generate_symbols(rng_c, 0, 2, c), std::invalid_argument);
}

TEST_CASE("noiseless transmit is exactly linear") {
    Rng rng(3);
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor s({1, 2}, {1, -1});
    const Tensor y = transmit(eye, s, 0.0, rng);
    CHECK(y.at(0, 0) == 1.0);
    CHECK(y.at(0, 1) == -1.0);

    const std::vector<double> snr{2.0, 0.5, 1.0};
    const Tensor h = synthetic_channel(4, 3, snr);
    const Constellation c = Constellation::bpsk();
    Rng sym_rng(5);
    const Tensor sym = generate_symbols(sym_rng, 10, 3, c);
    const Tensor clean = transmit(h, sym, 0.0, rng);
    for (std::size_t i = 0; i < clean.rows(); ++i)
        for (std::size_t a = 0; a < 4; ++a) {
            double expect = 0.0;
            for (std::size_t u = 0; u < 3; ++u) expect += h.at(a, u) * sym.at(i, u);
            CHECK(clean.at(i, a) == expect);
        }
}

TEST_CASE("transmit noise variance is calibrated") {
    Rng noise_rng(11);
    const Tensor h({2, 2}, {1, 0, 0, 1});
    Rng sym_rng(13);
    const Tensor s = generate_symbols(sym_rng, 10000, 2, Constellation::bpsk());
    const Tensor y = transmit(h, s, 1.0, noise_rng);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t a = 0; a < 2; ++a) {
            const double w = y.at(i, a) - s.at(i, a);
            acc += w * w;
            ++count;
        }
    const double sample_var = acc / static_cast<double>(count);
    CHECK(sample_var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("transmit rejects mismatched shapes") {
    Rng rng(1);
    const Tensor h({3, 2});
    const Tensor s({4, 3});
    CHECK_THROWS_AS(transmit(h, s, 0.0, rng), std::invalid_argument);
    const Tensor ok({4, 2});
    CHECK_THROWS_AS(transmit(h, ok, -1.0, rng), std::invalid_argument);
}

TEST_CASE("make_block structure and determinism") {
    const LinkConfig link = test_link();
    const Rng master(2024);
    const TransmissionBlock blk = make_block(3, 2, link, master);
    CHECK(blk.t == 3);
    CHECK(blk.k_users == 2);
    CHECK(blk.pilots_s.shape() == std::vector<std::size_t>{32, 2});
    CHECK(blk.pilots_y.shape() == std::vector<std::size_t>{32, 4});
    CHECK(blk.info_s.shape() == std::vector<std::size_t>{64, 2});
    CHECK(blk.info_y.shape() == std::vector<std::size_t>{64, 4});

    const TransmissionBlock again = make_block(3, 2, link, Rng(2024));
    for (std::size_t i = 0; i < blk.info_y.numel(); ++i)
        CHECK(blk.info_y[i] == again.info_y[i]);

    const TransmissionBlock single = make_block(1, 1, link, master);
    CHECK(single.pilots_s.cols() == 1);

    // different block index, different realization
    const TransmissionBlock other = make_block(4, 2, link, master);
    bool any_diff = false;
    for (std::size_t i = 0; i < blk.pilots_s.numel() && !any_diff; ++i)
        any_diff = blk.pilots_s[i] != other.pilots_s[i];
    CHECK(any_diff);
}

TEST_CASE("both block halves share one channel matrix") {
    // noiseless: info rows must be exact linear images under the same H
    LinkConfig link = test_link();
    link.snr.kind = SnrProfileConfig::Kind::Sinusoid;
    link.snr.amplitude_db = 3.0;
    link.snr.period_blocks = 5;
    const TransmissionBlock blk = make_block(2, 3, link, Rng(9));

    std::vector<double> snr(3);
    for (int k = 0; k < 3; ++k) snr[k] = snr_profile_linear(link.snr, 2, k);
    const Tensor h = synthetic_channel(4, 3, snr);
    auto check_half = [&](const Tensor& s, const Tensor& y) {
        for (std::size_t i = 0; i < s.rows(); ++i)
            for (std::size_t a = 0; a < 4; ++a) {
                double clean = 0.0;
                for (std::size_t u = 0; u < 3; ++u) clean += h.at(a, u) * s.at(i, u);
                // unit noise variance: deviations stay within a generous bound
                CHECK(std::abs(y.at(i, a) - clean) < 6.0);
            }
    };
    check_half(blk.pilots_s, blk.pilots_y);
    check_half(blk.info_s, blk.info_y);
}

TEST_CASE("trace round trip and validation") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "hyperrx_trace_test.txt";

    std::vector<TraceRecord> records;
    Rng rng(77);
    for (int t = 1; t <= 3; ++t) {
        TraceRecord rec;
        rec.t = t;
        rec.k_users = t == 2 ? 1 : 2;
        rec.h = Tensor({3, static_cast<std::size_t>(rec.k_users)});
        for (auto& v : rec.h.data()) v = rng.uniform(-2.0, 2.0);
        records.push_back(std::move(rec));
    }
    write_trace(path, records);
    const auto loaded = load_trace(path, 3, 2);
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded[i].t == records[i].t);
        CHECK(loaded[i].k_users == records[i].k_users);
        REQUIRE(loaded[i].h.numel() == records[i].h.numel());
        for (std::size_t j = 0; j < records[i].h.numel(); ++j)
            CHECK(loaded[i].h[j] == records[i].h[j]);  // bit-exact
    }

    // empty file -> empty sequence
    const fs::path empty = fs::temp_directory_path() / "hyperrx_trace_empty.txt";
    std::ofstream(empty).close();
    CHECK(load_trace(empty, 3, 2).empty());

    // K = N+1 violates N >= K
    const fs::path bad = fs::temp_directory_path() / "hyperrx_trace_bad.txt";
    {
        std::ofstream out(bad);
        out << "1 4\n";
        for (int r = 0; r < 3; ++r) out << "0 0 0 0\n";
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(load_trace(bad, 3, 4)),
                         doctest::Contains("line 1"), std::runtime_error);
    // K above k_max is rejected too
    CHECK_THROWS_AS(static_cast<void>(load_trace(bad, 5, 3)), std::runtime_error);

    fs::remove(path);
    fs::remove(empty);
    fs::remove(bad);
}

TEST_CASE("trace blocks turn the snr knob via noise variance") {
    LinkConfig link = test_link();
    link.use_trace = true;
    link.snr.base_snr_db = 20.0;  // low noise
    TraceRecord rec;
    rec.t = 1;
    rec.k_users = 2;
    rec.h = Tensor({4, 2}, {1, 0, 0, 1, 0.5, 0.2, 0.1, 0.3});
    const ChannelRealization ch = make_channel(1, 2, link, &rec);
    CHECK(ch.noise_variance == doctest::Approx(0.01));
    for (std::size_t i = 0; i < rec.h.numel(); ++i) CHECK(ch.h[i] == rec.h[i]);
}
