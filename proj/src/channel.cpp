#include "hyperrx/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hyperrx {

int Constellation::index_of(double symbol) const {
    int best = 0;
    double best_d = std::abs(points[0] - symbol);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double d = std::abs(points[i] - symbol);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

double snr_profile_db(const SnrProfileConfig& cfg, int t, int k) {
    switch (cfg.kind) {
        case SnrProfileConfig::Kind::Constant:
            return cfg.base_snr_db;
        case SnrProfileConfig::Kind::Sinusoid: {
            const double phase =
                2.0 * M_PI * (static_cast<double>(t) + k * cfg.phase_offset) /
                static_cast<double>(cfg.period_blocks);
            return cfg.base_snr_db + cfg.amplitude_db * std::sin(phase);
        }
        case SnrProfileConfig::Kind::RandomWalk: {
            // Stateless walk: re-derive the increment stream for user k and
            // accumulate up to t, reflecting at +/- amplitude. O(t) per call,
            // trivially cheap at simulation block counts. period_blocks sets
            // the mixing time: roughly how many blocks the walk needs to
            // traverse the amplitude range.
            Rng rng = Rng(cfg.seed).derive(rng_stream::kProfile, static_cast<std::uint64_t>(k));
            const double step =
                cfg.amplitude_db / std::sqrt(static_cast<double>(cfg.period_blocks));
            double offset = 0.0;
            for (int tau = 1; tau <= t; ++tau) {
                offset += step * rng.gaussian();
                if (offset > cfg.amplitude_db) offset = 2.0 * cfg.amplitude_db - offset;
                if (offset < -cfg.amplitude_db) offset = -2.0 * cfg.amplitude_db - offset;
            }
            return cfg.base_snr_db + offset;
        }
    }
    return cfg.base_snr_db;
}

double snr_profile_linear(const SnrProfileConfig& cfg, int t, int k) {
    return db_to_linear(snr_profile_db(cfg, t, k));
}

Tensor synthetic_channel(int n_antennas, int k_users, std::span<const double> snr_linear) {
    if (k_users < 1 || n_antennas < k_users)
        throw std::invalid_argument("synthetic_channel: requires N >= K >= 1");
    if (snr_linear.size() != static_cast<std::size_t>(k_users))
        throw std::invalid_argument("synthetic_channel: one SNR per user expected");
    Tensor h({static_cast<std::size_t>(n_antennas), static_cast<std::size_t>(k_users)});
    for (int n = 1; n <= n_antennas; ++n)
        for (int k = 1; k <= k_users; ++k)
            h.at(n - 1, k - 1) = std::sqrt(snr_linear[k - 1]) * std::exp(-std::abs(n - k));
    return h;
}

Tensor generate_symbols(Rng& rng, int b, int k, const Constellation& c) {
    if (b < 1 || k < 1) throw std::invalid_argument("generate_symbols: B, K >= 1");
    Tensor s({static_cast<std::size_t>(b), static_cast<std::size_t>(k)});
    for (std::size_t i = 0; i < s.numel(); ++i)
        s[i] = c.points[static_cast<std::size_t>(rng.next_u64() % c.points.size())];
    return s;
}

Tensor transmit(const Tensor& h, const Tensor& s, double noise_variance, Rng& rng) {
    if (h.rank() != 2 || s.rank() != 2 || s.cols() != h.cols())
        throw std::invalid_argument("transmit: H is N x K and s is B x K");
    if (noise_variance < 0.0)
        throw std::invalid_argument("transmit: negative noise variance");
    const std::size_t b = s.rows(), k = s.cols(), n = h.rows();
    const double sigma = std::sqrt(noise_variance);
    Tensor y({b, n});
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t a = 0; a < n; ++a) {
            double acc = 0.0;
            for (std::size_t u = 0; u < k; ++u) acc += h.at(a, u) * s.at(i, u);
            y.at(i, a) = acc + (sigma > 0.0 ? sigma * rng.gaussian() : 0.0);
        }
    }
    return y;
}

ChannelRealization make_channel(int t, int k_users, const LinkConfig& cfg,
                                const TraceRecord* trace) {
    if (k_users < 1 || k_users > cfg.k_max || cfg.k_max > cfg.n_antennas)
        throw std::invalid_argument("make_channel: requires 1 <= K <= K_max <= N");
    ChannelRealization ch;
    ch.t = t;
    ch.snr_linear.resize(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
        ch.snr_linear[static_cast<std::size_t>(k)] = snr_profile_linear(cfg.snr, t, k);
    if (trace != nullptr) {
        if (trace->k_users != k_users)
            throw std::invalid_argument("make_channel: trace K does not match schedule");
        ch.h = trace->h;
        ch.noise_variance = 1.0 / snr_profile_linear(cfg.snr, t, 0);
    } else {
        ch.h = synthetic_channel(cfg.n_antennas, k_users, ch.snr_linear);
        ch.noise_variance = 1.0;
    }
    return ch;
}

TransmissionBlock make_block(int t, int k_users, const LinkConfig& cfg, const Rng& master,
                             const TraceRecord* trace) {
    const ChannelRealization ch = make_channel(t, k_users, cfg, trace);
    const auto tt = static_cast<std::uint64_t>(t);
    Rng pilot_sym = master.derive(rng_stream::kPilotSymbols, tt);
    Rng info_sym = master.derive(rng_stream::kInfoSymbols, tt);
    Rng pilot_noise = master.derive(rng_stream::kPilotNoise, tt);
    Rng info_noise = master.derive(rng_stream::kInfoNoise, tt);

    TransmissionBlock blk;
    blk.t = t;
    blk.k_users = k_users;
    blk.pilots_s = generate_symbols(pilot_sym, cfg.b_pilot, k_users, cfg.constellation);
    blk.info_s = generate_symbols(info_sym, cfg.b_info, k_users, cfg.constellation);
    blk.pilots_y = transmit(ch.h, blk.pilots_s, ch.noise_variance, pilot_noise);
    blk.info_y = transmit(ch.h, blk.info_s, ch.noise_variance, info_noise);
    return blk;
}

namespace {

[[noreturn]] void trace_error(std::size_t line_no, const std::string& what) {
    throw std::runtime_error("trace parse error at line " + std::to_string(line_no) + ": " +
                             what);
}

}  // namespace

std::vector<TraceRecord> load_trace(const std::filesystem::path& path, int n_antennas,
                                    int k_max) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
    std::vector<TraceRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream header(line);
        TraceRecord rec;
        if (!(header >> rec.t >> rec.k_users))
            trace_error(line_no, "expected record header 't K'");
        if (rec.k_users < 1 || rec.k_users > k_max)
            trace_error(line_no, "K out of range 1..K_max");
        if (rec.k_users > n_antennas) trace_error(line_no, "K exceeds antenna count");
        rec.h = Tensor({static_cast<std::size_t>(n_antennas),
                        static_cast<std::size_t>(rec.k_users)});
        for (int r = 0; r < n_antennas; ++r) {
            if (!std::getline(in, line)) trace_error(line_no, "truncated channel matrix");
            ++line_no;
            std::istringstream row(line);
            for (int c = 0; c < rec.k_users; ++c) {
                double v;
                if (!(row >> v)) trace_error(line_no, "malformed matrix row");
                rec.h.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = v;
            }
            double extra;
            if (row >> extra) trace_error(line_no, "row has more than K entries");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_trace(const std::filesystem::path& path, std::span<const TraceRecord> records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path.string());
    char buf[64];
    for (const TraceRecord& rec : records) {
        out << rec.t << ' ' << rec.k_users << '\n';
        for (std::size_t r = 0; r < rec.h.rows(); ++r) {
            for (std::size_t c = 0; c < rec.h.cols(); ++c) {
                // %.17g round-trips doubles exactly
                std::snprintf(buf, sizeof(buf), "%.17g", rec.h.at(r, c));
                out << (c ? " " : "") << buf;
            }
            out << '\n';
        }
    }
}

}  // namespace hyperrx
