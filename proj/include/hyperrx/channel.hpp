#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hyperrx/rng.hpp"
#include "hyperrx/tensor.hpp"

namespace hyperrx {

// Ordered symbol alphabet. Index 0 maps to +1 for BPSK.
struct Constellation {
    std::vector<double> points;
    int bits_per_symbol = 1;

    static Constellation bpsk() { return {{+1.0, -1.0}, 1}; }

    std::size_t size() const { return points.size(); }

    int index_of(double symbol) const;
};

// Block-varying per-user SNR trajectory. Deterministic in (config, t, k).
struct SnrProfileConfig {
    enum class Kind { Constant, Sinusoid, RandomWalk };
    Kind kind = Kind::Constant;
    double base_snr_db = 10.0;
    double amplitude_db = 0.0;
    int period_blocks = 1;
    // Per-user shift, in blocks, applied as t + k*phase_offset inside the
    // sinusoid so users peak at different times.
    double phase_offset = 1.0;
    std::uint64_t seed = 0;
};

double snr_profile_db(const SnrProfileConfig& cfg, int t, int k);
double snr_profile_linear(const SnrProfileConfig& cfg, int t, int k);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Channel state for one block: H is N×K, SNRs are linear scale.
struct ChannelRealization {
    int t = 0;
    Tensor h;
    std::vector<double> snr_linear;
    double noise_variance = 1.0;

    int antennas() const { return static_cast<int>(h.rows()); }
    int users() const { return static_cast<int>(h.cols()); }
};

// Pilot and information symbols with the matching channel outputs.
// Pilot rows precede info rows in time; both halves share one H.
struct TransmissionBlock {
    int t = 0;
    int k_users = 0;
    Tensor pilots_s;  // B_pilot × K
    Tensor pilots_y;  // B_pilot × N
    Tensor info_s;    // B_info × K
    Tensor info_y;    // B_info × N

    std::size_t b_pilot() const { return pilots_s.rows(); }
    std::size_t b_info() const { return info_s.rows(); }
};

// Spatial exponential power-decay channel: entry (n,k) is
// sqrt(snr_k) * exp(-|n-k|) with 1-indexed n,k.
Tensor synthetic_channel(int n_antennas, int k_users, std::span<const double> snr_linear);

// B×K matrix of i.i.d. uniform draws from the constellation.
Tensor generate_symbols(Rng& rng, int b, int k, const Constellation& c);

// Memoryless Gaussian MIMO channel: row i of the result is (H s_i)^T + w_i
// with per-entry noise variance as given.
Tensor transmit(const Tensor& h, const Tensor& s, double noise_variance, Rng& rng);

// Everything make_block needs to know about the link.
struct LinkConfig {
    int n_antennas = 12;
    int k_max = 12;
    int b_pilot = 800;
    int b_info = 15200;
    Constellation constellation = Constellation::bpsk();
    SnrProfileConfig snr;
    bool use_trace = false;
    std::string trace_path;
};

// One replayed channel matrix from a trace file.
struct TraceRecord {
    int t = 0;
    int k_users = 0;
    Tensor h;  // N × K
};

// Builds the channel realization for block t. Synthetic mode bakes the
// per-user SNR into H and keeps unit noise variance; trace mode replays H
// from the record and turns the SNR knob via the noise variance instead,
// using the profile evaluated at user 0 as the global value.
ChannelRealization make_channel(int t, int k_users, const LinkConfig& cfg,
                                const TraceRecord* trace = nullptr);

// Generates pilots and info symbols for block t and pushes both through the
// same channel realization. All randomness derives from (rng, t).
TransmissionBlock make_block(int t, int k_users, const LinkConfig& cfg, const Rng& master,
                             const TraceRecord* trace = nullptr);

// Trace file: per record a line "t K" followed by N lines of K reals.
// Validates row counts against n_antennas and K against k_max.
std::vector<TraceRecord> load_trace(const std::filesystem::path& path, int n_antennas,
                                    int k_max);
void write_trace(const std::filesystem::path& path, std::span<const TraceRecord> records);

}  // namespace hyperrx
