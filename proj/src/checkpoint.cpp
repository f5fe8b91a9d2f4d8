#include "hyperrx/checkpoint.hpp"

#include <fstream>

namespace hyperrx {

namespace {

constexpr std::uint32_t kMagic = 0x48525843;  // "HRXC"
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindJoint = 1;
constexpr std::uint32_t kKindHyper = 2;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_array(std::ofstream& out, const std::vector<double>& a) {
    write_u32(out, static_cast<std::uint32_t>(a.size()));
    out.write(reinterpret_cast<const char*>(a.data()),
              static_cast<std::streamsize>(a.size() * sizeof(double)));
}

std::vector<double> read_array(std::ifstream& in) {
    std::vector<double> a(read_u32(in));
    in.read(reinterpret_cast<char*>(a.data()),
            static_cast<std::streamsize>(a.size() * sizeof(double)));
    return a;
}

std::ifstream open_checkpoint(const std::filesystem::path& path, std::uint32_t expect_kind,
                              std::uint32_t* n, std::uint32_t* k_max) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    if (read_u32(in) != kMagic) throw std::runtime_error("not a checkpoint file: " + path.string());
    if (read_u32(in) != kVersion)
        throw std::runtime_error("unsupported checkpoint version: " + path.string());
    if (read_u32(in) != expect_kind)
        throw std::runtime_error("checkpoint has the wrong kind: " + path.string());
    *n = read_u32(in);
    *k_max = read_u32(in);
    return in;
}

}  // namespace

void save_joint_checkpoint(const std::filesystem::path& path,
                           const std::map<int, ReceiverParams>& weights, int n_antennas,
                           int k_max) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    write_u32(out, kMagic);
    write_u32(out, kVersion);
    write_u32(out, kKindJoint);
    write_u32(out, static_cast<std::uint32_t>(n_antennas));
    write_u32(out, static_cast<std::uint32_t>(k_max));
    write_u32(out, kModuleHidden);
    write_u32(out, kSymbolClasses);
    write_u32(out, static_cast<std::uint32_t>(weights.size()));
    for (const auto& [k, params] : weights) {
        write_u32(out, static_cast<std::uint32_t>(k));
        write_u32(out, static_cast<std::uint32_t>(params.modules.size()));
        for (const auto& m : params.modules) write_array(out, m.flatten());
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::map<int, ReceiverParams> load_joint_checkpoint(const std::filesystem::path& path,
                                                    int* n_antennas, int* k_max) {
    std::uint32_t n = 0, kmax = 0;
    std::ifstream in = open_checkpoint(path, kKindJoint, &n, &kmax);
    if (read_u32(in) != kModuleHidden || read_u32(in) != kSymbolClasses)
        throw std::runtime_error("checkpoint layer sizes do not match: " + path.string());
    std::map<int, ReceiverParams> weights;
    const std::uint32_t entries = read_u32(in);
    for (std::uint32_t e = 0; e < entries; ++e) {
        const int k = static_cast<int>(read_u32(in));
        const std::uint32_t modules = read_u32(in);
        ReceiverParams params;
        params.modules.reserve(modules);
        for (std::uint32_t m = 0; m < modules; ++m) {
            const auto flat = read_array(in);
            params.modules.push_back(ModuleParams::unflatten(flat, static_cast<int>(n), k));
        }
        weights.emplace(k, std::move(params));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    if (n_antennas != nullptr) *n_antennas = static_cast<int>(n);
    if (k_max != nullptr) *k_max = static_cast<int>(kmax);
    return weights;
}

void save_hyper_checkpoint(const std::filesystem::path& path, const HypernetParams& hp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    write_u32(out, kMagic);
    write_u32(out, kVersion);
    write_u32(out, kKindHyper);
    write_u32(out, static_cast<std::uint32_t>(hp.n_antennas));
    write_u32(out, static_cast<std::uint32_t>(hp.k_max));
    // layer sizes, for format self-description
    write_u32(out, static_cast<std::uint32_t>(hp.embedding_dim()));
    write_u32(out, 64);
    write_u32(out, 32);
    write_u32(out, static_cast<std::uint32_t>(hp.output_dim()));
    for (const Tensor* t : {&hp.w1, &hp.b1, &hp.w2, &hp.b2, &hp.w3, &hp.b3, &hp.e_self, &hp.e_pad})
        write_array(out, t->data());
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

HypernetParams load_hyper_checkpoint(const std::filesystem::path& path) {
    std::uint32_t n = 0, kmax = 0;
    std::ifstream in = open_checkpoint(path, kKindHyper, &n, &kmax);
    const std::uint32_t in_dim = read_u32(in);
    const std::uint32_t h1 = read_u32(in);
    const std::uint32_t h2 = read_u32(in);
    const std::uint32_t out_dim = read_u32(in);
    Rng rng(0);
    HypernetParams hp = HypernetParams::init(static_cast<int>(n), static_cast<int>(kmax), rng);
    if (in_dim != static_cast<std::uint32_t>(hp.embedding_dim()) || h1 != 64 || h2 != 32 ||
        out_dim != static_cast<std::uint32_t>(hp.output_dim()))
        throw std::runtime_error("checkpoint layer sizes do not match: " + path.string());
    for (Tensor* t : {&hp.w1, &hp.b1, &hp.w2, &hp.b2, &hp.w3, &hp.b3, &hp.e_self, &hp.e_pad}) {
        const auto flat = read_array(in);
        if (flat.size() != t->numel())
            throw std::runtime_error("checkpoint array size mismatch: " + path.string());
        std::copy(flat.begin(), flat.end(), t->data().begin());
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    return hp;
}

}  // namespace hyperrx
