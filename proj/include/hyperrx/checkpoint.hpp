#pragma once

#include <filesystem>
#include <map>

#include "hyperrx/adaptation.hpp"
#include "hyperrx/deepsic.hpp"

namespace hyperrx {

// Binary checkpoints: a small header (magic, format version, kind, N,
// K_max, layer sizes) followed by flat double arrays in the declared
// module/hypernetwork layout.

void save_joint_checkpoint(const std::filesystem::path& path,
                           const std::map<int, ReceiverParams>& weights, int n_antennas,
                           int k_max);

std::map<int, ReceiverParams> load_joint_checkpoint(const std::filesystem::path& path,
                                                    int* n_antennas = nullptr,
                                                    int* k_max = nullptr);

void save_hyper_checkpoint(const std::filesystem::path& path, const HypernetParams& hp);

HypernetParams load_hyper_checkpoint(const std::filesystem::path& path);

}  // namespace hyperrx
