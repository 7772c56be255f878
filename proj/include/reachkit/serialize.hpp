#pragma once

#include <filesystem>
#include <string>

#include "reachkit/babble.hpp"
#include "reachkit/codec.hpp"
#include "reachkit/neural_map.hpp"
#include "reachkit/planner.hpp"

namespace reachkit {

inline constexpr int kFormatVersion = 1;

// All artifacts are versioned JSON. Doubles survive a round trip bit-exactly
// (shortest-representation printing), so saving and reloading a model is
// lossless.

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

void save_codec(const Codec& codec, const std::filesystem::path& path);
Codec load_codec(const std::filesystem::path& path);

// Neuron centers and the reverse adjacency are not stored; both are
// reconstructed deterministically on load.
void save_map(const NeuralMap& map, const std::filesystem::path& path);
NeuralMap load_map(const std::filesystem::path& path);

void save_plan(const PlanResult& plan, const std::filesystem::path& path);
PlanResult load_plan(const std::filesystem::path& path);

// FNV-1a hash of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

} // namespace reachkit
