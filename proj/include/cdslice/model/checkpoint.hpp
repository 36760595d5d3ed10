#pragma once

#include <filesystem>
#include <vector>

#include "cdslice/model/params.hpp"

namespace cdslice::model {

// Checkpoint layout (little-endian):
//   "CDPM0001"
//   config block: u64 slices, u64 max_points, u8 pool_padding,
//     u8 normalization, u8 overflow, u32 n + n * u64 pointnet channels,
//     u64 hidden, u64 lstm_layers, u8 two_biases, u32 n + n * u64 head
//     widths, f64 lstm_dropout, f64 head_dropout, u64 init_seed
//   u32 section count, then per section: u32 name length + name bytes,
//     u64 element count, count * float32.
// Values are always stored as float32.

template <class T>
std::vector<char> serialize_params(const ModelParams<T>& params);

template <class T>
void save_params(const ModelParams<T>& params, const std::filesystem::path& path);

/// Throws FormatError (with byte offset) on any corruption or truncation.
template <class T>
ModelParams<T> load_params(const std::filesystem::path& path);

/// As above, and throws ConfigMismatchError naming both configurations
/// when the checkpoint's architecture differs from `expected`.
template <class T>
ModelParams<T> load_params(const std::filesystem::path& path, const ModelConfig& expected);

/// Reads only the configuration block.
ModelConfig load_checkpoint_config(const std::filesystem::path& path);

}  // namespace cdslice::model
