#pragma once

#include <cstdint>
#include <string>

#include "fiberlab/rx.hpp"

namespace fiberlab {

/// Binary cache of a WindowedDataset.
///
/// Layout, all integers and floats little-endian:
///   magic "FLWDSET\0" (8 bytes), u32 version, u32 M, u32 sps, u32 reserved,
///   u64 key, u64 count, u64 input_size,
///   f64 inputs[count * input_size], f64 targets[count * 4], u64 symbol_index[count]
/// `key` identifies the configuration that produced the data (0 if unkeyed).
void save_dataset(const std::string& path, const WindowedDataset& d, std::uint64_t key = 0);

/// Throws StaleCache when `expected_key` is non-zero and differs from the file key.
WindowedDataset load_dataset(const std::string& path, std::uint64_t expected_key = 0);

class StaleCache : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fiberlab
