#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "fiberlab/nn/model.hpp"

namespace fiberlab::nn {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout: magic "FLCKPT\0\0", u32 version, u32 layer count, then per layer
/// its kind and parameter manifest (name, rows, cols), then all values as
/// little-endian f64 in manifest order.
void save_checkpoint(std::ostream& os, Model& model);
void save_checkpoint(const std::string& path, Model& model);

/// Loads into an already-built model; the manifest must match exactly.
void load_checkpoint(std::istream& is, Model& model);
void load_checkpoint(const std::string& path, Model& model);

}  // namespace fiberlab::nn
