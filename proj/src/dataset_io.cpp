#include "fiberlab/dataset_io.hpp"

#include <array>
#include <fstream>

#include "fiberlab/binio.hpp"

namespace fiberlab {

namespace {
constexpr std::array<char, 8> kMagic = {'F', 'L', 'W', 'D', 'S', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_dataset(const std::string& path, const WindowedDataset& d, std::uint64_t key) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
  os.write(kMagic.data(), kMagic.size());
  binio::put_u32(os, kVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(d.half_width));
  binio::put_u32(os, static_cast<std::uint32_t>(d.sps));
  binio::put_u32(os, 0);
  binio::put_u64(os, key);
  binio::put_u64(os, d.size());
  binio::put_u64(os, d.input_size());
  for (double v : d.inputs) binio::put_f64(os, v);
  for (double v : d.targets) binio::put_f64(os, v);
  for (auto v : d.symbol_index) binio::put_u64(os, v);
  if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

WindowedDataset load_dataset(const std::string& path, std::uint64_t expected_key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("load_dataset: bad magic in " + path);
  if (binio::get_u32(is) != kVersion) throw std::runtime_error("load_dataset: unsupported version in " + path);
  WindowedDataset d;
  d.half_width = static_cast<int>(binio::get_u32(is));
  d.sps = static_cast<int>(binio::get_u32(is));
  binio::get_u32(is);
  const std::uint64_t key = binio::get_u64(is);
  if (expected_key != 0 && key != expected_key) {
    throw StaleCache("load_dataset: cache key mismatch in " + path);
  }
  const std::uint64_t count = binio::get_u64(is);
  const std::uint64_t in_size = binio::get_u64(is);
  if (in_size != d.input_size()) throw std::runtime_error("load_dataset: input size inconsistent with M");
  d.inputs.resize(count * in_size);
  d.targets.resize(count * 4);
  d.symbol_index.resize(count);
  for (auto& v : d.inputs) v = binio::get_f64(is);
  for (auto& v : d.targets) v = binio::get_f64(is);
  for (auto& v : d.symbol_index) v = binio::get_u64(is);
  return d;
}

}  // namespace fiberlab
