#include "fiberlab/nn/checkpoint.hpp"

#include <array>
#include <fstream>

#include "fiberlab/binio.hpp"

namespace fiberlab::nn {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'L', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_string(std::ostream& os, const std::string& s) {
  binio::put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const std::uint32_t n = binio::get_u32(is);
  if (n > 4096) throw CheckpointError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw CheckpointError("checkpoint: truncated manifest");
  return s;
}

}  // namespace

void save_checkpoint(std::ostream& os, Model& model) {
  os.write(kMagic.data(), kMagic.size());
  binio::put_u32(os, kVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(model.size()));
  for (std::size_t i = 0; i < model.size(); ++i) {
    Layer& l = model.layer(i);
    put_string(os, l.kind());
    const auto ps = l.params();
    binio::put_u32(os, static_cast<std::uint32_t>(ps.size()));
    for (const Param* p : ps) {
      put_string(os, p->name);
      binio::put_u64(os, p->rows);
      binio::put_u64(os, p->cols);
    }
  }
  for (const Param* p : model.params()) {
    for (double v : p->value) binio::put_f64(os, v);
  }
}

void save_checkpoint(const std::string& path, Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path);
  save_checkpoint(os, model);
  if (!os) throw CheckpointError("checkpoint: write failed for " + path);
}

void load_checkpoint(std::istream& is, Model& model) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw CheckpointError("checkpoint: bad magic");
  if (binio::get_u32(is) != kVersion) throw CheckpointError("checkpoint: unsupported version");
  if (binio::get_u32(is) != model.size()) throw CheckpointError("checkpoint: layer count differs from model");
  for (std::size_t i = 0; i < model.size(); ++i) {
    Layer& l = model.layer(i);
    const std::string where = "layer " + std::to_string(i);
    if (get_string(is) != l.kind()) throw CheckpointError("checkpoint: " + where + " kind differs");
    const auto ps = l.params();
    if (binio::get_u32(is) != ps.size()) throw CheckpointError("checkpoint: " + where + " parameter count differs");
    for (const Param* p : ps) {
      const std::string name = get_string(is);
      const std::uint64_t rows = binio::get_u64(is);
      const std::uint64_t cols = binio::get_u64(is);
      if (name != p->name || rows != p->rows || cols != p->cols) {
        throw CheckpointError("checkpoint: " + where + " parameter " + p->name + " shape differs");
      }
    }
  }
  for (Param* p : model.params()) {
    for (double& v : p->value) v = binio::get_f64(is);
  }
}

void load_checkpoint(const std::string& path, Model& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path);
  load_checkpoint(is, model);
}

}  // namespace fiberlab::nn
