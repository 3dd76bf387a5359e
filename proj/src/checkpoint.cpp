#include "tsbench/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "tsbench/errors.hpp"

namespace tsbench {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'B', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u64(os, ckpt.meta.size());
  os.write(ckpt.meta.data(), static_cast<std::streamsize>(ckpt.meta.size()));
  write_u64(os, ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, t.shape().size());
    for (auto d : t.shape()) write_u64(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.vec().size() * sizeof(double)));
  }
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint checkpoint_from_params(const ParamList& params, std::string meta) {
  Checkpoint ckpt;
  ckpt.meta = std::move(meta);
  for (const auto& [name, t] : params.items)
    ckpt.tensors.emplace_back(name, Tensor::from_data(t.shape(), t.vec()));
  return ckpt;
}

void restore_params(ParamList& params, const Checkpoint& ckpt) {
  for (auto& [name, t] : params.items) {
    const Tensor* src = ckpt.find(name);
    if (!src) throw UsageError("checkpoint: missing tensor '" + name + "'");
    if (src->shape() != t.shape())
      throw ShapeError("checkpoint: shape mismatch for '" + name + "'");
    t.vec() = src->vec();
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  Checkpoint ckpt;
  const std::uint64_t meta_len = read_u64(is);
  ckpt.meta.resize(meta_len);
  is.read(ckpt.meta.data(), static_cast<std::streamsize>(meta_len));
  const std::uint64_t count = read_u64(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(read_u64(is), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    Shape shape(read_u64(is));
    for (auto& d : shape) d = static_cast<std::int64_t>(read_u64(is));
    Tensor t = Tensor::zeros(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.vec().size() * sizeof(double)));
    if (!is) throw IoError("checkpoint: truncated file: " + path);
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

}  // namespace tsbench
