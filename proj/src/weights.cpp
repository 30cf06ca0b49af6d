#include "presstyle/weights.hpp"

#include <fstream>

#include "presstyle/binio.hpp"

namespace ptn {

namespace {
constexpr char kMagic[4] = {'P', 'T', 'N', 'W'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) {
    throw IoError("duplicate parameter name: " + name);
  }
  index_[name] = values_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
  return values_.back();
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw IoError("unknown parameter: " + name);
  return values_[it->second];
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IoError("unknown parameter: " + name);
  return values_[it->second];
}

std::vector<Tensor*> ParamStore::pointers() {
  std::vector<Tensor*> out;
  out.reserve(values_.size());
  for (auto& t : values_) out.push_back(&t);
  return out;
}

void save_weights(const ParamStore& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(kMagic, 4);
  binio::write_u16(os, kVersion);
  binio::write_u32(os, static_cast<std::uint32_t>(params.count()));
  for (std::size_t i = 0; i < params.count(); ++i) {
    binio::write_str(os, params.names()[i], /*u32_len=*/true);
    const Tensor& t = params.tensor(i);
    binio::write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) {
      binio::write_u32(os, static_cast<std::uint32_t>(t.dim(d)));
    }
    for (std::size_t j = 0; j < t.size(); ++j) {
      binio::write_f32(os, static_cast<float>(t[j]));
    }
  }
  if (!os) throw IoError("write failed: " + path);
}

ParamStore load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw IoError("bad magic in weight file: " + path);
  }
  std::uint16_t version;
  if (!binio::read_u16(is, &version) || version != kVersion) {
    throw IoError("unsupported weight file version in " + path);
  }
  std::uint32_t count;
  if (!binio::read_u32(is, &count)) throw IoError("truncated weight file: " + path);
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    if (!binio::read_str(is, &name, /*u32_len=*/true)) {
      throw IoError("truncated weight file: " + path);
    }
    std::uint32_t rank;
    if (!binio::read_u32(is, &rank) || rank > 4) {
      throw IoError("bad parameter rank in " + path);
    }
    std::vector<int> shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      std::uint32_t dim;
      if (!binio::read_u32(is, &dim)) throw IoError("truncated weight file: " + path);
      shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    std::vector<double> data(n);
    for (std::size_t j = 0; j < n; ++j) {
      float v;
      if (!binio::read_f32(is, &v)) throw IoError("truncated weight file: " + path);
      data[j] = static_cast<double>(v);
    }
    store.add(name, Tensor(std::move(shape), std::move(data)));
  }
  return store;
}

}  // namespace ptn
