#include "gdr/store.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gdr/error.hpp"

namespace gdr {

namespace {

constexpr char kMagic[4] = {'G', 'D', 'R', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

float read_f32(std::istream& is) {
  std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

Tensor& ParameterStore::add(const std::string& name, Tensor t) {
  if (index_.count(name)) {
    throw std::invalid_argument("ParameterStore: duplicate name '" + name + "'");
  }
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParameterStore: missing '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParameterStore: missing '" + name + "'");
  return entries_[it->second].second;
}

bool ParameterStore::contains(const std::string& name) const { return index_.count(name) != 0; }

bool ParameterStore::has_prefix(const std::string& prefix) const {
  for (const auto& [name, tensor] : entries_) {
    if (name.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

std::vector<std::pair<std::string, Tensor>> ParameterStore::trainable() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const auto& e : entries_) {
    if (e.second.requires_grad) out.push_back(e);
  }
  return out;
}

void ParameterStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  write_u32(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, tensor] : entries_) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(tensor.shape.size()));
    for (std::size_t d : tensor.shape) write_u32(os, static_cast<std::uint32_t>(d));
    for (double v : *tensor.data) write_f32(os, static_cast<float>(v));
  }
  if (!os) throw DataError("checkpoint: write to '" + path + "' failed");
}

ParameterStore ParameterStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: '" + path + "' is not a GDR1 file");
  }
  ParameterStore store;
  const std::uint32_t count = read_u32(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw DataError("checkpoint: truncated name");
    const std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = read_u32(is);
    const std::size_t n = shape_product(shape);
    std::vector<double> values(n);
    for (std::size_t j = 0; j < n; ++j) values[j] = static_cast<double>(read_f32(is));
    store.add(name, Tensor::from_values(std::move(shape), std::move(values)));
  }
  return store;
}

Tensor& ParameterStore::init_weight(const std::string& name, std::size_t fan_in,
                                    std::size_t fan_out, Rng& rng) {
  Tensor t({fan_in, fan_out}, true);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : *t.data) v = rng.uniform(-bound, bound);
  return add(name, std::move(t));
}

Tensor& ParameterStore::init_zeros(const std::string& name, std::vector<std::size_t> shape) {
  return add(name, Tensor(std::move(shape), true));
}

Tensor& ParameterStore::init_ones(const std::string& name, std::vector<std::size_t> shape) {
  Tensor t(std::move(shape), true);
  for (double& v : *t.data) v = 1.0;
  return add(name, std::move(t));
}

void put_meta(ParameterStore& store, const std::string& name, double value) {
  store.add(name, Tensor::from_values({1}, {value}));
}

double get_meta(const ParameterStore& store, const std::string& name) {
  const Tensor& t = store.get(name);
  if (t.size() != 1) throw DataError("checkpoint: meta entry '" + name + "' is not scalar");
  return (*t.data)[0];
}

}  // namespace gdr
