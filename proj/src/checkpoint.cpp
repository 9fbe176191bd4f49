#include "ssf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ssf/bitstream.hpp"

namespace ssf {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'F', 'C'};
constexpr uint8_t kVersion = 1;

void put_f64(std::vector<uint8_t>& b, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  for (int i = 0; i < 8; ++i) b.push_back((uint8_t)(u >> (8 * i)));
}

double get_f64(ByteReader& r) {
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= (uint64_t)r.u8() << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void put_string(std::vector<uint8_t>& b, const std::string& s) {
  put_u32(b, (uint32_t)s.size());
  b.insert(b.end(), s.begin(), s.end());
}

std::string get_string(ByteReader& r) {
  auto v = r.bytes();
  return std::string(v.begin(), v.end());
}

std::vector<uint8_t> serialize_params(const Module& m) {
  std::vector<uint8_t> b;
  const auto params = m.named_parameters();
  put_u32(b, (uint32_t)params.size());
  for (const auto& [name, t] : params) {
    put_string(b, name);
    put_u32(b, (uint32_t)t.size());
    for (double v : t.data()) put_f64(b, v);
  }
  return b;
}

uint64_t fnv1a(const std::vector<uint8_t>& data, uint64_t basis) {
  uint64_t h = basis;
  for (uint8_t byte : data) {
    h ^= byte;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<uint8_t> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
}

nlohmann::json read_header(ByteReader& r, const std::string& path) {
  char magic[4];
  for (auto& m : magic) m = (char)r.u8();
  if (std::string(magic, 4) != std::string(kMagic, 4))
    throw std::runtime_error("not a checkpoint: bad magic in " + path);
  const uint8_t ver = r.u8();
  if (ver != kVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(ver));
  return nlohmann::json::parse(get_string(r));
}

}  // namespace

std::array<uint8_t, 16> param_digest(const Module& m) {
  const auto bytes = serialize_params(m);
  const uint64_t h1 = fnv1a(bytes, 0xcbf29ce484222325ull);
  const uint64_t h2 = fnv1a(bytes, 0x84222325cbf29ce4ull);
  std::array<uint8_t, 16> d;
  for (int i = 0; i < 8; ++i) {
    d[i] = (uint8_t)(h1 >> (8 * i));
    d[8 + i] = (uint8_t)(h2 >> (8 * i));
  }
  return d;
}

void save_checkpoint(const std::string& path, const nlohmann::json& config,
                     const Module& m) {
  std::vector<uint8_t> b;
  b.insert(b.end(), kMagic, kMagic + 4);
  put_u8(b, kVersion);
  put_string(b, config.dump());
  const auto pb = serialize_params(m);
  b.insert(b.end(), pb.begin(), pb.end());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write((const char*)b.data(), (std::streamsize)b.size());
  if (!f) throw std::runtime_error("write failed: " + path);
}

nlohmann::json peek_checkpoint_config(const std::string& path) {
  const auto all = read_all(path);
  ByteReader r(all);
  return read_header(r, path);
}

nlohmann::json load_checkpoint(const std::string& path, Module& m) {
  const auto all = read_all(path);
  ByteReader r(all);
  auto config = read_header(r, path);
  const auto params = m.named_parameters();
  const uint32_t n = r.u32();
  if (n != params.size())
    throw std::runtime_error("checkpoint has " + std::to_string(n) +
                             " parameters, model expects " +
                             std::to_string(params.size()));
  for (const auto& [name, t] : params) {
    const std::string stored = get_string(r);
    if (stored != name)
      throw std::runtime_error("checkpoint parameter '" + stored +
                               "' where model expects '" + name + "'");
    const uint32_t count = r.u32();
    if ((int64_t)count != t.size())
      throw std::runtime_error("checkpoint parameter '" + name + "' has " +
                               std::to_string(count) + " values, model has " +
                               std::to_string(t.size()));
    Tensor tt = t;
    for (uint32_t i = 0; i < count; ++i) tt.data()[i] = get_f64(r);
  }
  return config;
}

}  // namespace ssf
