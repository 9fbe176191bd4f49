#include "ssf/bitstream.hpp"

#include <zlib.h>

#include <fstream>

namespace ssf {

void put_u8(std::vector<uint8_t>& b, uint8_t v) { b.push_back(v); }

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
  b.push_back((uint8_t)(v & 0xFF));
  b.push_back((uint8_t)(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((uint8_t)(v >> (8 * i)));
}

void put_bytes(std::vector<uint8_t>& b, const std::vector<uint8_t>& v) {
  put_u32(b, (uint32_t)v.size());
  b.insert(b.end(), v.begin(), v.end());
}

uint8_t ByteReader::u8() {
  if (pos_ + 1 > size_) throw DecodeError("byte reader: truncated stream");
  return data_[pos_++];
}

uint16_t ByteReader::u16() {
  const uint16_t lo = u8();
  return (uint16_t)(lo | ((uint16_t)u8() << 8));
}

uint32_t ByteReader::u32() {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= (uint32_t)u8() << (8 * i);
  return v;
}

std::vector<uint8_t> ByteReader::bytes() {
  const uint32_t n = u32();
  if (pos_ + n > size_) throw DecodeError("byte reader: truncated stream");
  std::vector<uint8_t> out(data_ + pos_, data_ + pos_ + n);
  pos_ += n;
  return out;
}

namespace {

constexpr char kMagic[4] = {'S', 'S', 'F', 'V'};

uint32_t chunk_crc(const std::vector<uint8_t>& body) {
  return (uint32_t)crc32(0, body.data(), (uInt)body.size());
}

std::vector<uint8_t> header_bytes(const ContainerHeader& h) {
  std::vector<uint8_t> b;
  b.insert(b.end(), kMagic, kMagic + 4);
  put_u8(b, h.version);
  put_u16(b, h.width);
  put_u16(b, h.height);
  put_u8(b, h.channels);
  put_u8(b, h.gop_size);
  b.insert(b.end(), h.model_digest.begin(), h.model_digest.end());
  put_u32(b, h.frame_count);
  return b;
}

}  // namespace

void write_container(const std::string& path, const Container& c) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  auto hb = header_bytes(c.header);
  f.write((const char*)hb.data(), (std::streamsize)hb.size());
  for (const auto& body : c.chunks) {
    std::vector<uint8_t> b;
    put_u32(b, (uint32_t)body.size());
    put_u32(b, chunk_crc(body));
    b.insert(b.end(), body.begin(), body.end());
    f.write((const char*)b.data(), (std::streamsize)b.size());
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

Container read_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DecodeError("cannot open: " + path);
  std::vector<uint8_t> all((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  ByteReader r(all);
  Container c;
  char magic[4];
  for (auto& m : magic) m = (char)r.u8();
  if (std::string(magic, 4) != std::string(kMagic, 4))
    throw DecodeError("not a video stream: bad magic in " + path);
  c.header.version = r.u8();
  if (c.header.version != 1)
    throw DecodeError("unsupported stream version " +
                      std::to_string(c.header.version));
  c.header.width = r.u16();
  c.header.height = r.u16();
  c.header.channels = r.u8();
  c.header.gop_size = r.u8();
  for (auto& d : c.header.model_digest) d = r.u8();
  c.header.frame_count = r.u32();
  for (uint32_t i = 0; i < c.header.frame_count; ++i) {
    uint32_t len, crc;
    try {
      len = r.u32();
      crc = r.u32();
      if (r.remaining() < len)
        throw DecodeError("truncated chunk body");
    } catch (const DecodeError&) {
      throw DecodeError("frame " + std::to_string(i) + ": truncated chunk");
    }
    std::vector<uint8_t> body(len);
    for (uint32_t j = 0; j < len; ++j) body[j] = r.u8();
    if (chunk_crc(body) != crc)
      throw DecodeError("frame " + std::to_string(i) + ": crc mismatch");
    c.chunks.push_back(std::move(body));
  }
  return c;
}

size_t container_size(const Container& c) {
  size_t n = c.header.byte_size();
  for (const auto& b : c.chunks) n += 8 + b.size();
  return n;
}

}  // namespace ssf
