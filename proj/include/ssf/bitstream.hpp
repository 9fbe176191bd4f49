#pragma once

// Byte-level serialization helpers and the video container format. A stream
// is a fixed header followed by one chunk per frame; every chunk carries its
// own length and crc32 so corruption is detected at the offending frame.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ssf/range_coder.hpp"

namespace ssf {

void put_u8(std::vector<uint8_t>& b, uint8_t v);
void put_u16(std::vector<uint8_t>& b, uint16_t v);
void put_u32(std::vector<uint8_t>& b, uint32_t v);
// u32 length prefix followed by the bytes.
void put_bytes(std::vector<uint8_t>& b, const std::vector<uint8_t>& v);

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<uint8_t>& v)
      : ByteReader(v.data(), v.size()) {}
  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  std::vector<uint8_t> bytes();  // u32 length prefix
  size_t remaining() const { return size_ - pos_; }

 private:
  const uint8_t* data_;
  size_t size_, pos_ = 0;
};

struct ContainerHeader {
  uint8_t version = 1;
  uint16_t width = 0, height = 0;
  uint8_t channels = 1;
  uint8_t gop_size = 30;
  std::array<uint8_t, 16> model_digest{};
  uint32_t frame_count = 0;

  size_t byte_size() const { return 31; }
};

struct Container {
  ContainerHeader header;
  std::vector<std::vector<uint8_t>> chunks;  // one per frame
};

void write_container(const std::string& path, const Container& c);
// Throws DecodeError naming the frame index on a length or crc mismatch.
Container read_container(const std::string& path);

// Total size on disk of a container with these chunks, in bytes.
size_t container_size(const Container& c);

}  // namespace ssf
