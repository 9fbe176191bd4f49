#pragma once

// 32-bit renormalizing range coder with 16-bit probability precision plus the
// quantized cdf tables that bridge the learned likelihood models to integer
// arithmetic. Out-of-support values are escape-coded with a raw 32-bit
// fallback.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssf {

class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kCdfPrecision = 16;
inline constexpr uint32_t kCdfTotal = 1u << kCdfPrecision;

struct CdfTable {
  // cdf.size() == num_symbols + 1; cdf.front() == 0, cdf.back() == kCdfTotal.
  // Symbol s in [0, num_values) codes integer value min_value + s; symbol
  // num_values is the escape.
  std::vector<uint32_t> cdf;
  int min_value = 0;
  int num_values = 0;

  int num_symbols() const { return (int)cdf.size() - 1; }
  int escape_symbol() const { return num_values; }
  uint32_t freq(int s) const { return cdf[s + 1] - cdf[s]; }
};

// Largest-remainder quantization of a pmf to 16-bit integer frequencies, every
// entry >= 1.
std::vector<uint32_t> quantize_pmf(const std::vector<double>& pmf);

class RangeEncoder {
 public:
  void encode(uint32_t cum, uint32_t freq, uint32_t total = kCdfTotal);
  void encode_symbol(const CdfTable& t, int symbol);
  // Encode an arbitrary integer against a table, escape-coding if needed.
  void encode_value(const CdfTable& t, int value);
  std::vector<uint8_t> finish();

 private:
  void shift_low();
  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(const uint8_t* data, size_t size);
  // Returns a frequency cursor in [0,total); caller then commits the symbol.
  uint32_t decode_freq(uint32_t total = kCdfTotal);
  void commit(uint32_t cum, uint32_t freq, uint32_t total = kCdfTotal);
  int decode_symbol(const CdfTable& t);
  int decode_value(const CdfTable& t);

 private:
  uint8_t next_byte();
  const uint8_t* data_;
  size_t size_, pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

// Rate in bits a message would occupy under the quantized tables (escapes
// charged their escape frequency plus 32 raw bits). The coder's actual output
// tracks this to within a small constant.
double table_rate_bits(const std::vector<int>& values,
                       const std::vector<const CdfTable*>& tables);

std::vector<uint8_t> range_encode(const std::vector<int>& values,
                                  const std::vector<const CdfTable*>& tables);
std::vector<int> range_decode(const std::vector<uint8_t>& bytes,
                              const std::vector<const CdfTable*>& tables);

}  // namespace ssf
