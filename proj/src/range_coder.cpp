#include "ssf/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssf {

std::vector<uint32_t> quantize_pmf(const std::vector<double>& pmf) {
  const int n = (int)pmf.size();
  std::vector<uint32_t> freq(n);
  int64_t sum = 0;
  for (int i = 0; i < n; ++i) {
    freq[i] = (uint32_t)std::max<int64_t>(
        1, (int64_t)std::llround(pmf[i] * (double)kCdfTotal));
    sum += freq[i];
  }
  // Fix the total by adjusting the largest entries.
  while (sum != kCdfTotal) {
    if (sum < kCdfTotal) {
      int arg = (int)(std::max_element(freq.begin(), freq.end()) - freq.begin());
      uint32_t add = (uint32_t)std::min<int64_t>(kCdfTotal - sum, 1 << 12);
      freq[arg] += add;
      sum += add;
    } else {
      // Remove from the largest entry, keeping it >= 1.
      int arg = (int)(std::max_element(freq.begin(), freq.end()) - freq.begin());
      uint32_t rem = (uint32_t)std::min<int64_t>(sum - kCdfTotal, freq[arg] - 1);
      if (rem == 0)
        throw std::runtime_error("quantize_pmf: cannot normalize pmf");
      freq[arg] -= rem;
      sum -= rem;
    }
  }
  return freq;
}

// ---------------------------------------------------------------------------
// encoder

void RangeEncoder::shift_low() {
  if ((uint32_t)low_ < 0xFF000000u || (uint32_t)(low_ >> 32) != 0) {
    const uint8_t carry = (uint8_t)(low_ >> 32);
    out_.push_back(cache_ + carry);
    while (--cache_size_) out_.push_back((uint8_t)(0xFF + carry));
    cache_ = (uint8_t)(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFull) << 8;
}

void RangeEncoder::encode(uint32_t cum, uint32_t freq, uint32_t total) {
  range_ /= total;
  low_ += (uint64_t)cum * range_;
  range_ *= freq;
  while (range_ < (1u << 24)) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::encode_symbol(const CdfTable& t, int symbol) {
  encode(t.cdf[symbol], t.freq(symbol));
}

void RangeEncoder::encode_value(const CdfTable& t, int value) {
  const int s = value - t.min_value;
  if (s >= 0 && s < t.num_values) {
    encode_symbol(t, s);
  } else {
    encode_symbol(t, t.escape_symbol());
    const uint32_t z =
        ((uint32_t)value << 1) ^ (uint32_t)((int32_t)value >> 31);  // zigzag
    for (int i = 0; i < 4; ++i) encode((z >> (8 * i)) & 0xFF, 1, 256);
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

// ---------------------------------------------------------------------------
// decoder

RangeDecoder::RangeDecoder(const uint8_t* data, size_t size)
    : data_(data), size_(size) {
  next_byte();  // leading cache byte emitted by the encoder
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= size_) throw DecodeError("range decoder: stream exhausted");
  return data_[pos_++];
}

uint32_t RangeDecoder::decode_freq(uint32_t total) {
  range_ /= total;
  const uint32_t f = code_ / range_;
  if (f >= total) throw DecodeError("range decoder: corrupt stream");
  return f;
}

void RangeDecoder::commit(uint32_t cum, uint32_t freq, uint32_t total) {
  (void)total;
  code_ -= cum * range_;
  range_ *= freq;
  while (range_ < (1u << 24)) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

int RangeDecoder::decode_symbol(const CdfTable& t) {
  const uint32_t f = decode_freq();
  // Binary search for the symbol whose cdf span contains f.
  int lo = 0, hi = t.num_symbols() - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (t.cdf[mid] <= f)
      lo = mid;
    else
      hi = mid - 1;
  }
  commit(t.cdf[lo], t.freq(lo));
  return lo;
}

int RangeDecoder::decode_value(const CdfTable& t) {
  const int s = decode_symbol(t);
  if (s != t.escape_symbol()) return t.min_value + s;
  uint32_t z = 0;
  for (int i = 0; i < 4; ++i) {
    const uint32_t b = decode_freq(256);
    commit(b, 1, 256);
    z |= b << (8 * i);
  }
  return (int)((z >> 1) ^ (~(z & 1) + 1));
}

// ---------------------------------------------------------------------------

double table_rate_bits(const std::vector<int>& values,
                       const std::vector<const CdfTable*>& tables) {
  double bits = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    const CdfTable& t = *tables[i];
    const int s = values[i] - t.min_value;
    if (s >= 0 && s < t.num_values) {
      bits -= std::log2((double)t.freq(s) / kCdfTotal);
    } else {
      bits -= std::log2((double)t.freq(t.escape_symbol()) / kCdfTotal);
      bits += 32.0;
    }
  }
  return bits;
}

std::vector<uint8_t> range_encode(const std::vector<int>& values,
                                  const std::vector<const CdfTable*>& tables) {
  RangeEncoder enc;
  for (size_t i = 0; i < values.size(); ++i)
    enc.encode_value(*tables[i], values[i]);
  return enc.finish();
}

std::vector<int> range_decode(const std::vector<uint8_t>& bytes,
                              const std::vector<const CdfTable*>& tables) {
  RangeDecoder dec(bytes.data(), bytes.size());
  std::vector<int> out(tables.size());
  for (size_t i = 0; i < tables.size(); ++i)
    out[i] = dec.decode_value(*tables[i]);
  return out;
}

}  // namespace ssf
