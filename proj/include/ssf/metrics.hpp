#pragma once

// Rate and distortion metrics on normalized frames (peak = 1.0).

#include <cstddef>

#include "ssf/tensor.hpp"

namespace ssf {

// 10*log10(1/MSE); identical frames report the 100 dB cap.
double psnr_db(const Tensor& a, const Tensor& b);

double bits_per_pixel(size_t payload_bytes, int frames, int h, int w);

}  // namespace ssf
