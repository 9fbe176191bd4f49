#include "ssf/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ssf {

double psnr_db(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("psnr: shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  double se = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    se += d * d;
  }
  const double mse = se / (double)a.size();
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double bits_per_pixel(size_t payload_bytes, int frames, int h, int w) {
  if (frames <= 0 || h <= 0 || w <= 0)
    throw std::invalid_argument("bpp: frames and dimensions must be positive");
  return 8.0 * (double)payload_bytes / ((double)frames * h * w);
}

}  // namespace ssf
