// Benchmarks the OpenMP kernels against the serial reference and checks the
// two paths agree bitwise on the same inputs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "ssf/kernels.hpp"
#include "ssf/tensor.hpp"

using namespace ssf;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> randvec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool match) {
  std::printf("%-12s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              match ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
  Rng rng(7);
  kernels::set_parallel(true);

  {  // matmul 256x256x256
    const int n = 256;
    auto A = randvec((size_t)n * n, rng), B = randvec((size_t)n * n, rng);
    std::vector<double> Cs((size_t)n * n), Cp((size_t)n * n);
    const double ts = time_ms(
        [&] { kernels::serial::matmul(A.data(), B.data(), Cs.data(), n, n, n); },
        3);
    const double tp = time_ms(
        [&] { kernels::matmul(A.data(), B.data(), Cp.data(), n, n, n); }, 3);
    report("matmul", ts, tp, same(Cs, Cp));
  }
  {  // conv2d 16ch 128x128 k5 s2
    const int ci = 16, co = 16, h = 128, w = 128, k = 5;
    auto x = randvec((size_t)ci * h * w, rng);
    auto wt = randvec((size_t)co * ci * k * k, rng);
    auto b = randvec(co, rng);
    const int oh = (h + 4 - k) / 2 + 1, ow = (w + 4 - k) / 2 + 1;
    std::vector<double> ys((size_t)co * oh * ow), yp(ys.size());
    const double ts = time_ms(
        [&] {
          kernels::serial::conv2d_fwd(x.data(), wt.data(), b.data(), ys.data(),
                                      ci, h, w, co, k, 2, 2);
        },
        3);
    const double tp = time_ms(
        [&] {
          kernels::conv2d_fwd(x.data(), wt.data(), b.data(), yp.data(), ci, h,
                              w, co, k, 2, 2);
        },
        3);
    report("conv2d", ts, tp, same(ys, yp));
  }
  {  // depthwise 48ch 128x128
    const int c = 48, h = 128, w = 128;
    auto x = randvec((size_t)c * h * w, rng);
    auto wt = randvec((size_t)c * 9, rng);
    auto b = randvec(c, rng);
    std::vector<double> ys((size_t)c * h * w), yp(ys.size());
    const double ts = time_ms(
        [&] {
          kernels::serial::dwconv3x3_fwd(x.data(), wt.data(), b.data(),
                                         ys.data(), c, h, w);
        },
        5);
    const double tp = time_ms(
        [&] {
          kernels::dwconv3x3_fwd(x.data(), wt.data(), b.data(), yp.data(), c,
                                 h, w);
        },
        5);
    report("dwconv3x3", ts, tp, same(ys, yp));
  }
  {  // blur pass 4ch 256x256, radius 12
    const int c = 4, h = 256, w = 256, klen = 25;
    auto x = randvec((size_t)c * h * w, rng);
    auto k1 = randvec(klen, rng);
    std::vector<double> ys((size_t)c * h * w), yp(ys.size());
    const double ts = time_ms(
        [&] {
          kernels::serial::blur_pass_h(x.data(), ys.data(), c, h, w, k1.data(),
                                       klen);
        },
        5);
    const double tp = time_ms(
        [&] {
          kernels::blur_pass_h(x.data(), yp.data(), c, h, w, k1.data(), klen);
        },
        5);
    report("blur_pass", ts, tp, same(ys, yp));
  }
  {  // warp 6 slices, 4ch, 128x128
    const int m1 = 6, c = 4, h = 128, w = 128;
    auto vol = randvec((size_t)m1 * c * h * w, rng);
    auto fx = randvec((size_t)h * w, rng), fy = randvec((size_t)h * w, rng);
    auto fz = randvec((size_t)h * w, rng);
    for (auto& v : fz) v = std::abs(v);
    std::vector<double> ys((size_t)c * h * w), yp(ys.size());
    const double ts = time_ms(
        [&] {
          kernels::serial::warp_fwd(vol.data(), fx.data(), fy.data(),
                                    fz.data(), ys.data(), m1, c, h, w);
        },
        5);
    const double tp = time_ms(
        [&] {
          kernels::warp_fwd(vol.data(), fx.data(), fy.data(), fz.data(),
                            yp.data(), m1, c, h, w);
        },
        5);
    report("warp", ts, tp, same(ys, yp));
  }
  return 0;
}
