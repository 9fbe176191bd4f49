#include "ssf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace ssf::kernels {

namespace {
bool g_parallel = true;
bool g_env_read = false;
}  // namespace

void init_from_env() {
  if (g_env_read) return;
  g_env_read = true;
  if (const char* v = std::getenv("SSF_KERNELS")) {
    if (std::strcmp(v, "serial") == 0) g_parallel = false;
  }
}

bool parallel_enabled() {
  init_from_env();
  return g_parallel;
}

void set_parallel(bool on) {
  g_env_read = true;
  g_parallel = on;
}

// ---------------------------------------------------------------------------
// matmul

namespace serial {

void matmul(const double* A, const double* B, double* C, int m, int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += A[i * k + t] * B[t * n + j];
      C[i * n + j] = acc;
    }
}

}  // namespace serial

void matmul(const double* A, const double* B, double* C, int m, int k, int n) {
  if (!parallel_enabled()) {
    serial::matmul(A, B, C, m, k, n);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* c = C + (size_t)i * n;
    std::fill(c, c + n, 0.0);
    const double* a = A + (size_t)i * k;
    for (int t = 0; t < k; ++t) {
      const double av = a[t];
      const double* b = B + (size_t)t * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* a = A + (size_t)i * k;
      const double* b = B + (size_t)j * k;
      for (int t = 0; t < k; ++t) acc += a[t] * b[t];
      C[(size_t)i * n + j] = acc;
    }
}

void matmul_acc(const double* A, const double* B, double* C, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < m; ++i) {
    double* c = C + (size_t)i * n;
    const double* a = A + (size_t)i * k;
    for (int t = 0; t < k; ++t) {
      const double av = a[t];
      const double* b = B + (size_t)t * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

void matmul_nt_acc(const double* A, const double* B, double* C, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* a = A + (size_t)i * k;
      const double* b = B + (size_t)j * k;
      for (int t = 0; t < k; ++t) acc += a[t] * b[t];
      C[(size_t)i * n + j] += acc;
    }
}

void matmul_tn_acc(const double* A, const double* B, double* C, int m, int k, int n) {
  // C[m,n] += A[k,m]^T B[k,n]; parallel over rows of C.
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < m; ++i) {
    double* c = C + (size_t)i * n;
    for (int t = 0; t < k; ++t) {
      const double av = A[(size_t)t * m + i];
      const double* b = B + (size_t)t * n;
      for (int j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

// ---------------------------------------------------------------------------
// conv2d (zero padding)

namespace serial {

void conv2d_fwd(const double* x, const double* w, const double* b, double* y,
                int ci, int h, int wd, int co, int k, int stride, int pad) {
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  for (int o = 0; o < co; ++o)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = b ? b[o] : 0.0;
        for (int i = 0; i < ci; ++i)
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= wd) continue;
              acc += x[((size_t)i * h + iy) * wd + ix] *
                     w[(((size_t)o * ci + i) * k + ky) * k + kx];
            }
          }
        y[((size_t)o * oh + oy) * ow + ox] = acc;
      }
}

}  // namespace serial

void conv2d_fwd(const double* x, const double* w, const double* b, double* y,
                int ci, int h, int wd, int co, int k, int stride, int pad) {
  if (!parallel_enabled()) {
    serial::conv2d_fwd(x, w, b, y, ci, h, wd, co, k, stride, pad);
    return;
  }
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
#pragma omp parallel for schedule(static)
  for (int o = 0; o < co; ++o)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = b ? b[o] : 0.0;
        for (int i = 0; i < ci; ++i) {
          const double* xp = x + (size_t)i * h * wd;
          const double* wp = w + (((size_t)o * ci + i) * k) * k;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= wd) continue;
              acc += xp[(size_t)iy * wd + ix] * wp[ky * k + kx];
            }
          }
        }
        y[((size_t)o * oh + oy) * ow + ox] = acc;
      }
}

void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int ci, int h, int wd, int co, int k, int stride, int pad) {
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  // Gather form: each input pixel sums contributions from outputs it fed.
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < ci; ++i)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < wd; ++ix) {
        double acc = 0.0;
        for (int o = 0; o < co; ++o) {
          const double* dyp = dy + (size_t)o * oh * ow;
          const double* wp = w + (((size_t)o * ci + i) * k) * k;
          for (int ky = 0; ky < k; ++ky) {
            const int num = iy + pad - ky;
            if (num < 0 || num % stride) continue;
            const int oy = num / stride;
            if (oy >= oh) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int numx = ix + pad - kx;
              if (numx < 0 || numx % stride) continue;
              const int ox = numx / stride;
              if (ox >= ow) continue;
              acc += dyp[(size_t)oy * ow + ox] * wp[ky * k + kx];
            }
          }
        }
        dx[((size_t)i * h + iy) * wd + ix] += acc;
      }
}

void conv2d_bwd_weight(const double* dy, const double* x, double* dw, double* db,
                       int ci, int h, int wd, int co, int k, int stride, int pad) {
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int o = 0; o < co; ++o) {
    const double* dyp = dy + (size_t)o * oh * ow;
    if (db) {
      double acc = 0.0;
      for (int p = 0; p < oh * ow; ++p) acc += dyp[p];
      db[o] += acc;
    }
    for (int i = 0; i < ci; ++i) {
      const double* xp = x + (size_t)i * h * wd;
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= wd) continue;
              acc += dyp[(size_t)oy * ow + ox] * xp[(size_t)iy * wd + ix];
            }
          }
          dw[(((size_t)o * ci + i) * k + ky) * k + kx] += acc;
        }
    }
  }
}

// ---------------------------------------------------------------------------
// transposed conv2d

void tconv2d_fwd(const double* x, const double* w, const double* b, double* y,
                 int ci, int h, int wd, int co, int k, int stride, int pad, int opad) {
  const int oh = (h - 1) * stride - 2 * pad + k + opad;
  const int ow = (wd - 1) * stride - 2 * pad + k + opad;
  // Gather form over outputs: y[o,oy,ox] = sum over (iy,ix,ky,kx) with
  // oy = iy*s - p + ky.
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int o = 0; o < co; ++o)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = b ? b[o] : 0.0;
        for (int i = 0; i < ci; ++i) {
          const double* xp = x + (size_t)i * h * wd;
          const double* wp = w + (((size_t)i * co + o) * k) * k;
          for (int ky = 0; ky < k; ++ky) {
            const int num = oy + pad - ky;
            if (num < 0 || num % stride) continue;
            const int iy = num / stride;
            if (iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int numx = ox + pad - kx;
              if (numx < 0 || numx % stride) continue;
              const int ix = numx / stride;
              if (ix >= wd) continue;
              acc += xp[(size_t)iy * wd + ix] * wp[ky * k + kx];
            }
          }
        }
        y[((size_t)o * oh + oy) * ow + ox] = acc;
      }
}

void tconv2d_bwd_input(const double* dy, const double* w, double* dx,
                       int ci, int h, int wd, int co, int k, int stride, int pad, int opad) {
  const int oh = (h - 1) * stride - 2 * pad + k + opad;
  const int ow = (wd - 1) * stride - 2 * pad + k + opad;
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < ci; ++i)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < wd; ++ix) {
        double acc = 0.0;
        for (int o = 0; o < co; ++o) {
          const double* dyp = dy + (size_t)o * oh * ow;
          const double* wp = w + (((size_t)i * co + o) * k) * k;
          for (int ky = 0; ky < k; ++ky) {
            const int oy = iy * stride - pad + ky;
            if (oy < 0 || oy >= oh) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ox = ix * stride - pad + kx;
              if (ox < 0 || ox >= ow) continue;
              acc += dyp[(size_t)oy * ow + ox] * wp[ky * k + kx];
            }
          }
        }
        dx[((size_t)i * h + iy) * wd + ix] += acc;
      }
}

void tconv2d_bwd_weight(const double* dy, const double* x, double* dw, double* db,
                        int ci, int h, int wd, int co, int k, int stride, int pad, int opad) {
  const int oh = (h - 1) * stride - 2 * pad + k + opad;
  const int ow = (wd - 1) * stride - 2 * pad + k + opad;
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int i = 0; i < ci; ++i) {
    const double* xp = x + (size_t)i * h * wd;
    for (int o = 0; o < co; ++o) {
      const double* dyp = dy + (size_t)o * oh * ow;
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (int iy = 0; iy < h; ++iy) {
            const int oy = iy * stride - pad + ky;
            if (oy < 0 || oy >= oh) continue;
            for (int ix = 0; ix < wd; ++ix) {
              const int ox = ix * stride - pad + kx;
              if (ox < 0 || ox >= ow) continue;
              acc += dyp[(size_t)oy * ow + ox] * xp[(size_t)iy * wd + ix];
            }
          }
          dw[(((size_t)i * co + o) * k + ky) * k + kx] += acc;
        }
    }
  }
  if (db) {
    for (int o = 0; o < co; ++o) {
      const double* dyp = dy + (size_t)o * oh * ow;
      double acc = 0.0;
      for (int p = 0; p < oh * ow; ++p) acc += dyp[p];
      db[o] += acc;
    }
  }
}

// ---------------------------------------------------------------------------
// depthwise 3x3, edge replicate

namespace serial {

void dwconv3x3_fwd(const double* x, const double* w, const double* b, double* y,
                   int c, int h, int wd) {
  for (int ch = 0; ch < c; ++ch)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < wd; ++ix) {
        double acc = b ? b[ch] : 0.0;
        for (int ky = -1; ky <= 1; ++ky)
          for (int kx = -1; kx <= 1; ++kx) {
            const int sy = std::clamp(iy + ky, 0, h - 1);
            const int sx = std::clamp(ix + kx, 0, wd - 1);
            acc += x[((size_t)ch * h + sy) * wd + sx] *
                   w[((size_t)ch * 3 + (ky + 1)) * 3 + (kx + 1)];
          }
        y[((size_t)ch * h + iy) * wd + ix] = acc;
      }
}

}  // namespace serial

void dwconv3x3_fwd(const double* x, const double* w, const double* b, double* y,
                   int c, int h, int wd) {
  if (!parallel_enabled()) {
    serial::dwconv3x3_fwd(x, w, b, y, c, h, wd);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = x + (size_t)ch * h * wd;
    const double* wp = w + (size_t)ch * 9;
    double* yp = y + (size_t)ch * h * wd;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < wd; ++ix) {
        double acc = b ? b[ch] : 0.0;
        for (int ky = -1; ky <= 1; ++ky) {
          const int sy = std::clamp(iy + ky, 0, h - 1);
          for (int kx = -1; kx <= 1; ++kx) {
            const int sx = std::clamp(ix + kx, 0, wd - 1);
            acc += xp[(size_t)sy * wd + sx] * wp[(ky + 1) * 3 + (kx + 1)];
          }
        }
        yp[(size_t)iy * wd + ix] = acc;
      }
  }
}

void dwconv3x3_bwd(const double* dy, const double* x, const double* w,
                   double* dx, double* dw, double* db, int c, int h, int wd) {
  // Scatter into dx duplicates at clamped borders; parallel over channels
  // keeps destinations disjoint.
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int ch = 0; ch < c; ++ch) {
    const double* dyp = dy + (size_t)ch * h * wd;
    const double* xp = x + (size_t)ch * h * wd;
    const double* wp = w + (size_t)ch * 9;
    double* dxp = dx ? dx + (size_t)ch * h * wd : nullptr;
    double* dwp = dw ? dw + (size_t)ch * 9 : nullptr;
    double dbias = 0.0;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < wd; ++ix) {
        const double g = dyp[(size_t)iy * wd + ix];
        dbias += g;
        for (int ky = -1; ky <= 1; ++ky) {
          const int sy = std::clamp(iy + ky, 0, h - 1);
          for (int kx = -1; kx <= 1; ++kx) {
            const int sx = std::clamp(ix + kx, 0, wd - 1);
            const int wi = (ky + 1) * 3 + (kx + 1);
            if (dxp) dxp[(size_t)sy * wd + sx] += g * wp[wi];
            if (dwp) dwp[wi] += g * xp[(size_t)sy * wd + sx];
          }
        }
      }
    if (db) db[ch] += dbias;
  }
}

// ---------------------------------------------------------------------------
// separable blur, edge replicate

namespace serial {

void blur_pass_h(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen) {
  const int r = klen / 2;
  for (int ch = 0; ch < c; ++ch)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        double acc = 0.0;
        for (int t = 0; t < klen; ++t) {
          const int sx = std::clamp(ix + t - r, 0, w - 1);
          acc += k1d[t] * x[((size_t)ch * h + iy) * w + sx];
        }
        y[((size_t)ch * h + iy) * w + ix] = acc;
      }
}

void blur_pass_v(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen) {
  const int r = klen / 2;
  for (int ch = 0; ch < c; ++ch)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        double acc = 0.0;
        for (int t = 0; t < klen; ++t) {
          const int sy = std::clamp(iy + t - r, 0, h - 1);
          acc += k1d[t] * x[((size_t)ch * h + sy) * w + ix];
        }
        y[((size_t)ch * h + iy) * w + ix] = acc;
      }
}

}  // namespace serial

void blur_pass_h(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen) {
  if (!parallel_enabled()) {
    serial::blur_pass_h(x, y, c, h, w, k1d, klen);
    return;
  }
  const int r = klen / 2;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = x + (size_t)ch * h * w;
    double* yp = y + (size_t)ch * h * w;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        double acc = 0.0;
        for (int t = 0; t < klen; ++t)
          acc += k1d[t] * xp[(size_t)iy * w + std::clamp(ix + t - r, 0, w - 1)];
        yp[(size_t)iy * w + ix] = acc;
      }
  }
}

void blur_pass_v(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen) {
  if (!parallel_enabled()) {
    serial::blur_pass_v(x, y, c, h, w, k1d, klen);
    return;
  }
  const int r = klen / 2;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    const double* xp = x + (size_t)ch * h * w;
    double* yp = y + (size_t)ch * h * w;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        double acc = 0.0;
        for (int t = 0; t < klen; ++t)
          acc += k1d[t] * xp[(size_t)std::clamp(iy + t - r, 0, h - 1) * w + ix];
        yp[(size_t)iy * w + ix] = acc;
      }
  }
}

void blur_pass_h_bwd(const double* dy, double* dx, int c, int h, int w,
                     const double* k1d, int klen) {
  const int r = klen / 2;
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int ch = 0; ch < c; ++ch) {
    const double* dyp = dy + (size_t)ch * h * w;
    double* dxp = dx + (size_t)ch * h * w;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        const double g = dyp[(size_t)iy * w + ix];
        for (int t = 0; t < klen; ++t)
          dxp[(size_t)iy * w + std::clamp(ix + t - r, 0, w - 1)] += k1d[t] * g;
      }
  }
}

void blur_pass_v_bwd(const double* dy, double* dx, int c, int h, int w,
                     const double* k1d, int klen) {
  const int r = klen / 2;
#pragma omp parallel for schedule(static) if (parallel_enabled())
  for (int ch = 0; ch < c; ++ch) {
    const double* dyp = dy + (size_t)ch * h * w;
    double* dxp = dx + (size_t)ch * h * w;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        const double g = dyp[(size_t)iy * w + ix];
        for (int t = 0; t < klen; ++t)
          dxp[(size_t)std::clamp(iy + t - r, 0, h - 1) * w + ix] += k1d[t] * g;
      }
  }
}

// ---------------------------------------------------------------------------
// trilinear scale-space warp

namespace {

void warp_channel(const double* vol, const double* fx, const double* fy,
                  const double* fz, double* out, int m1, int c, int ch,
                  int h, int w) {
  const int M = m1 - 1;
  for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t p = (size_t)y * w + x;
        const double xs = std::clamp((double)x + fx[p], 0.0, (double)(w - 1));
        const double ys = std::clamp((double)y + fy[p], 0.0, (double)(h - 1));
        const double zs = std::clamp(fz[p], 0.0, (double)M);
        const int x0 = std::min((int)std::floor(xs), w - 1);
        const int y0 = std::min((int)std::floor(ys), h - 1);
        const int z0 = std::min((int)std::floor(zs), M);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const int z1 = std::min(z0 + 1, M);
        const double ax = xs - x0, ay = ys - y0, az = zs - z0;
        double acc = 0.0;
        for (int dz = 0; dz < 2; ++dz) {
          const int z = dz ? z1 : z0;
          const double wz = dz ? az : 1.0 - az;
          if (wz == 0.0 && dz) continue;
          const double* sl = vol + (((size_t)z * c + ch) * h) * w;
          const double v00 = sl[(size_t)y0 * w + x0];
          const double v01 = sl[(size_t)y0 * w + x1];
          const double v10 = sl[(size_t)y1 * w + x0];
          const double v11 = sl[(size_t)y1 * w + x1];
          const double top = v00 * (1.0 - ax) + v01 * ax;
          const double bot = v10 * (1.0 - ax) + v11 * ax;
          acc += wz * (top * (1.0 - ay) + bot * ay);
        }
        out[((size_t)ch * h + y) * w + x] = acc;
    }
}

}  // namespace

namespace serial {

void warp_fwd(const double* vol, const double* fx, const double* fy,
              const double* fz, double* out, int m1, int c, int h, int w) {
  for (int ch = 0; ch < c; ++ch)
    warp_channel(vol, fx, fy, fz, out, m1, c, ch, h, w);
}

}  // namespace serial

void warp_fwd(const double* vol, const double* fx, const double* fy,
              const double* fz, double* out, int m1, int c, int h, int w) {
  if (!parallel_enabled()) {
    serial::warp_fwd(vol, fx, fy, fz, out, m1, c, h, w);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch)
    warp_channel(vol, fx, fy, fz, out, m1, c, ch, h, w);
}

void warp_bwd(const double* vol, const double* fx, const double* fy,
              const double* fz, const double* dout,
              double* dvol, double* dfx, double* dfy, double* dfz,
              int m1, int c, int h, int w) {
  const int M = m1 - 1;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t p = (size_t)y * w + x;
        const double g = dout[((size_t)ch * h + y) * w + x];
        if (g == 0.0) continue;
        const double xs_raw = (double)x + fx[p];
        const double ys_raw = (double)y + fy[p];
        const double zs_raw = fz[p];
        const bool cx = xs_raw <= 0.0 || xs_raw >= (double)(w - 1);
        const bool cy = ys_raw <= 0.0 || ys_raw >= (double)(h - 1);
        const bool cz = zs_raw <= 0.0 || zs_raw >= (double)M;
        const double xs = std::clamp(xs_raw, 0.0, (double)(w - 1));
        const double ys = std::clamp(ys_raw, 0.0, (double)(h - 1));
        const double zs = std::clamp(zs_raw, 0.0, (double)M);
        const int x0 = std::min((int)std::floor(xs), w - 1);
        const int y0 = std::min((int)std::floor(ys), h - 1);
        const int z0 = std::min((int)std::floor(zs), M);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const int z1 = std::min(z0 + 1, M);
        const double ax = xs - x0, ay = ys - y0, az = zs - z0;
        double d_ax = 0.0, d_ay = 0.0, d_az = 0.0;
        for (int dz = 0; dz < 2; ++dz) {
          const int z = dz ? z1 : z0;
          const double wz = dz ? az : 1.0 - az;
          const double* sl = vol + (((size_t)z * c + ch) * h) * w;
          double* dsl = dvol ? dvol + (((size_t)z * c + ch) * h) * w : nullptr;
          const double v00 = sl[(size_t)y0 * w + x0];
          const double v01 = sl[(size_t)y0 * w + x1];
          const double v10 = sl[(size_t)y1 * w + x0];
          const double v11 = sl[(size_t)y1 * w + x1];
          if (dsl) {
            dsl[(size_t)y0 * w + x0] += g * wz * (1.0 - ax) * (1.0 - ay);
            dsl[(size_t)y0 * w + x1] += g * wz * ax * (1.0 - ay);
            dsl[(size_t)y1 * w + x0] += g * wz * (1.0 - ax) * ay;
            dsl[(size_t)y1 * w + x1] += g * wz * ax * ay;
          }
          const double top = v00 * (1.0 - ax) + v01 * ax;
          const double bot = v10 * (1.0 - ax) + v11 * ax;
          d_ax += wz * ((v01 - v00) * (1.0 - ay) + (v11 - v10) * ay);
          d_ay += wz * (bot - top);
          const double bilin = top * (1.0 - ay) + bot * ay;
          d_az += (dz ? 1.0 : -1.0) * bilin;
        }
        if (dfx && !cx) dfx[p] += g * d_ax;
        if (dfy && !cy) dfy[p] += g * d_ay;
        if (dfz && !cz) dfz[p] += g * d_az;
      }
}

}  // namespace ssf::kernels
