#pragma once

// Raw numeric kernels shared by the autodiff layer. Every kernel exists in
// two forms: the OpenMP-parallel primary (this namespace) and a plain serial
// reference under kernels::serial used as the test oracle and selectable at
// runtime via set_parallel(false) / SSF_KERNELS=serial. Parallel loops write
// disjoint outputs only, so results are bitwise identical across thread
// counts.

#include <cstddef>
#include <vector>

namespace ssf::kernels {

bool parallel_enabled();
void set_parallel(bool on);
// Reads SSF_KERNELS ("serial" disables parallel loops). Called once lazily.
void init_from_env();

// C[m,n] = A[m,k] * B[k,n]
void matmul(const double* A, const double* B, double* C, int m, int k, int n);
// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt(const double* A, const double* B, double* C, int m, int k, int n);
// C[m,n] += A[k,m]^T * B[k,n]
void matmul_tn_acc(const double* A, const double* B, double* C, int m, int k, int n);
// C[m,n] += A[m,k] * B[n,k]^T
void matmul_nt_acc(const double* A, const double* B, double* C, int m, int k, int n);
// C[m,n] += A[m,k] * B[k,n]
void matmul_acc(const double* A, const double* B, double* C, int m, int k, int n);

// Zero-padded strided convolution, single image. x:[ci,h,w] w:[co,ci,k,k]
// b:[co] (may be null), y:[co,oh,ow] with oh=(h+2p-k)/s+1.
void conv2d_fwd(const double* x, const double* w, const double* b, double* y,
                int ci, int h, int wd, int co, int k, int stride, int pad);
void conv2d_bwd_input(const double* dy, const double* w, double* dx,
                      int ci, int h, int wd, int co, int k, int stride, int pad);
void conv2d_bwd_weight(const double* dy, const double* x, double* dw, double* db,
                       int ci, int h, int wd, int co, int k, int stride, int pad);

// Transposed convolution. x:[ci,h,w] w:[ci,co,k,k] y:[co,oh,ow],
// oh=(h-1)*s-2p+k+op.
void tconv2d_fwd(const double* x, const double* w, const double* b, double* y,
                 int ci, int h, int wd, int co, int k, int stride, int pad, int opad);
void tconv2d_bwd_input(const double* dy, const double* w, double* dx,
                       int ci, int h, int wd, int co, int k, int stride, int pad, int opad);
void tconv2d_bwd_weight(const double* dy, const double* x, double* dw, double* db,
                        int ci, int h, int wd, int co, int k, int stride, int pad, int opad);

// 3x3 depthwise convolution with edge-replicate padding. x:[c,h,w] w:[c,3,3].
void dwconv3x3_fwd(const double* x, const double* w, const double* b, double* y,
                   int c, int h, int wd);
void dwconv3x3_bwd(const double* dy, const double* x, const double* w,
                   double* dx, double* dw, double* db, int c, int h, int wd);

// Separable blur passes with edge-replicate padding; k1d has odd length.
void blur_pass_h(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen);
void blur_pass_v(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen);
// Adjoints (scatter form, serial by construction).
void blur_pass_h_bwd(const double* dy, double* dx, int c, int h, int w,
                     const double* k1d, int klen);
void blur_pass_v_bwd(const double* dy, double* dx, int c, int h, int w,
                     const double* k1d, int klen);

// Trilinear scale-space warp. vol:[(m+1),c,h,w], fx/fy/fz:[h,w], out:[c,h,w].
// Spatial samples clamp to edge; fz clamped to [0,m].
void warp_fwd(const double* vol, const double* fx, const double* fy,
              const double* fz, double* out, int m1, int c, int h, int w);
// Backward wrt volume and flow channels (any of dvol/dfx/dfy/dfz may be null).
void warp_bwd(const double* vol, const double* fx, const double* fy,
              const double* fz, const double* dout,
              double* dvol, double* dfx, double* dfy, double* dfz,
              int m1, int c, int h, int w);

namespace serial {
void matmul(const double* A, const double* B, double* C, int m, int k, int n);
void conv2d_fwd(const double* x, const double* w, const double* b, double* y,
                int ci, int h, int wd, int co, int k, int stride, int pad);
void dwconv3x3_fwd(const double* x, const double* w, const double* b, double* y,
                   int c, int h, int wd);
void blur_pass_h(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen);
void blur_pass_v(const double* x, double* y, int c, int h, int w,
                 const double* k1d, int klen);
void warp_fwd(const double* vol, const double* fx, const double* fy,
              const double* fz, double* out, int m1, int c, int h, int w);
}  // namespace serial

}  // namespace ssf::kernels
