#include "ssf/scale_space.hpp"

#include <cmath>
#include <stdexcept>

#include "ssf/kernels.hpp"

namespace ssf {

void ScaleSpaceConfig::validate() const {
  double prev = 0.0;
  for (double s : scales) {
    if (s <= prev)
      throw std::invalid_argument(
          "ScaleSpaceConfig: scales must be strictly increasing and > 0");
    prev = s;
  }
  if (kernel_truncation <= 0.0)
    throw std::invalid_argument("ScaleSpaceConfig: truncation must be > 0");
}

std::vector<double> gaussian_kernel_1d(double s, double truncation) {
  if (s <= 0.0) throw std::invalid_argument("gaussian_kernel: s must be > 0");
  if (truncation <= 0.0)
    throw std::invalid_argument("gaussian_kernel: truncation must be > 0");
  const int r = (int)std::ceil(truncation * s);
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i)
    sum += (k[i + r] = std::exp(-0.5 * (double)i * i / (s * s)));
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> gaussian_kernel(double s, double truncation, int* side_out) {
  const auto k1 = gaussian_kernel_1d(s, truncation);
  const int side = (int)k1.size();
  if (side_out) *side_out = side;
  std::vector<double> k2((size_t)side * side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) k2[(size_t)y * side + x] = k1[y] * k1[x];
  return k2;
}

namespace {

// One blurred slice, separable horizontal+vertical passes, replicate padding.
Tensor blur_slice(const Tensor& frame, const std::vector<double>& k1d) {
  const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  auto n = std::make_shared<Node>();
  n->shape = frame.shape();
  n->value.resize(frame.data().size());
  std::vector<double> tmp(frame.data().size());
  kernels::blur_pass_h(frame.data().data(), tmp.data(), c, h, w, k1d.data(),
                       (int)k1d.size());
  kernels::blur_pass_v(tmp.data(), n->value.data(), c, h, w, k1d.data(),
                       (int)k1d.size());
  if (grad_enabled() && frame.requires_grad()) {
    n->requires_grad = true;
    n->parents = {frame.node()};
    auto fp = frame.node();
    n->backward_fn = [fp, k1d, c, h, w](Node& self) {
      fp->ensure_grad();
      std::vector<double> tmp(self.grad.size(), 0.0);
      kernels::blur_pass_v_bwd(self.grad.data(), tmp.data(), c, h, w,
                               k1d.data(), (int)k1d.size());
      kernels::blur_pass_h_bwd(tmp.data(), fp->grad.data(), c, h, w,
                               k1d.data(), (int)k1d.size());
    };
  }
  return Tensor(n);
}

}  // namespace

Tensor build_volume(const Tensor& frame, const ScaleSpaceConfig& cfg) {
  if (frame.shape().size() != 3)
    throw std::invalid_argument("build_volume: frame must be [c,h,w]");
  for (double v : frame.data())
    if (!std::isfinite(v))
      throw std::invalid_argument("build_volume: frame has non-finite values");
  cfg.validate();
  const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  std::vector<Tensor> slices;
  slices.push_back(frame);
  for (double s : cfg.scales)
    slices.push_back(blur_slice(frame, gaussian_kernel_1d(s, cfg.kernel_truncation)));
  Tensor stacked = concat_ch(slices);  // [(M+1)*c, h, w]
  return reshape(stacked, {cfg.num_slices(), c, h, w});
}

Tensor warp(const Tensor& volume, const Tensor& fx, const Tensor& fy,
            const Tensor& fz) {
  if (volume.shape().size() != 4)
    throw std::invalid_argument("warp: volume must be [(M+1),c,h,w]");
  const int m1 = volume.dim(0), c = volume.dim(1);
  const int h = volume.dim(2), w = volume.dim(3);
  auto spatial = [&](const Tensor& t) {
    return t.size() == (int64_t)h * w;
  };
  if (!spatial(fx) || !spatial(fy) || !spatial(fz))
    throw std::invalid_argument("warp: flow shape does not match volume " +
                                shape_str(volume.shape()));
  auto n = std::make_shared<Node>();
  n->shape = {c, h, w};
  n->value.resize((size_t)c * h * w);
  kernels::warp_fwd(volume.data().data(), fx.data().data(), fy.data().data(),
                    fz.data().data(), n->value.data(), m1, c, h, w);
  const bool need = grad_enabled() &&
                    (volume.requires_grad() || fx.requires_grad() ||
                     fy.requires_grad() || fz.requires_grad());
  if (need) {
    n->requires_grad = true;
    n->parents = {volume.node(), fx.node(), fy.node(), fz.node()};
    auto vp = volume.node(), xp = fx.node(), yp = fy.node(), zp = fz.node();
    n->backward_fn = [vp, xp, yp, zp, m1, c, h, w](Node& self) {
      if (vp->requires_grad) vp->ensure_grad();
      if (xp->requires_grad) xp->ensure_grad();
      if (yp->requires_grad) yp->ensure_grad();
      if (zp->requires_grad) zp->ensure_grad();
      kernels::warp_bwd(vp->value.data(), xp->value.data(), yp->value.data(),
                        zp->value.data(), self.grad.data(),
                        vp->requires_grad ? vp->grad.data() : nullptr,
                        xp->requires_grad ? xp->grad.data() : nullptr,
                        yp->requires_grad ? yp->grad.data() : nullptr,
                        zp->requires_grad ? zp->grad.data() : nullptr,
                        m1, c, h, w);
    };
  }
  return Tensor(n);
}

}  // namespace ssf
