#pragma once

// Scale-space volumes and trilinear warping for motion compensation. A volume
// stacks the source frame with progressively Gaussian-blurred copies; the
// flow's third channel selects the blur level by fractional slice index.

#include <vector>

#include "ssf/tensor.hpp"

namespace ssf {

struct ScaleSpaceConfig {
  // Blur standard deviations in pixels, strictly increasing.
  std::vector<double> scales{0.5, 1.0, 2.0, 4.0, 8.0};
  // Kernel half-width = ceil(kernel_truncation * s) pixels.
  double kernel_truncation = 3.0;

  int num_scales() const { return (int)scales.size(); }
  int num_slices() const { return (int)scales.size() + 1; }
  void validate() const;
};

// Normalized 1-D Gaussian samples exp(-k^2 / (2 s^2)), k in
// [-ceil(trunc*s), ceil(trunc*s)]. Throws on s <= 0.
std::vector<double> gaussian_kernel_1d(double s, double truncation);

// 2-D kernel = outer product of the 1-D samples; entries sum to 1.
std::vector<double> gaussian_kernel(double s, double truncation,
                                    int* side_out = nullptr);

// frame:[c,h,w] -> volume:[(M+1),c,h,w]; slice 0 is the frame itself,
// slice i >= 1 the frame blurred at scales[i-1] (edge-replicate padding,
// separable passes). Differentiable wrt the frame.
Tensor build_volume(const Tensor& frame, const ScaleSpaceConfig& cfg);

// Trilinear sample of the volume at (x + fx, y + fy, fz). Spatial samples
// clamp to edge; fz clamps to [0, M]. Differentiable wrt volume and flow.
Tensor warp(const Tensor& volume, const Tensor& fx, const Tensor& fy,
            const Tensor& fz);

}  // namespace ssf
