#pragma once

// Quantization and likelihood models: zero-mean Gaussian conditional for the
// main latent (sigma decoded from the hyper-latent) and a per-channel
// non-parametric factorized prior for the hyper-latent, plus construction of
// quantized cdf tables for the range coder.

#include <cstdint>
#include <vector>

#include "ssf/module.hpp"
#include "ssf/range_coder.hpp"
#include "ssf/tensor.hpp"

namespace ssf {

inline constexpr double kLikelihoodFloor = 0x1.0p-32;

// Training-time quantization: additive uniform noise on [-0.5, 0.5),
// gradient pass-through.
Tensor quantize_train(const Tensor& y, Rng& rng);

// Test-time quantization: round half away from zero; values only, no graph.
std::vector<double> quantize_test(const std::vector<double>& y);
Tensor quantize_test(const Tensor& y);

// Unit-bin mass of N(0, sigma^2) at v, sigma clamped below by sigma_floor.
Tensor gaussian_likelihood(const Tensor& v, const Tensor& sigma,
                           double sigma_floor);

struct GaussianConditional {
  double sigma_floor = 0.11;
  double tail_mass = 1e-9;
  int num_scales = 64;
  double max_scale = 64.0;

  // Log-spaced table of representative sigmas, deterministic from config.
  std::vector<double> scale_table() const;
  // Index of the smallest table sigma >= sigma (clamped into range).
  int scale_index(double sigma) const;
  // One cdf table per table scale.
  std::vector<CdfTable> build_cdf_tables() const;
};

// Per-channel univariate cumulative model: stack of monotone
// affine-plus-nonlinearity stages (widths 1-3-3-3-1), composite non-decreasing
// from 0 to 1.
class FactorizedPrior : public Module {
 public:
  FactorizedPrior(int channels, Rng& rng);

  int channels() const { return channels_; }

  // z:[c,h,w] (noisy or integer) -> per-element bin mass, differentiable in z
  // and the prior parameters.
  Tensor likelihood(const Tensor& z) const;

  // Plain-double cumulative evaluation, used by the coder table builder.
  double cdf_value(int channel, double x) const;

  std::vector<CdfTable> build_cdf_tables(double tail_mass) const;

 private:
  Tensor stage_forward(int ch, Tensor u, int stage) const;
  int channels_;
  // Per stage: raw H (softplus-constrained), bias b, gate a (tanh-squashed);
  // stored as [channels, rows*cols] style flats.
  struct Stage {
    Tensor h, b, a;  // a undefined for the last stage
    int in, out;
  };
  std::vector<Stage> stages_;
};

}  // namespace ssf
