#pragma once

// The video codec: an intra-frame autoencoder plus a predicted-frame pair of
// motion and residual autoencoders. Motion is a three-channel field (x/y
// displacement and a blur-level coordinate) applied to a scale-space volume
// of the previous reconstruction; the residual tops up the warped prediction.
// Each autoencoder carries a hyperprior: the latent is coded against a
// zero-mean Gaussian whose scale is decoded from a factorized-prior-coded
// hyper-latent.

#include <memory>
#include <vector>

#include "json.hpp"
#include "ssf/entropy.hpp"
#include "ssf/scale_space.hpp"
#include "ssf/transforms.hpp"

namespace ssf {

struct CodecConfig {
  Family family = Family::conv;
  int frame_channels = 1;
  int gop_size = 30;
  int hyper_channels = 16;
  TransformConfig transform;  // template; in_channels is set per subnet
  ScaleSpaceConfig scale_space;

  void validate() const;
  TransformConfig subnet_config(int in_channels) const;
  int downsample_factor() const;
  // Frame-size divisibility for the transforms and the hyper pair.
  void validate_frame(int h, int w) const;

  nlohmann::json to_json() const;
  static CodecConfig from_json(const nlohmann::json& j);
};

struct NetOutput {
  Tensor recon;  // raw decoder output
  Tensor bits;   // scalar, latent + hyper-latent rate under the noisy proxy
};

// One analysis/synthesis pair with its hyperprior and entropy coding.
class CompressionNet : public Module {
 public:
  CompressionNet(const TransformConfig& cfg, int out_channels,
                 int hyper_channels, Rng& rng);

  NetOutput forward_train(const Tensor& x, Rng& rng) const;

  struct Coded {
    std::vector<uint8_t> z, y;
  };
  // recon_out, if given, receives the decoder-side reconstruction computed
  // from the integer-quantized latent (the closed-loop signal).
  Coded encode(const Tensor& x, Tensor* recon_out = nullptr) const;
  Tensor decode(const Coded& c, int lh, int lw) const;

  // Drop cached range-coder tables after a parameter update.
  void invalidate_tables() const;

  const GaussianConditional& gaussian() const { return gc_; }

 private:
  Tensor hyper_encode(const Tensor& y) const;
  Tensor hyper_decode(const Tensor& zq) const;  // scale map, floored
  void ensure_tables() const;

  TransformConfig cfg_;
  int hyper_channels_;
  GaussianConditional gc_;
  std::unique_ptr<Encoder> enc_;
  std::unique_ptr<Decoder> dec_;
  Tensor ha0w_, ha0b_, ha1w_, ha1b_, ha2w_, ha2b_;
  Tensor hs0w_, hs0b_, hs1w_, hs1b_, hs2w_, hs2b_;
  FactorizedPrior prior_;
  mutable std::vector<CdfTable> y_tables_, z_tables_;
  mutable bool tables_ready_ = false;
};

class VideoCodec : public Module {
 public:
  VideoCodec(const CodecConfig& cfg, Rng& rng);
  const CodecConfig& config() const { return cfg_; }

  // Differentiable pass over a short chunk of frames: frame 0 intra, the rest
  // predicted from the previous in-graph reconstruction.
  struct TrainOutput {
    Tensor distortion;  // sum over frames of per-frame MSE
    Tensor bits;        // total rate
    std::vector<Tensor> recons;
  };
  TrainOutput forward_train(const std::vector<Tensor>& frames, Rng& rng) const;

  // One self-contained chunk body per frame; intra every gop_size frames.
  std::vector<std::vector<uint8_t>> compress(
      const std::vector<Tensor>& frames,
      std::vector<Tensor>* recon_out = nullptr) const;
  std::vector<Tensor> decompress(
      const std::vector<std::vector<uint8_t>>& chunks, int h, int w) const;

  void invalidate_tables() const;

 private:
  // Warped prediction from the previous reconstruction and a raw 3-channel
  // motion field.
  Tensor predict(const Tensor& prev_recon, const Tensor& flow_raw) const;

  CodecConfig cfg_;
  CompressionNet iframe_, motion_, residual_;
};

}  // namespace ssf
