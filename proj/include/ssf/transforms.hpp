#pragma once

// Analysis/synthesis transform families: a strided-convolution baseline, a
// Swin encoder/decoder (windowed attention with relative position bias,
// shifted windows, patch merge/split), and the FLaWin variant that swaps the
// Swin MLP for a fused local-aware feed-forward with a three-branch depthwise
// Inception stage.

#include <memory>
#include <string>
#include <vector>

#include "ssf/module.hpp"
#include "ssf/tensor.hpp"

namespace ssf {

enum class Family { conv, swin, flawin };

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);

struct TransformConfig {
  Family family = Family::conv;
  int in_channels = 1;
  int embed_dim = 32;  // token dim C at the first stage; conv: hidden width
  std::vector<int> stage_depths{2, 2, 2, 2};
  int window_size = 4;
  std::vector<int> num_heads{2, 4, 8, 16};
  int patch_size = 2;
  int latent_channels = 32;
  double flaff_expansion = 3.0;

  int num_stages() const { return (int)stage_depths.size(); }
  int stage_dim(int s) const { return embed_dim << s; }
  // Spatial shrink from input to latent.
  int downsample_factor() const;
  // Throws naming the violated divisibility.
  void validate() const;
  void validate_input(int h, int w) const;
};

struct TokenMap {
  Tensor tokens;  // [h*w, c]
  int h = 0, w = 0;
};

// --- token/pixel plumbing ---
TokenMap patchify(const Tensor& frame, int patch_size);
Tensor unpatchify(const TokenMap& m, int patch_size, int out_channels);
Tensor tokens_to_chw(const Tensor& tokens, int h, int w);
Tensor chw_to_tokens(const Tensor& img);

// Window-major permutation of token indices under a cyclic shift; output row r
// holds source token index. Windows scan row-major, tokens within a window
// row-major.
std::vector<int> window_partition_index(int h, int w, int win, int shift);
std::vector<int> invert_permutation(const std::vector<int>& p);
// Additive attention masks (0 / -1e30) per window for shifted windows;
// empty vector when shift == 0.
std::vector<Tensor> shifted_window_masks(int h, int w, int win, int shift);
// Relative-position index into a flattened (2M-1)x(2M-1) bias table for every
// ordered token pair of an MxM window.
std::vector<int> relative_position_index(int win);

// --- layers ---
class LinearLayer : public Module {
 public:
  LinearLayer(int in, int out, Rng& rng, const std::string& name = "linear");
  Tensor forward(const Tensor& x) const { return linear(x, w_, b_); }
  Tensor w_, b_;
};

class LayerNorm : public Module {
 public:
  LayerNorm(int dim, const std::string& name = "ln");
  Tensor forward(const Tensor& x) const {
    return layer_norm_rows(x, gamma_, beta_);
  }
  Tensor gamma_, beta_;
};

class WindowAttention : public Module {
 public:
  WindowAttention(int dim, int heads, int window, Rng& rng);
  // x: window-partitioned tokens [nw*M^2, dim]; masks per window or empty.
  Tensor forward(const Tensor& x, const std::vector<Tensor>& masks) const;
  int dim() const { return dim_; }
  int window() const { return window_; }

  Tensor wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
  Tensor bias_table_;  // [heads, (2M-1)^2]

 private:
  int dim_, heads_, window_;
  std::vector<int> rel_index_;
};

class FeedForward : public Module {
 public:
  virtual Tensor forward(const Tensor& tokens, int h, int w) const = 0;
};

class Mlp : public FeedForward {
 public:
  Mlp(int dim, int hidden, Rng& rng);
  Tensor forward(const Tensor& tokens, int h, int w) const override;
  LinearLayer fc1_, fc2_;
};

// Three-branch depthwise 3x3 block over channel thirds, replicate padding.
class InceptionBlock : public Module {
 public:
  InceptionBlock(int channels, Rng& rng);
  Tensor forward(const Tensor& map) const;  // [c,h,w] -> [c,h,w]
  std::vector<Tensor> kernels_, biases_;  // one per branch

 private:
  int channels_;
};

class FlaFF : public FeedForward {
 public:
  FlaFF(int dim, double expansion, Rng& rng);
  Tensor forward(const Tensor& tokens, int h, int w) const override;
  int expanded_dim() const { return expanded_; }
  LinearLayer up_, down_;
  InceptionBlock inception_;

 private:
  int expanded_;
};

// Two consecutive blocks: W-MSA then SW-MSA with cyclic half-window shift,
// each followed by the family's feed-forward, all pre-norm residual.
class SwinBlockPair : public Module {
 public:
  SwinBlockPair(int dim, int heads, int window, Family family,
                double flaff_expansion, Rng& rng);
  Tensor forward(const Tensor& tokens, int h, int w) const;

  LayerNorm ln1_, ln2_, ln3_, ln4_;
  WindowAttention attn_, attn_shifted_;
  std::unique_ptr<FeedForward> ffn1_, ffn2_;

 private:
  int window_;
  Tensor attention(const WindowAttention& attn, const Tensor& tokens, int h,
                   int w, int shift) const;
};

class PatchMerge : public Module {
 public:
  PatchMerge(int dim, Rng& rng);
  TokenMap forward(const TokenMap& m) const;  // (c,h,w)->(2c,h/2,w/2)
  LinearLayer reduce_;
};

class PatchSplit : public Module {
 public:
  PatchSplit(int dim, Rng& rng);  // dim = coarse channel count 2c
  TokenMap forward(const TokenMap& m) const;  // (2c,h,w)->(c,2h,2w)
  LinearLayer expand_;
};

// --- whole transforms ---
class Encoder : public Module {
 public:
  virtual Tensor forward(const Tensor& img) const = 0;  // -> latent [cl,h',w']
};

class Decoder : public Module {
 public:
  virtual Tensor forward(const Tensor& latent) const = 0;  // -> image
};

std::unique_ptr<Encoder> build_encoder(const TransformConfig& cfg, Rng& rng);
std::unique_ptr<Decoder> build_decoder(const TransformConfig& cfg,
                                       int out_channels, Rng& rng);

}  // namespace ssf
