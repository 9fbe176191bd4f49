#include "ssf/transforms.hpp"

#include <cmath>
#include <stdexcept>

namespace ssf {

Family family_from_string(const std::string& s) {
  if (s == "conv") return Family::conv;
  if (s == "swin") return Family::swin;
  if (s == "flawin") return Family::flawin;
  throw std::invalid_argument("unknown transform family: " + s);
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::conv: return "conv";
    case Family::swin: return "swin";
    case Family::flawin: return "flawin";
  }
  return "?";
}

namespace {

constexpr int kConvLayers = 4;
constexpr int kConvKernel = 5;
constexpr double kMlpRatio = 4.0;

void check_cfg(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Tensor xavier(const Shape& s, int fan_in, int fan_out, Rng& rng) {
  Tensor t = Tensor::zeros(s);
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.data()) v = rng.uniform(-a, a);
  return t;
}

}  // namespace

int TransformConfig::downsample_factor() const {
  if (family == Family::conv) return 1 << kConvLayers;
  return patch_size << (num_stages() - 1);
}

void TransformConfig::validate() const {
  check_cfg(in_channels > 0 && embed_dim > 0 && latent_channels > 0 &&
                patch_size > 0,
            "TransformConfig: dimensions must be positive");
  if (family == Family::conv) return;
  check_cfg(!stage_depths.empty(), "TransformConfig: no stages");
  check_cfg(num_heads.size() == stage_depths.size(),
            "TransformConfig: num_heads must list one entry per stage");
  check_cfg(window_size > 0, "TransformConfig: window_size must be positive");
  for (int s = 0; s < num_stages(); ++s) {
    check_cfg(stage_depths[s] > 0 && stage_depths[s] % 2 == 0,
              "TransformConfig: stage_depths[" + std::to_string(s) +
                  "] must be a positive even count (blocks come in pairs)");
    check_cfg(stage_dim(s) % num_heads[s] == 0,
              "TransformConfig: stage dim " + std::to_string(stage_dim(s)) +
                  " not divisible by num_heads " +
                  std::to_string(num_heads[s]));
    if (family == Family::flawin) {
      const int ce = (int)std::lround(flaff_expansion * stage_dim(s));
      check_cfg(ce % 3 == 0,
                "TransformConfig: FLaFF expanded dim " + std::to_string(ce) +
                    " at stage " + std::to_string(s) +
                    " must be divisible by 3");
    }
  }
}

void TransformConfig::validate_input(int h, int w) const {
  const int f = downsample_factor();
  check_cfg(h % f == 0 && w % f == 0,
            "input " + std::to_string(h) + "x" + std::to_string(w) +
                " not divisible by total downsampling factor " +
                std::to_string(f));
  if (family == Family::conv) return;
  for (int s = 0; s < num_stages(); ++s) {
    const int hs = h / (patch_size << s), ws = w / (patch_size << s);
    check_cfg(hs % window_size == 0 && ws % window_size == 0,
              "token map " + std::to_string(hs) + "x" + std::to_string(ws) +
                  " at stage " + std::to_string(s) +
                  " not divisible by window_size " +
                  std::to_string(window_size));
  }
}

// ---------------------------------------------------------------------------
// token/pixel plumbing

TokenMap patchify(const Tensor& frame, int patch_size) {
  check_cfg(frame.shape().size() == 3, "patchify: frame must be [c,h,w]");
  const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  check_cfg(h % patch_size == 0 && w % patch_size == 0,
            "patchify: " + std::to_string(h) + "x" + std::to_string(w) +
                " not divisible by patch_size " + std::to_string(patch_size));
  const int p = patch_size, gh = h / p, gw = w / p, fl = c * p * p;
  std::vector<int> idx((size_t)gh * gw * fl);
  size_t r = 0;
  for (int py = 0; py < gh; ++py)
    for (int px = 0; px < gw; ++px)
      for (int ch = 0; ch < c; ++ch)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx)
            idx[r++] = (ch * h + py * p + dy) * w + px * p + dx;
  Tensor flat = gather_elems(reshape(frame, {(int)frame.size()}), std::move(idx));
  return {reshape(flat, {gh * gw, fl}), gh, gw};
}

Tensor unpatchify(const TokenMap& m, int patch_size, int out_channels) {
  const int p = patch_size, gh = m.h, gw = m.w, c = out_channels;
  const int h = gh * p, w = gw * p;
  check_cfg(m.tokens.dim(1) == c * p * p, "unpatchify: token length mismatch");
  std::vector<int> idx((size_t)c * h * w);
  for (int py = 0; py < gh; ++py)
    for (int px = 0; px < gw; ++px)
      for (int ch = 0; ch < c; ++ch)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx) {
            const int src = ((py * gw + px) * c * p * p) + (ch * p + dy) * p + dx;
            idx[(size_t)(ch * h + py * p + dy) * w + px * p + dx] = src;
          }
  Tensor flat =
      gather_elems(reshape(m.tokens, {(int)m.tokens.size()}), std::move(idx));
  return reshape(flat, {c, h, w});
}

Tensor tokens_to_chw(const Tensor& tokens, int h, int w) {
  const int c = tokens.dim(1);
  return reshape(transpose(tokens), {c, h, w});
}

Tensor chw_to_tokens(const Tensor& img) {
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  return transpose(reshape(img, {c, h * w}));
}

std::vector<int> window_partition_index(int h, int w, int win, int shift) {
  check_cfg(h % win == 0 && w % win == 0,
            "window partition: token map " + std::to_string(h) + "x" +
                std::to_string(w) + " not divisible by window " +
                std::to_string(win));
  std::vector<int> idx((size_t)h * w);
  size_t r = 0;
  for (int wy = 0; wy < h / win; ++wy)
    for (int wx = 0; wx < w / win; ++wx)
      for (int ty = 0; ty < win; ++ty)
        for (int tx = 0; tx < win; ++tx) {
          const int y = (wy * win + ty + shift) % h;
          const int x = (wx * win + tx + shift) % w;
          idx[r++] = y * w + x;
        }
  return idx;
}

std::vector<int> invert_permutation(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (size_t i = 0; i < p.size(); ++i) inv[p[i]] = (int)i;
  return inv;
}

std::vector<Tensor> shifted_window_masks(int h, int w, int win, int shift) {
  if (shift == 0) return {};
  // Region labels in shifted coordinates; wrapped tokens land in bands
  // [side-win, side-shift) and [side-shift, side) and must not attend across.
  auto band = [&](int v, int side) {
    if (v < side - win) return 0;
    return v < side - shift ? 1 : 2;
  };
  std::vector<int> ids((size_t)h * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) ids[(size_t)y * w + x] = band(y, h) * 3 + band(x, w);
  const int m2 = win * win;
  std::vector<Tensor> masks;
  for (int wy = 0; wy < h / win; ++wy)
    for (int wx = 0; wx < w / win; ++wx) {
      std::vector<int> wid(m2);
      int r = 0;
      for (int ty = 0; ty < win; ++ty)
        for (int tx = 0; tx < win; ++tx)
          wid[r++] = ids[(size_t)(wy * win + ty) * w + wx * win + tx];
      Tensor m = Tensor::zeros({m2, m2});
      for (int i = 0; i < m2; ++i)
        for (int j = 0; j < m2; ++j)
          if (wid[i] != wid[j]) m.data()[(size_t)i * m2 + j] = -1e30;
      masks.push_back(m);
    }
  return masks;
}

std::vector<int> relative_position_index(int win) {
  const int m2 = win * win, span = 2 * win - 1;
  std::vector<int> idx((size_t)m2 * m2);
  for (int i = 0; i < m2; ++i)
    for (int j = 0; j < m2; ++j) {
      const int dy = i / win - j / win + win - 1;
      const int dx = i % win - j % win + win - 1;
      idx[(size_t)i * m2 + j] = dy * span + dx;
    }
  return idx;
}

// ---------------------------------------------------------------------------
// layers

LinearLayer::LinearLayer(int in, int out, Rng& rng, const std::string&) {
  w_ = add_param("w", xavier({in, out}, in, out, rng));
  b_ = add_param("b", Tensor::zeros({out}));
}

LayerNorm::LayerNorm(int dim, const std::string&) {
  gamma_ = add_param("gamma", Tensor::full({dim}, 1.0));
  beta_ = add_param("beta", Tensor::zeros({dim}));
}

WindowAttention::WindowAttention(int dim, int heads, int window, Rng& rng)
    : dim_(dim), heads_(heads), window_(window) {
  check_cfg(dim % heads == 0, "WindowAttention: dim " + std::to_string(dim) +
                                  " not divisible by heads " +
                                  std::to_string(heads));
  wq_ = add_param("wq", xavier({dim, dim}, dim, dim, rng));
  bq_ = add_param("bq", Tensor::zeros({dim}));
  wk_ = add_param("wk", xavier({dim, dim}, dim, dim, rng));
  bk_ = add_param("bk", Tensor::zeros({dim}));
  wv_ = add_param("wv", xavier({dim, dim}, dim, dim, rng));
  bv_ = add_param("bv", Tensor::zeros({dim}));
  wo_ = add_param("wo", xavier({dim, dim}, dim, dim, rng));
  bo_ = add_param("bo", Tensor::zeros({dim}));
  const int span = 2 * window - 1;
  Tensor bt = Tensor::zeros({heads, span * span});
  for (auto& v : bt.data()) v = 0.02 * rng.normal();
  bias_table_ = add_param("bias_table", bt);
  rel_index_ = relative_position_index(window);
}

Tensor WindowAttention::forward(const Tensor& x,
                                const std::vector<Tensor>& masks) const {
  const int m2 = window_ * window_;
  check_cfg(x.shape().size() == 2 && x.dim(1) == dim_ && x.dim(0) % m2 == 0,
            "WindowAttention: expected [nw*" + std::to_string(m2) + "," +
                std::to_string(dim_) + "], got " + shape_str(x.shape()));
  const int nw = x.dim(0) / m2, d = dim_ / heads_;
  check_cfg(masks.empty() || (int)masks.size() == nw,
            "WindowAttention: mask count mismatch");
  const Tensor q = linear(x, wq_, bq_);
  const Tensor k = linear(x, wk_, bk_);
  const Tensor v = linear(x, wv_, bv_);
  const double scale = 1.0 / std::sqrt((double)d);
  std::vector<std::vector<Tensor>> out(nw, std::vector<Tensor>(heads_));
  for (int hd = 0; hd < heads_; ++hd) {
    const Tensor qh = slice_cols(q, hd * d, (hd + 1) * d);
    const Tensor kh = slice_cols(k, hd * d, (hd + 1) * d);
    const Tensor vh = slice_cols(v, hd * d, (hd + 1) * d);
    const Tensor bias = reshape(
        gather_elems(reshape(slice_rows(bias_table_, hd, hd + 1),
                             {bias_table_.dim(1)}),
                     rel_index_),
        {m2, m2});
    for (int wi = 0; wi < nw; ++wi) {
      const int r0 = wi * m2, r1 = (wi + 1) * m2;
      Tensor scores =
          matmul_nt(slice_rows(qh, r0, r1), slice_rows(kh, r0, r1)) * scale +
          bias;
      if (!masks.empty()) scores = scores + masks[wi];
      out[wi][hd] = matmul(softmax_rows(scores), slice_rows(vh, r0, r1));
    }
  }
  std::vector<Tensor> rows;
  rows.reserve(nw);
  for (int wi = 0; wi < nw; ++wi) rows.push_back(concat_cols(out[wi]));
  return linear(concat_rows(rows), wo_, bo_);
}

Mlp::Mlp(int dim, int hidden, Rng& rng)
    : fc1_(dim, hidden, rng), fc2_(hidden, dim, rng) {
  add_child("fc1", &fc1_);
  add_child("fc2", &fc2_);
}

Tensor Mlp::forward(const Tensor& tokens, int, int) const {
  return fc2_.forward(gelu(fc1_.forward(tokens)));
}

InceptionBlock::InceptionBlock(int channels, Rng& rng) : channels_(channels) {
  check_cfg(channels % 3 == 0, "InceptionBlock: channels " +
                                   std::to_string(channels) +
                                   " not divisible by 3");
  const int g = channels / 3;
  for (int br = 0; br < 3; ++br) {
    kernels_.push_back(add_param("branch" + std::to_string(br) + ".w",
                                 xavier({g, 3, 3}, 9, 9, rng)));
    biases_.push_back(add_param("branch" + std::to_string(br) + ".b",
                                Tensor::zeros({g})));
  }
}

Tensor InceptionBlock::forward(const Tensor& map) const {
  check_cfg(map.dim(0) == channels_, "InceptionBlock: channel mismatch");
  const int g = channels_ / 3;
  std::vector<Tensor> branches;
  for (int br = 0; br < 3; ++br)
    branches.push_back(depthwise3x3(slice_ch(map, br * g, (br + 1) * g),
                                    kernels_[br], biases_[br]));
  return concat_ch(branches);
}

namespace {
int expanded_dim_for(int dim, double expansion) {
  return (int)std::lround(expansion * dim);
}
}  // namespace

FlaFF::FlaFF(int dim, double expansion, Rng& rng)
    : up_(dim, expanded_dim_for(dim, expansion), rng),
      down_(expanded_dim_for(dim, expansion), dim, rng),
      inception_(expanded_dim_for(dim, expansion), rng),
      expanded_(expanded_dim_for(dim, expansion)) {
  add_child("up", &up_);
  add_child("down", &down_);
  add_child("inception", &inception_);
}

Tensor FlaFF::forward(const Tensor& tokens, int h, int w) const {
  Tensor x = gelu(up_.forward(tokens));
  Tensor map = tokens_to_chw(x, h, w);
  map = gelu(inception_.forward(map));
  return down_.forward(chw_to_tokens(map));
}

namespace {
std::unique_ptr<FeedForward> make_ffn(int dim, Family family, double expansion,
                                      Rng& rng) {
  if (family == Family::flawin)
    return std::make_unique<FlaFF>(dim, expansion, rng);
  return std::make_unique<Mlp>(dim, (int)std::lround(kMlpRatio * dim), rng);
}
}  // namespace

SwinBlockPair::SwinBlockPair(int dim, int heads, int window, Family family,
                             double flaff_expansion, Rng& rng)
    : ln1_(dim), ln2_(dim), ln3_(dim), ln4_(dim),
      attn_(dim, heads, window, rng),
      attn_shifted_(dim, heads, window, rng),
      ffn1_(make_ffn(dim, family, flaff_expansion, rng)),
      ffn2_(make_ffn(dim, family, flaff_expansion, rng)),
      window_(window) {
  add_child("ln1", &ln1_);
  add_child("ln2", &ln2_);
  add_child("ln3", &ln3_);
  add_child("ln4", &ln4_);
  add_child("attn", &attn_);
  add_child("attn_shifted", &attn_shifted_);
  add_child("ffn1", ffn1_.get());
  add_child("ffn2", ffn2_.get());
}

Tensor SwinBlockPair::attention(const WindowAttention& attn,
                                const Tensor& tokens, int h, int w,
                                int shift) const {
  const auto perm = window_partition_index(h, w, window_, shift);
  const auto masks = shifted_window_masks(h, w, window_, shift);
  Tensor y = attn.forward(gather_rows(tokens, perm), masks);
  return gather_rows(y, invert_permutation(perm));
}

Tensor SwinBlockPair::forward(const Tensor& tokens, int h, int w) const {
  Tensor z = tokens + attention(attn_, ln1_.forward(tokens), h, w, 0);
  z = z + ffn1_->forward(ln2_.forward(z), h, w);
  z = z + attention(attn_shifted_, ln3_.forward(z), h, w, window_ / 2);
  z = z + ffn2_->forward(ln4_.forward(z), h, w);
  return z;
}

PatchMerge::PatchMerge(int dim, Rng& rng) : reduce_(4 * dim, 2 * dim, rng) {
  add_child("reduce", &reduce_);
}

TokenMap PatchMerge::forward(const TokenMap& m) const {
  check_cfg(m.h % 2 == 0 && m.w % 2 == 0,
            "patch_merge: odd token map side " + std::to_string(m.h) + "x" +
                std::to_string(m.w));
  const int c = m.tokens.dim(1), oh = m.h / 2, ow = m.w / 2;
  std::vector<int> idx((size_t)m.h * m.w);
  size_t r = 0;
  for (int gy = 0; gy < oh; ++gy)
    for (int gx = 0; gx < ow; ++gx) {
      idx[r++] = (2 * gy) * m.w + 2 * gx;
      idx[r++] = (2 * gy) * m.w + 2 * gx + 1;
      idx[r++] = (2 * gy + 1) * m.w + 2 * gx;
      idx[r++] = (2 * gy + 1) * m.w + 2 * gx + 1;
    }
  Tensor grouped = reshape(gather_rows(m.tokens, std::move(idx)),
                           {oh * ow, 4 * c});
  return {reduce_.forward(grouped), oh, ow};
}

PatchSplit::PatchSplit(int dim, Rng& rng) : expand_(dim, 2 * dim, rng) {
  check_cfg(dim % 2 == 0, "patch_split: coarse dim must be even");
  add_child("expand", &expand_);
}

TokenMap PatchSplit::forward(const TokenMap& m) const {
  const int c2 = m.tokens.dim(1);      // coarse channels 2c
  const int c = c2 / 2;                // fine channels
  const int oh = m.h * 2, ow = m.w * 2;
  Tensor fine = reshape(expand_.forward(m.tokens), {m.h * m.w * 4, c});
  // Row g*4+k holds fine token k of coarse cell g; de-interleave to row-major.
  std::vector<int> idx((size_t)oh * ow);
  for (int gy = 0; gy < m.h; ++gy)
    for (int gx = 0; gx < m.w; ++gx) {
      const int g = gy * m.w + gx;
      idx[(size_t)(2 * gy) * ow + 2 * gx] = g * 4;
      idx[(size_t)(2 * gy) * ow + 2 * gx + 1] = g * 4 + 1;
      idx[(size_t)(2 * gy + 1) * ow + 2 * gx] = g * 4 + 2;
      idx[(size_t)(2 * gy + 1) * ow + 2 * gx + 1] = g * 4 + 3;
    }
  return {gather_rows(fine, std::move(idx)), oh, ow};
}

// ---------------------------------------------------------------------------
// whole transforms

namespace {

class SwinEncoder : public Encoder {
 public:
  SwinEncoder(const TransformConfig& cfg, Rng& rng)
      : cfg_(cfg),
        embed_(cfg.patch_size * cfg.patch_size * cfg.in_channels,
               cfg.embed_dim, rng) {
    add_child("embed", &embed_);
    const int S = cfg.num_stages();
    for (int s = 0; s < S; ++s) {
      for (int b = 0; b < cfg.stage_depths[s] / 2; ++b) {
        blocks_.push_back(std::make_unique<SwinBlockPair>(
            cfg.stage_dim(s), cfg.num_heads[s], cfg.window_size, cfg.family,
            cfg.flaff_expansion, rng));
        add_child("stage" + std::to_string(s) + ".pair" + std::to_string(b),
                  blocks_.back().get());
      }
      if (s + 1 < S) {
        merges_.push_back(std::make_unique<PatchMerge>(cfg.stage_dim(s), rng));
        add_child("merge" + std::to_string(s), merges_.back().get());
      }
    }
    head_ = std::make_unique<LinearLayer>(cfg.stage_dim(S - 1),
                                          cfg.latent_channels, rng);
    add_child("head", head_.get());
  }

  Tensor forward(const Tensor& img) const override {
    cfg_.validate_input(img.dim(1), img.dim(2));
    TokenMap m = patchify(img, cfg_.patch_size);
    m.tokens = embed_.forward(m.tokens);
    size_t bi = 0;
    for (int s = 0; s < cfg_.num_stages(); ++s) {
      for (int b = 0; b < cfg_.stage_depths[s] / 2; ++b)
        m.tokens = blocks_[bi++]->forward(m.tokens, m.h, m.w);
      if (s + 1 < cfg_.num_stages()) m = merges_[s]->forward(m);
    }
    return tokens_to_chw(head_->forward(m.tokens), m.h, m.w);
  }

 private:
  TransformConfig cfg_;
  LinearLayer embed_;
  std::vector<std::unique_ptr<SwinBlockPair>> blocks_;
  std::vector<std::unique_ptr<PatchMerge>> merges_;
  std::unique_ptr<LinearLayer> head_;
};

class SwinDecoder : public Decoder {
 public:
  SwinDecoder(const TransformConfig& cfg, int out_channels, Rng& rng)
      : cfg_(cfg), out_channels_(out_channels) {
    const int S = cfg.num_stages();
    head_inv_ = std::make_unique<LinearLayer>(cfg.latent_channels,
                                              cfg.stage_dim(S - 1), rng);
    add_child("head_inv", head_inv_.get());
    for (int s = S - 1; s >= 0; --s) {
      for (int b = 0; b < cfg.stage_depths[s] / 2; ++b) {
        blocks_.push_back(std::make_unique<SwinBlockPair>(
            cfg.stage_dim(s), cfg.num_heads[s], cfg.window_size, cfg.family,
            cfg.flaff_expansion, rng));
        add_child("stage" + std::to_string(s) + ".pair" + std::to_string(b),
                  blocks_.back().get());
      }
      if (s > 0) {
        splits_.push_back(std::make_unique<PatchSplit>(cfg.stage_dim(s), rng));
        add_child("split" + std::to_string(s), splits_.back().get());
      }
    }
    deembed_ = std::make_unique<LinearLayer>(
        cfg.embed_dim, cfg.patch_size * cfg.patch_size * out_channels, rng);
    add_child("deembed", deembed_.get());
  }

  Tensor forward(const Tensor& latent) const override {
    TokenMap m{chw_to_tokens(latent), latent.dim(1), latent.dim(2)};
    m.tokens = head_inv_->forward(m.tokens);
    size_t bi = 0, si = 0;
    for (int s = cfg_.num_stages() - 1; s >= 0; --s) {
      for (int b = 0; b < cfg_.stage_depths[s] / 2; ++b)
        m.tokens = blocks_[bi++]->forward(m.tokens, m.h, m.w);
      if (s > 0) m = splits_[si++]->forward(m);
    }
    m.tokens = deembed_->forward(m.tokens);
    return unpatchify(m, cfg_.patch_size, out_channels_);
  }

 private:
  TransformConfig cfg_;
  int out_channels_;
  std::unique_ptr<LinearLayer> head_inv_, deembed_;
  std::vector<std::unique_ptr<SwinBlockPair>> blocks_;
  std::vector<std::unique_ptr<PatchSplit>> splits_;
};

class ConvEncoder : public Encoder {
 public:
  ConvEncoder(const TransformConfig& cfg, Rng& rng) : cfg_(cfg) {
    const int k = kConvKernel;
    int ci = cfg.in_channels;
    for (int l = 0; l < kConvLayers; ++l) {
      const int co = (l == kConvLayers - 1) ? cfg.latent_channels
                                            : cfg.embed_dim;
      w_.push_back(add_param("conv" + std::to_string(l) + ".w",
                             xavier({co, ci, k, k}, ci * k * k, co * k * k,
                                    rng)));
      b_.push_back(add_param("conv" + std::to_string(l) + ".b",
                             Tensor::zeros({co})));
      ci = co;
    }
  }

  Tensor forward(const Tensor& img) const override {
    cfg_.validate_input(img.dim(1), img.dim(2));
    Tensor x = img;
    for (int l = 0; l < kConvLayers; ++l) {
      x = conv2d(x, w_[l], b_[l], 2, 2);
      if (l + 1 < kConvLayers) x = gelu(x);
    }
    return x;
  }

 private:
  TransformConfig cfg_;
  std::vector<Tensor> w_, b_;
};

class ConvDecoder : public Decoder {
 public:
  ConvDecoder(const TransformConfig& cfg, int out_channels, Rng& rng) {
    const int k = kConvKernel;
    int ci = cfg.latent_channels;
    for (int l = 0; l < kConvLayers; ++l) {
      const int co = (l == kConvLayers - 1) ? out_channels : cfg.embed_dim;
      w_.push_back(add_param("tconv" + std::to_string(l) + ".w",
                             xavier({ci, co, k, k}, ci * k * k, co * k * k,
                                    rng)));
      b_.push_back(add_param("tconv" + std::to_string(l) + ".b",
                             Tensor::zeros({co})));
      ci = co;
    }
  }

  Tensor forward(const Tensor& latent) const override {
    Tensor x = latent;
    for (int l = 0; l < kConvLayers; ++l) {
      x = conv_transpose2d(x, w_[l], b_[l], 2, 2, 1);
      if (l + 1 < kConvLayers) x = gelu(x);
    }
    return x;
  }

 private:
  std::vector<Tensor> w_, b_;
};

}  // namespace

std::unique_ptr<Encoder> build_encoder(const TransformConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.family == Family::conv)
    return std::make_unique<ConvEncoder>(cfg, rng);
  return std::make_unique<SwinEncoder>(cfg, rng);
}

std::unique_ptr<Decoder> build_decoder(const TransformConfig& cfg,
                                       int out_channels, Rng& rng) {
  cfg.validate();
  if (cfg.family == Family::conv)
    return std::make_unique<ConvDecoder>(cfg, out_channels, rng);
  return std::make_unique<SwinDecoder>(cfg, out_channels, rng);
}

}  // namespace ssf
