#include "ssf/codec.hpp"

#include <cmath>
#include <stdexcept>

#include "ssf/bitstream.hpp"

namespace ssf {

namespace {

Tensor conv_init(const Shape& s, int fan_in, int fan_out, Rng& rng) {
  Tensor t = Tensor::zeros(s);
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.data()) v = rng.uniform(-a, a);
  return t;
}

// softplus(0.54) ~ 1, so scales start near 1 + sigma_floor.
constexpr double kScaleBiasInit = 0.54;

}  // namespace

// ---------------------------------------------------------------------------
// CodecConfig

void CodecConfig::validate() const {
  if (frame_channels <= 0 || gop_size <= 0 || hyper_channels <= 0)
    throw std::invalid_argument(
        "CodecConfig: channels and gop_size must be positive");
  subnet_config(frame_channels).validate();
  scale_space.validate();
}

TransformConfig CodecConfig::subnet_config(int in_channels) const {
  TransformConfig t = transform;
  t.family = family;
  t.in_channels = in_channels;
  return t;
}

int CodecConfig::downsample_factor() const {
  return subnet_config(1).downsample_factor();
}

void CodecConfig::validate_frame(int h, int w) const {
  subnet_config(frame_channels).validate_input(h, w);
  const int f = downsample_factor();
  const int lh = h / f, lw = w / f;
  if (lh % 4 != 0 || lw % 4 != 0)
    throw std::invalid_argument(
        "frame " + std::to_string(h) + "x" + std::to_string(w) + ": latent " +
        std::to_string(lh) + "x" + std::to_string(lw) +
        " must be divisible by 4 for the hyper transforms");
}

nlohmann::json CodecConfig::to_json() const {
  nlohmann::json j;
  j["family"] = family_to_string(family);
  j["frame_channels"] = frame_channels;
  j["gop_size"] = gop_size;
  j["hyper_channels"] = hyper_channels;
  j["transform"] = {{"embed_dim", transform.embed_dim},
                    {"stage_depths", transform.stage_depths},
                    {"window_size", transform.window_size},
                    {"num_heads", transform.num_heads},
                    {"patch_size", transform.patch_size},
                    {"latent_channels", transform.latent_channels},
                    {"flaff_expansion", transform.flaff_expansion}};
  j["scale_space"] = {{"scales", scale_space.scales},
                      {"kernel_truncation", scale_space.kernel_truncation}};
  return j;
}

CodecConfig CodecConfig::from_json(const nlohmann::json& j) {
  CodecConfig c;
  c.family = family_from_string(j.at("family").get<std::string>());
  c.frame_channels = j.at("frame_channels").get<int>();
  c.gop_size = j.at("gop_size").get<int>();
  c.hyper_channels = j.at("hyper_channels").get<int>();
  const auto& t = j.at("transform");
  c.transform.embed_dim = t.at("embed_dim").get<int>();
  c.transform.stage_depths = t.at("stage_depths").get<std::vector<int>>();
  c.transform.window_size = t.at("window_size").get<int>();
  c.transform.num_heads = t.at("num_heads").get<std::vector<int>>();
  c.transform.patch_size = t.at("patch_size").get<int>();
  c.transform.latent_channels = t.at("latent_channels").get<int>();
  c.transform.flaff_expansion = t.at("flaff_expansion").get<double>();
  const auto& s = j.at("scale_space");
  c.scale_space.scales = s.at("scales").get<std::vector<double>>();
  c.scale_space.kernel_truncation = s.at("kernel_truncation").get<double>();
  return c;
}

// ---------------------------------------------------------------------------
// CompressionNet

CompressionNet::CompressionNet(const TransformConfig& cfg, int out_channels,
                               int hyper_channels, Rng& rng)
    : cfg_(cfg), hyper_channels_(hyper_channels), prior_(hyper_channels, rng) {
  cfg_.validate();
  enc_ = build_encoder(cfg_, rng);
  dec_ = build_decoder(cfg_, out_channels, rng);
  add_child("enc", enc_.get());
  add_child("dec", dec_.get());
  const int lc = cfg_.latent_channels, hc = hyper_channels;
  ha0w_ = add_param("ha0.w", conv_init({hc, lc, 3, 3}, lc * 9, hc * 9, rng));
  ha0b_ = add_param("ha0.b", Tensor::zeros({hc}));
  ha1w_ = add_param("ha1.w", conv_init({hc, hc, 5, 5}, hc * 25, hc * 25, rng));
  ha1b_ = add_param("ha1.b", Tensor::zeros({hc}));
  ha2w_ = add_param("ha2.w", conv_init({hc, hc, 5, 5}, hc * 25, hc * 25, rng));
  ha2b_ = add_param("ha2.b", Tensor::zeros({hc}));
  hs0w_ = add_param("hs0.w", conv_init({hc, hc, 5, 5}, hc * 25, hc * 25, rng));
  hs0b_ = add_param("hs0.b", Tensor::zeros({hc}));
  hs1w_ = add_param("hs1.w", conv_init({hc, hc, 5, 5}, hc * 25, hc * 25, rng));
  hs1b_ = add_param("hs1.b", Tensor::zeros({hc}));
  hs2w_ = add_param("hs2.w", conv_init({lc, hc, 3, 3}, hc * 9, lc * 9, rng));
  hs2b_ = add_param("hs2.b", Tensor::full({lc}, kScaleBiasInit));
  add_child("prior", &prior_);
}

Tensor CompressionNet::hyper_encode(const Tensor& y) const {
  Tensor u = gelu(conv2d(y, ha0w_, ha0b_, 1, 1));
  u = gelu(conv2d(u, ha1w_, ha1b_, 2, 2));
  return conv2d(u, ha2w_, ha2b_, 2, 2);
}

Tensor CompressionNet::hyper_decode(const Tensor& zq) const {
  Tensor u = gelu(conv_transpose2d(zq, hs0w_, hs0b_, 2, 2, 1));
  u = gelu(conv_transpose2d(u, hs1w_, hs1b_, 2, 2, 1));
  return softplus(conv2d(u, hs2w_, hs2b_, 1, 1)) + gc_.sigma_floor;
}

NetOutput CompressionNet::forward_train(const Tensor& x, Rng& rng) const {
  Tensor y = enc_->forward(x);
  Tensor z = hyper_encode(y);
  Tensor zq = quantize_train(z, rng);
  Tensor sigma = hyper_decode(zq);
  Tensor yq = quantize_train(y, rng);
  Tensor py = gaussian_likelihood(yq, sigma, gc_.sigma_floor);
  Tensor pz = prior_.likelihood(zq);
  NetOutput o;
  o.recon = dec_->forward(yq);
  o.bits = rate_bits(py) + rate_bits(pz);
  return o;
}

void CompressionNet::ensure_tables() const {
  if (tables_ready_) return;
  z_tables_ = prior_.build_cdf_tables(gc_.tail_mass);
  y_tables_ = gc_.build_cdf_tables();
  tables_ready_ = true;
}

void CompressionNet::invalidate_tables() const {
  tables_ready_ = false;
  y_tables_.clear();
  z_tables_.clear();
}

CompressionNet::Coded CompressionNet::encode(const Tensor& x,
                                             Tensor* recon_out) const {
  NoGradGuard ng;
  ensure_tables();
  Tensor y = enc_->forward(x);
  Tensor z = hyper_encode(y);
  const auto zr = quantize_test(z.data());
  Tensor zq = Tensor::from(z.shape(), zr);
  Tensor sigma = hyper_decode(zq);
  const auto yr = quantize_test(y.data());

  const size_t zsp = (size_t)z.dim(1) * z.dim(2);
  std::vector<int> zi(zr.size());
  std::vector<const CdfTable*> zt(zr.size());
  for (size_t i = 0; i < zr.size(); ++i) {
    zi[i] = (int)std::llround(zr[i]);
    zt[i] = &z_tables_[i / zsp];
  }
  std::vector<int> yi(yr.size());
  std::vector<const CdfTable*> yt(yr.size());
  for (size_t i = 0; i < yr.size(); ++i) {
    yi[i] = (int)std::llround(yr[i]);
    yt[i] = &y_tables_[gc_.scale_index(sigma.data()[i])];
  }
  Coded c;
  c.z = range_encode(zi, zt);
  c.y = range_encode(yi, yt);
  if (recon_out) *recon_out = dec_->forward(Tensor::from(y.shape(), yr));
  return c;
}

Tensor CompressionNet::decode(const Coded& c, int lh, int lw) const {
  NoGradGuard ng;
  ensure_tables();
  const int hh = lh / 4, hw = lw / 4;
  const size_t zsp = (size_t)hh * hw;
  std::vector<const CdfTable*> zt((size_t)hyper_channels_ * zsp);
  for (size_t i = 0; i < zt.size(); ++i) zt[i] = &z_tables_[i / zsp];
  const auto zi = range_decode(c.z, zt);
  std::vector<double> zv(zi.begin(), zi.end());
  Tensor zq = Tensor::from({hyper_channels_, hh, hw}, std::move(zv));
  Tensor sigma = hyper_decode(zq);

  std::vector<const CdfTable*> yt(sigma.size());
  for (size_t i = 0; i < yt.size(); ++i)
    yt[i] = &y_tables_[gc_.scale_index(sigma.data()[i])];
  const auto yi = range_decode(c.y, yt);
  std::vector<double> yv(yi.begin(), yi.end());
  Tensor yq = Tensor::from({cfg_.latent_channels, lh, lw}, std::move(yv));
  return dec_->forward(yq);
}

// ---------------------------------------------------------------------------
// VideoCodec

namespace {
const CodecConfig& validated(const CodecConfig& c) {
  c.validate();
  return c;
}
}  // namespace

VideoCodec::VideoCodec(const CodecConfig& cfg, Rng& rng)
    : cfg_(validated(cfg)),
      iframe_(cfg_.subnet_config(cfg_.frame_channels), cfg_.frame_channels,
              cfg_.hyper_channels, rng),
      motion_(cfg_.subnet_config(2 * cfg_.frame_channels), 3,
              cfg_.hyper_channels, rng),
      residual_(cfg_.subnet_config(2 * cfg_.frame_channels),
                cfg_.frame_channels, cfg_.hyper_channels, rng) {
  add_child("iframe", &iframe_);
  add_child("motion", &motion_);
  add_child("residual", &residual_);
}

Tensor VideoCodec::predict(const Tensor& prev_recon,
                           const Tensor& flow_raw) const {
  const double m = cfg_.scale_space.num_scales();
  Tensor fx = slice_ch(flow_raw, 0, 1);
  Tensor fy = slice_ch(flow_raw, 1, 2);
  Tensor fz = m * sigmoid(slice_ch(flow_raw, 2, 3));
  Tensor vol = build_volume(prev_recon, cfg_.scale_space);
  return warp(vol, fx, fy, fz);
}

VideoCodec::TrainOutput VideoCodec::forward_train(
    const std::vector<Tensor>& frames, Rng& rng) const {
  if (frames.empty())
    throw std::invalid_argument("forward_train: empty frame chunk");
  cfg_.validate_frame(frames[0].dim(1), frames[0].dim(2));
  TrainOutput o;
  Tensor prev;
  for (size_t i = 0; i < frames.size(); ++i) {
    const Tensor& x = frames[i];
    Tensor recon, bits;
    if (i == 0) {
      auto r = iframe_.forward_train(x, rng);
      recon = clamp01(r.recon);
      bits = r.bits;
    } else {
      auto m = motion_.forward_train(concat_ch({x, prev}), rng);
      Tensor xbar = predict(prev, m.recon);
      auto r = residual_.forward_train(concat_ch({x, xbar}), rng);
      recon = clamp01(xbar + r.recon);
      bits = m.bits + r.bits;
    }
    Tensor d = mse(recon, x);
    o.distortion = o.distortion.defined() ? o.distortion + d : d;
    o.bits = o.bits.defined() ? o.bits + bits : bits;
    o.recons.push_back(recon);
    prev = recon;
  }
  return o;
}

std::vector<std::vector<uint8_t>> VideoCodec::compress(
    const std::vector<Tensor>& frames, std::vector<Tensor>* recon_out) const {
  NoGradGuard ng;
  if (frames.empty()) return {};
  const int h = frames[0].dim(1), w = frames[0].dim(2);
  cfg_.validate_frame(h, w);
  const int f = cfg_.downsample_factor();
  const int lh = h / f, lw = w / f;
  std::vector<std::vector<uint8_t>> chunks;
  Tensor prev;
  for (size_t i = 0; i < frames.size(); ++i) {
    const Tensor& x = frames[i];
    std::vector<uint8_t> body;
    if (i % (size_t)cfg_.gop_size == 0) {
      put_u8(body, 0);
      Tensor raw;
      auto c = iframe_.encode(x, &raw);
      put_bytes(body, c.z);
      put_bytes(body, c.y);
      prev = clamp01(raw);
    } else {
      put_u8(body, 1);
      auto mc = motion_.encode(concat_ch({x, prev}));
      Tensor flow = motion_.decode(mc, lh, lw);
      Tensor xbar = predict(prev, flow);
      Tensor raw;
      auto rc = residual_.encode(concat_ch({x, xbar}), &raw);
      put_bytes(body, mc.z);
      put_bytes(body, mc.y);
      put_bytes(body, rc.z);
      put_bytes(body, rc.y);
      prev = clamp01(xbar + raw);
    }
    chunks.push_back(std::move(body));
    if (recon_out) recon_out->push_back(prev);
  }
  return chunks;
}

std::vector<Tensor> VideoCodec::decompress(
    const std::vector<std::vector<uint8_t>>& chunks, int h, int w) const {
  NoGradGuard ng;
  cfg_.validate_frame(h, w);
  const int f = cfg_.downsample_factor();
  const int lh = h / f, lw = w / f;
  std::vector<Tensor> out;
  Tensor prev;
  for (size_t i = 0; i < chunks.size(); ++i) {
    try {
      ByteReader r(chunks[i]);
      const uint8_t type = r.u8();
      const uint8_t expected = (i % (size_t)cfg_.gop_size == 0) ? 0 : 1;
      if (type != expected)
        throw DecodeError("unexpected chunk type " + std::to_string(type));
      if (type == 0) {
        CompressionNet::Coded c;
        c.z = r.bytes();
        c.y = r.bytes();
        prev = clamp01(iframe_.decode(c, lh, lw));
      } else {
        CompressionNet::Coded mc, rc;
        mc.z = r.bytes();
        mc.y = r.bytes();
        rc.z = r.bytes();
        rc.y = r.bytes();
        Tensor flow = motion_.decode(mc, lh, lw);
        Tensor xbar = predict(prev, flow);
        prev = clamp01(xbar + residual_.decode(rc, lh, lw));
      }
    } catch (const DecodeError& e) {
      throw DecodeError("frame " + std::to_string(i) + ": " + e.what());
    }
    out.push_back(prev);
  }
  return out;
}

void VideoCodec::invalidate_tables() const {
  iframe_.invalidate_tables();
  motion_.invalidate_tables();
  residual_.invalidate_tables();
}

}  // namespace ssf
