// Acceptance harness: each numbered criterion is an independent end-to-end
// check runnable as `acceptance N`. Every criterion prints exactly one
// "criterion N ...: PASS/FAIL" line; the exit code is nonzero on failure.

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ssf/bitstream.hpp"
#include "ssf/checkpoint.hpp"
#include "ssf/codec.hpp"
#include "ssf/dataset.hpp"
#include "ssf/metrics.hpp"
#include "ssf/report.hpp"
#include "ssf/scale_space.hpp"
#include "ssf/training.hpp"
#include "ssf/transforms.hpp"
#include "testutil.hpp"

using namespace ssf;
using ssftest::grad_check;
using ssftest::randn;

namespace {

struct TempDir {
  std::filesystem::path p;
  explicit TempDir(const char* tag) {
    p = std::filesystem::temp_directory_path() /
        (std::string("ssf_accept_") + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
  }
  ~TempDir() { std::filesystem::remove_all(p); }
  std::string file(const std::string& name) const { return (p / name).string(); }
  std::string dir() const { return p.string(); }
};

CodecConfig toy_conv_config() {
  CodecConfig cfg;
  cfg.family = Family::conv;
  cfg.gop_size = 30;
  cfg.hyper_channels = 4;
  cfg.transform.embed_dim = 6;
  cfg.transform.latent_channels = 4;
  cfg.scale_space.scales = {1.0, 2.0, 4.0};
  return cfg;
}

CodecConfig toy_token_config(Family fam) {
  CodecConfig cfg;
  cfg.family = fam;
  cfg.gop_size = 30;
  cfg.hyper_channels = 4;
  cfg.transform.embed_dim = 6;
  cfg.transform.stage_depths = {2};
  cfg.transform.num_heads = {2};
  cfg.transform.window_size = 4;
  cfg.transform.patch_size = 2;
  cfg.transform.latent_channels = 4;
  cfg.transform.flaff_expansion = 3.0;
  cfg.scale_space.scales = {1.0, 2.0, 4.0};
  return cfg;
}

TrainConfig toy_train_config(int steps, int crop) {
  TrainConfig tc;
  tc.lambda = 0.01;
  tc.batch_size = 2;
  tc.crop = crop;
  tc.chunk_length = 4;
  tc.max_steps = steps;
  tc.lr_initial = 1e-3;
  tc.lr_final = 1e-4;
  tc.seed = 11;
  return tc;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Naive per-pixel trilinear sample with clamp-to-edge semantics.
double trilinear_ref(const std::vector<double>& vol, int m1, int c, int h,
                     int w, int ch, double x, double y, double z) {
  z = std::clamp(z, 0.0, (double)(m1 - 1));
  x = std::clamp(x, 0.0, (double)(w - 1));
  y = std::clamp(y, 0.0, (double)(h - 1));
  const int x0 = (int)std::floor(x), y0 = (int)std::floor(y),
            z0 = (int)std::floor(z);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1),
            z1 = std::min(z0 + 1, m1 - 1);
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  auto at = [&](int zz, int yy, int xx) {
    return vol[(((size_t)zz * c + ch) * h + yy) * w + xx];
  };
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double c00 = lerp(at(z0, y0, x0), at(z0, y0, x1), fx);
  const double c01 = lerp(at(z0, y1, x0), at(z0, y1, x1), fx);
  const double c10 = lerp(at(z1, y0, x0), at(z1, y0, x1), fx);
  const double c11 = lerp(at(z1, y1, x0), at(z1, y1, x1), fx);
  return lerp(lerp(c00, c01, fy), lerp(c10, c11, fy), fz);
}

// Explicit per-pair attention loop (one window, multi-head).
std::vector<double> naive_attention(const WindowAttention& a,
                                    const std::vector<double>& x, int n,
                                    int dim, int heads) {
  const int d = dim / heads;
  auto proj = [&](const Tensor& w, const Tensor& b) {
    std::vector<double> out((size_t)n * dim, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j) {
        double acc = b.data()[j];
        for (int k = 0; k < dim; ++k)
          acc += x[(size_t)i * dim + k] * w.data()[(size_t)k * dim + j];
        out[(size_t)i * dim + j] = acc;
      }
    return out;
  };
  const auto q = proj(a.wq_, a.bq_), k = proj(a.wk_, a.bk_),
             v = proj(a.wv_, a.bv_);
  const auto rel = relative_position_index(a.window());
  const int span2 = (2 * a.window() - 1) * (2 * a.window() - 1);
  std::vector<double> concat((size_t)n * dim, 0.0);
  for (int hd = 0; hd < heads; ++hd)
    for (int i = 0; i < n; ++i) {
      std::vector<double> s(n);
      double mx = -1e300;
      for (int j = 0; j < n; ++j) {
        double acc = 0;
        for (int cch = 0; cch < d; ++cch)
          acc += q[(size_t)i * dim + hd * d + cch] *
                 k[(size_t)j * dim + hd * d + cch];
        acc /= std::sqrt((double)d);
        acc += a.bias_table_.data()[(size_t)hd * span2 + rel[(size_t)i * n + j]];
        s[j] = acc;
        mx = std::max(mx, acc);
      }
      double z = 0;
      for (int j = 0; j < n; ++j) z += (s[j] = std::exp(s[j] - mx));
      for (int j = 0; j < n; ++j) s[j] /= z;
      for (int cch = 0; cch < d; ++cch) {
        double acc = 0;
        for (int j = 0; j < n; ++j)
          acc += s[j] * v[(size_t)j * dim + hd * d + cch];
        concat[(size_t)i * dim + hd * d + cch] = acc;
      }
    }
  std::vector<double> out((size_t)n * dim, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) {
      double acc = a.bo_.data()[j];
      for (int cch = 0; cch < dim; ++cch)
        acc += concat[(size_t)i * dim + cch] * a.wo_.data()[(size_t)cch * dim + j];
      out[(size_t)i * dim + j] = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------

bool criterion_1(std::string& msg) {
  Rng rng(1);
  ScaleSpaceConfig cfg;
  Tensor frame = Tensor::zeros({2, 16, 16});
  for (auto& v : frame.data()) v = rng.uniform01();
  Tensor vol = build_volume(frame, cfg);
  Tensor zero = Tensor::zeros({16, 16});
  Tensor out = warp(vol, zero, zero, zero);
  const double err = max_abs_diff(out.data(), frame.data());
  msg = "zero-flow warp max abs error " + sci(err);
  return err <= 1e-6;
}

bool criterion_2(std::string& msg) {
  Rng rng(2);
  ScaleSpaceConfig cfg;
  cfg.scales = {1.0, 2.0};  // 3 slices: fz spans [0, 2]
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor frame = Tensor::zeros({1, 8, 8});
    for (auto& v : frame.data()) v = rng.uniform01();
    Tensor vol = build_volume(frame, cfg);
    Tensor fx = randn({8, 8}, rng, 3.0), fy = randn({8, 8}, rng, 3.0);
    Tensor fz = Tensor::zeros({8, 8});
    for (auto& v : fz.data()) v = rng.uniform(0.0, 2.0);
    Tensor out = warp(vol, fx, fy, fz);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const size_t i = (size_t)y * 8 + x;
        const double ref =
            trilinear_ref(vol.data(), 3, 1, 8, 8, 0, x + fx.data()[i],
                          y + fy.data()[i], fz.data()[i]);
        worst = std::max(worst, std::abs(out.data()[i] - ref));
      }
  }
  msg = "trilinear warp vs naive loop, worst abs error " +
        sci(worst) + " over 50 random 8x8 fields";
  return worst <= 1e-5;
}

bool criterion_3(std::string& msg) {
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int heads = 1 + trial % 3;
    const int dim = 6 * heads;
    const int win = (trial % 2) ? 4 : 2;  // 16 or 4 tokens
    WindowAttention a(dim, heads, win, rng);
    const int n = win * win;
    Tensor x = randn({n, dim}, rng);
    Tensor out = a.forward(x, {});
    const auto ref = naive_attention(a, x.data(), n, dim, heads);
    worst = std::max(worst, max_abs_diff(out.data(), ref));
  }
  // the shifted-window machinery at shift 0 (same cyclic permutation, masks
  // from the shifted builder) is bitwise identical to the plain windowed path
  WindowAttention a(6, 2, 4, rng);
  Tensor x = randn({64, 6}, rng);  // 8x8 token grid, 4 windows
  const auto perm_w = window_partition_index(8, 8, 4, 0);
  Tensor w_msa = gather_rows(a.forward(gather_rows(x, perm_w), {}),
                             invert_permutation(perm_w));
  const auto perm_s = window_partition_index(8, 8, 4, 0);
  auto masks = shifted_window_masks(8, 8, 4, 0);
  if (masks.empty())  // shift 0 blocks nothing; an explicit all-zero mask
    masks.assign(4, Tensor::zeros({16, 16}));
  Tensor sw_msa = gather_rows(a.forward(gather_rows(x, perm_s), masks),
                              invert_permutation(perm_s));
  bool bitwise = w_msa.data() == sw_msa.data();
  msg = "oracle worst abs error " + sci(worst) +
        "; shift-0 routed path bitwise equal: " + (bitwise ? "yes" : "no");
  return worst <= 1e-5 && bitwise;
}

bool criterion_4(std::string& msg) {
  Rng rng(4);
  double worst = 0.0;
  // random block vs nested-loop depthwise reference
  for (int trial = 0; trial < 10; ++trial) {
    const int c = 6, side = 7;
    InceptionBlock ib(c, rng);
    Tensor in = randn({c, side, side}, rng);
    Tensor out = ib.forward(in);
    for (int ch = 0; ch < c; ++ch) {
      const int br = ch / 2, lc = ch % 2;
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          double acc = ib.biases_[br].data()[lc];
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int sy = std::clamp(y + dy, 0, side - 1);
              const int sx = std::clamp(x + dx, 0, side - 1);
              acc += in.data()[((size_t)ch * side + sy) * side + sx] *
                     ib.kernels_[br].data()[(size_t)lc * 9 + (dy + 1) * 3 +
                                            dx + 1];
            }
          worst = std::max(
              worst,
              std::abs(out.data()[((size_t)ch * side + y) * side + x] - acc));
        }
    }
  }
  // centered delta kernels: exact identity
  InceptionBlock ident(3, rng);
  for (int br = 0; br < 3; ++br) {
    for (auto& v : ident.kernels_[br].data()) v = 0.0;
    for (auto& v : ident.biases_[br].data()) v = 0.0;
    ident.kernels_[br].data()[4] = 1.0;
  }
  Tensor in = randn({3, 5, 5}, rng);
  Tensor out = ident.forward(in);
  const bool exact = out.data() == in.data();
  msg = "depthwise oracle worst abs error " + sci(worst) +
        "; identity kernels exact: " + (exact ? "yes" : "no");
  return worst <= 1e-6 && exact;
}

bool criterion_5(std::string& msg) {
  Rng rng(5);
  double worst = 0.0;
  {  // warp (through the scale-space volume)
    ScaleSpaceConfig cfg;
    cfg.scales = {1.0, 2.0};
    Tensor frame = randn({1, 6, 6}, rng, 0.3) + 0.5;
    Tensor fx = randn({6, 6}, rng, 0.5), fy = randn({6, 6}, rng, 0.5);
    Tensor fz = randn({6, 6}, rng, 0.3) + 1.0;
    Tensor target = randn({1, 6, 6}, rng, 0.3);
    worst = std::max(
        worst,
        grad_check(
            [&] { return mse(warp(build_volume(frame, cfg), fx, fy, fz), target); },
            {frame, fx, fy, fz}, 1e-6));
  }
  {  // attention
    WindowAttention a(6, 2, 2, rng);
    Tensor x = randn({4, 6}, rng, 0.5);
    Tensor target = randn({4, 6}, rng, 0.5);
    worst = std::max(
        worst, grad_check([&] { return mse(a.forward(x, {}), target); },
                          {x, a.wq_, a.bias_table_, a.wo_}));
  }
  {  // FLaFF
    FlaFF f(6, 2.0, rng);
    Tensor x = randn({16, 6}, rng, 0.5);
    Tensor target = randn({16, 6}, rng, 0.5);
    worst = std::max(
        worst, grad_check([&] { return mse(f.forward(x, 4, 4), target); },
                          {x, f.up_.w_, f.inception_.kernels_[1], f.down_.w_}));
  }
  {  // full rate term with frozen quantization noise
    Tensor y = randn({2, 4, 4}, rng);
    Tensor raw = randn({2, 4, 4}, rng, 0.3);
    worst = std::max(worst, grad_check(
                                [&] {
                                  Rng noise(77);
                                  Tensor yq = quantize_train(y, noise);
                                  Tensor sigma = softplus(raw) + 0.11;
                                  return rate_bits(
                                      gaussian_likelihood(yq, sigma, 0.11));
                                },
                                {y, raw}));
  }
  msg = "worst relative gradient error " + sci(worst);
  return worst <= 1e-4;
}

bool criterion_6(std::string& msg) {
  Rng rng(6);
  auto make_table = [&](int support) {
    CdfTable t;
    t.min_value = -support / 2;
    t.num_values = support;
    std::vector<double> pmf;
    double total = 0.0;
    for (int i = 0; i < support; ++i) {
      pmf.push_back(0.05 + rng.uniform01());
      total += pmf.back();
    }
    for (auto& p : pmf) p /= total * (1.0 + 1e-4);
    pmf.push_back(1e-4 / (1.0 + 1e-4));  // escape
    auto f = quantize_pmf(pmf);
    t.cdf.assign(1, 0);
    for (uint32_t v : f) t.cdf.push_back(t.cdf.back() + v);
    return t;
  };
  std::vector<CdfTable> pool;
  for (int i = 0; i < 8; ++i) pool.push_back(make_table(3 + 4 * i));

  int mismatches = 0, bound_violations = 0;
  for (int cycle = 0; cycle < 10000; ++cycle) {
    const int len = rng.uniform_int(1, 64);
    std::vector<int> values;
    std::vector<const CdfTable*> tables;
    for (int i = 0; i < len; ++i) {
      const CdfTable* t = &pool[rng.uniform_int(0, (int)pool.size() - 1)];
      tables.push_back(t);
      if (rng.uniform01() < 0.01)  // occasional out-of-support escape
        values.push_back(rng.uniform_int(-100000, 100000));
      else
        values.push_back(t->min_value + rng.uniform_int(0, t->num_values - 1));
    }
    const auto bytes = range_encode(values, tables);
    if (range_decode(bytes, tables) != values) ++mismatches;
    const double est = table_rate_bits(values, tables);
    const double actual = 8.0 * (double)bytes.size();
    if (actual < est - 8.0 || actual > 1.02 * est + 64.0) ++bound_violations;
  }
  msg = "10000 cycles: " + std::to_string(mismatches) + " mismatches, " +
        std::to_string(bound_violations) + " length-bound violations";
  return mismatches == 0 && bound_violations == 0;
}

bool criterion_7(std::string& msg) {
  TempDir tmp("e2e");
  gen_synthetic(tmp.dir(), 30, 64, 21);
  SequenceDataset data = load_dataset(tmp.dir());
  Rng rng(7);
  VideoCodec codec(toy_conv_config(), rng);

  std::vector<Tensor> enc_recons;
  auto chunks = codec.compress(data.frames, &enc_recons);
  Container c;
  c.header.width = 64;
  c.header.height = 64;
  c.header.gop_size = 30;
  c.header.frame_count = 30;
  c.header.model_digest = param_digest(codec);
  c.chunks = chunks;
  write_container(tmp.file("clip.ssfv"), c);
  Container back = read_container(tmp.file("clip.ssfv"));

  int i_chunks = 0, p_chunks = 0, malformed = 0;
  for (size_t i = 0; i < back.chunks.size(); ++i) {
    ByteReader r(back.chunks[i]);
    const int type = r.u8();
    const int streams = type == 0 ? 2 : 4;  // z/y vs motion z/y + residual z/y
    try {
      for (int s = 0; s < streams; ++s) r.bytes();
      if (r.remaining() != 0) ++malformed;
    } catch (const DecodeError&) {
      ++malformed;
    }
    (type == 0 ? i_chunks : p_chunks)++;
  }
  auto dec = codec.decompress(back.chunks, 64, 64);
  int mismatched_frames = 0;
  for (int i = 0; i < 30; ++i)
    if (dec[i].data() != enc_recons[i].data()) ++mismatched_frames;
  msg = std::to_string(i_chunks) + " I-chunks + " + std::to_string(p_chunks) +
        " P-chunks (" + std::to_string(malformed) + " malformed); " +
        std::to_string(mismatched_frames) +
        "/30 decoded frames differ from the encoder loop";
  return i_chunks == 1 && p_chunks == 29 && malformed == 0 &&
         mismatched_frames == 0;
}

bool criterion_8(std::string& msg) {
  TempDir tmp("train");
  gen_synthetic(tmp.dir(), 40, 64, 31);
  SequenceDataset data = load_dataset(tmp.dir());
  Rng rng(8);
  VideoCodec codec(toy_conv_config(), rng);
  auto before = codec.named_parameters();
  std::vector<std::vector<double>> init;
  for (auto& [name, p] : before) init.push_back(p.data());

  TrainConfig tc = toy_train_config(500, 64);
  TrainResult r;
  try {
    r = train_codec(codec, data.frames, tc, tmp.file("log.csv"));
  } catch (const std::exception& e) {
    msg = std::string("training aborted: ") + e.what();
    return false;
  }
  const double reduction = 1.0 - r.final_loss / r.first_loss;
  // dead-parameter audit: Adam moves every tensor that ever saw a gradient;
  // a tensor still bitwise at init never received one.
  std::vector<std::string> dead;
  auto after = codec.named_parameters();
  for (size_t i = 0; i < after.size(); ++i)
    if (after[i].second.data() == init[i]) dead.push_back(after[i].first);
  msg = "loss " + std::to_string(r.first_loss) + " -> " +
        std::to_string(r.final_loss) + " (" +
        std::to_string(100.0 * reduction) + "% reduction) over " +
        std::to_string(r.steps) + " steps; dead parameters: " +
        (dead.empty() ? "none" : std::to_string(dead.size()) + " (" + dead[0] +
                                     " ...)");
  return r.steps == 500 && reduction >= 0.5 && dead.empty();
}

bool criterion_9(std::string& msg) {
  TempDir tmp("intra");
  gen_synthetic(tmp.dir(), 40, 64, 41);
  SequenceDataset train_data = load_dataset(tmp.dir());
  TempDir test_tmp("intra_test");
  gen_synthetic(test_tmp.dir(), 30, 64, 42);
  SequenceDataset test_data = load_dataset(test_tmp.dir());

  // A larger model than the other criteria use: the comparison needs a
  // quality regime where intra frames cost real bits. The GOP is kept short
  // (the training chunk depth) so predicted frames stay in-distribution.
  CodecConfig cfg = toy_conv_config();
  cfg.transform.embed_dim = 16;
  cfg.transform.latent_channels = 8;
  cfg.hyper_channels = 8;
  cfg.gop_size = 2;
  Rng rng(9);
  VideoCodec codec(cfg, rng);
  TrainConfig tc = toy_train_config(800, 64);
  try {
    train_codec(codec, train_data.frames, tc, tmp.file("log.csv"));
  } catch (const std::exception& e) {
    msg = std::string("training aborted: ") + e.what();
    return false;
  }

  // all-intra baseline: identical weights, gop forced to 1 so every frame
  // goes through the same i-frame model
  CodecConfig intra_cfg = cfg;
  intra_cfg.gop_size = 1;
  save_checkpoint(tmp.file("m.ckpt"), intra_cfg.to_json(), codec);
  Rng rng2(10);
  VideoCodec intra(intra_cfg, rng2);
  load_checkpoint(tmp.file("m.ckpt"), intra);

  EvalReport video =
      eval_codec(codec, test_data, tc.lambda, tmp.file("video.ssfv"));
  EvalReport still =
      eval_codec(intra, test_data, tc.lambda, tmp.file("intra.ssfv"));
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "video %.4f bpp / %.2f dB vs all-intra %.4f bpp / %.2f dB "
                "at lambda %.3g",
                video.point.bpp, video.point.psnr_db, still.point.bpp,
                still.point.psnr_db, tc.lambda);
  msg = buf;
  return video.point.bpp < still.point.bpp &&
         video.point.psnr_db >= still.point.psnr_db;
}

bool criterion_10(std::string& msg) {
  TempDir tmp("ablation");
  gen_synthetic(tmp.dir(), 40, 64, 51);
  SequenceDataset train_data = load_dataset(tmp.dir());
  TempDir test_tmp("ablation_test");
  gen_synthetic(test_tmp.dir(), 30, 64, 52);
  SequenceDataset test_data = load_dataset(test_tmp.dir());

  std::vector<RdPoint> points;
  for (Family fam : {Family::conv, Family::swin, Family::flawin}) {
    const std::string name = family_to_string(fam);
    CodecConfig cfg =
        fam == Family::conv ? toy_conv_config() : toy_token_config(fam);
    Rng rng(100 + (int)fam);
    VideoCodec codec(cfg, rng);
    TrainConfig tc =
        toy_train_config(120, fam == Family::conv ? 64 : 32);
    try {
      train_codec(codec, train_data.frames, tc,
                  tmp.file(name + "_log.csv"));
      EvalReport rep = eval_codec(codec, test_data, tc.lambda,
                                  tmp.file(name + ".ssfv"));
      // decode through the shared container path as well
      Container c = read_container(tmp.file(name + ".ssfv"));
      auto dec = codec.decompress(c.chunks, 64, 64);
      if ((int)dec.size() != 30) {
        msg = name + ": container decode returned " +
              std::to_string(dec.size()) + " frames";
        return false;
      }
      points.push_back(rep.point);
    } catch (const std::exception& e) {
      msg = name + " failed: " + e.what();
      return false;
    }
  }
  write_rd_outputs(points, tmp.file("ablation"));
  if (!std::filesystem::exists(tmp.file("ablation.csv")) ||
      !std::filesystem::exists(tmp.file("ablation.svg"))) {
    msg = "curve outputs missing";
    return false;
  }
  // the ordering is recorded for the log, not asserted
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "conv %.4f bpp / %.2f dB, swin %.4f bpp / %.2f dB, "
                "flawin %.4f bpp / %.2f dB -> one curve file, ordering "
                "recorded not asserted",
                points[0].bpp, points[0].psnr_db, points[1].bpp,
                points[1].psnr_db, points[2].bpp, points[2].psnr_db);
  msg = buf;
  return true;
}

const char* criterion_name(int n) {
  switch (n) {
    case 1: return "warp identity";
    case 2: return "warp oracle";
    case 3: return "attention oracle";
    case 4: return "inception/flaff oracle";
    case 5: return "gradient checks";
    case 6: return "coder round-trip";
    case 7: return "end-to-end closed loop";
    case 8: return "training sanity";
    case 9: return "video vs all-intra advantage";
    case 10: return "three-family ablation parity";
    default: return "?";
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <criterion 1..10>\n");
    return 2;
  }
  const int n = std::atoi(argv[1]);
  std::function<bool(std::string&)> checks[] = {
      criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
      criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  if (n < 1 || n > 10) {
    std::fprintf(stderr, "usage: acceptance <criterion 1..10>\n");
    return 2;
  }
  std::string msg;
  bool ok = false;
  try {
    ok = checks[n - 1](msg);
  } catch (const std::exception& e) {
    msg = std::string("unexpected exception: ") + e.what();
  }
  std::printf("criterion %d (%s): %s — %s\n", n, criterion_name(n),
              ok ? "PASS" : "FAIL", msg.c_str());
  return ok ? 0 : 1;
}
