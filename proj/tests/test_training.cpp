#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ssf/training.hpp"
#include "testutil.hpp"

using namespace ssf;
using ssftest::randn;

namespace {

CodecConfig conv_config() {
  CodecConfig cfg;
  cfg.family = Family::conv;
  cfg.gop_size = 4;
  cfg.hyper_channels = 4;
  cfg.transform.embed_dim = 6;
  cfg.transform.latent_channels = 4;
  cfg.scale_space.scales = {1.0, 2.0};
  return cfg;
}

CodecConfig tiny_token_config(Family fam) {
  CodecConfig cfg;
  cfg.family = fam;
  cfg.gop_size = 4;
  cfg.hyper_channels = 4;
  cfg.transform.embed_dim = 4;
  cfg.transform.stage_depths = {2};
  cfg.transform.num_heads = {2};
  cfg.transform.window_size = 2;
  cfg.transform.patch_size = 2;
  cfg.transform.latent_channels = 4;
  cfg.transform.flaff_expansion = 3.0;
  cfg.scale_space.scales = {1.0, 2.0};
  return cfg;
}

std::vector<Tensor> moving_frames(int n, int side, Rng& rng) {
  std::vector<Tensor> frames;
  for (int i = 0; i < n; ++i) {
    Tensor f = Tensor::zeros({1, side, side});
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        f.data()[(size_t)y * side + x] = std::clamp(
            0.5 + 0.3 * std::sin(0.25 * (x + 2 * i)) * std::cos(0.2 * y) +
                0.02 * rng.normal(),
            0.0, 1.0);
    frames.push_back(f);
  }
  return frames;
}

struct TempDir {
  std::filesystem::path p;
  TempDir() {
    p = std::filesystem::temp_directory_path() /
        ("ssf_train_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
  }
  ~TempDir() { std::filesystem::remove_all(p); }
  std::string file(const char* name) const { return (p / name).string(); }
};

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.validate();
  TrainConfig bad = cfg;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.chunk_length = 1;  // need at least one predicted frame
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.lr_initial = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("adam minimizes a quadratic") {
  Tensor x = Tensor::from({2}, {10.0, -4.0}, true);
  Adam opt({x}, 0.2);
  for (int i = 0; i < 300; ++i) {
    opt.zero_grad();
    Tensor d = x + (-3.0);
    sum(d * d).backward();
    opt.step();
  }
  CHECK(std::abs(x.data()[0] - 3.0) < 1e-3);
  CHECK(std::abs(x.data()[1] - 3.0) < 1e-3);
}

TEST_CASE("gradient norm and clipping") {
  Tensor x = Tensor::from({2}, {0.0, 0.0}, true);
  Adam opt({x}, 0.1);
  x.grad() = {3.0, 4.0};
  CHECK(opt.global_grad_norm() == doctest::Approx(5.0).epsilon(1e-12));
  opt.clip_grad_norm(1.0);
  CHECK(x.grad()[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(0.8).epsilon(1e-12));
  // already inside the ball: untouched
  opt.clip_grad_norm(10.0);
  CHECK(x.grad()[0] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("cosine schedule endpoints and monotone decay") {
  const double a = 1e-3, b = 1e-5;
  CHECK(cosine_lr(a, b, 0, 100) == doctest::Approx(a).epsilon(1e-12));
  CHECK(cosine_lr(a, b, 99, 100) == doctest::Approx(b).epsilon(1e-12));
  CHECK(cosine_lr(a, b, 49, 99) ==
        doctest::Approx(b + 0.5 * (a - b)).epsilon(1e-9));
  double prev = cosine_lr(a, b, 0, 50);
  for (int s = 1; s < 50; ++s) {
    const double cur = cosine_lr(a, b, s, 50);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("rd loss decomposition") {
  Rng rng(1);
  CodecConfig cfg = conv_config();
  VideoCodec codec(cfg, rng);
  Rng frng(2);
  auto frames = moving_frames(3, 64, frng);

  SUBCASE("lambda zero reduces to pure distortion") {
    Rng noise(3);
    RdLoss l = rd_loss(codec, frames, 0.0, noise);
    CHECK(l.loss.item() == doctest::Approx(l.distortion.item()).epsilon(1e-12));
    CHECK(l.rate_bpp.item() > 0.0);
  }
  SUBCASE("loss equals distortion plus lambda times bpp") {
    Rng noise(4);
    RdLoss l = rd_loss(codec, frames, 0.05, noise);
    CHECK(l.loss.item() ==
          doctest::Approx(l.distortion.item() + 0.05 * l.rate_bpp.item())
              .epsilon(1e-12));
  }
  SUBCASE("bpp normalizes by total pixels") {
    Rng n1(5), n2(5);
    RdLoss a = rd_loss(codec, frames, 0.01, n1);
    auto out = codec.forward_train(frames, n2);
    CHECK(a.rate_bpp.item() ==
          doctest::Approx(out.bits.item() / (3.0 * 64 * 64)).epsilon(1e-9));
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  TempDir tmp;
  Rng frng(6);
  auto frames = moving_frames(8, 64, frng);
  TrainConfig tc;
  tc.batch_size = 2;
  tc.chunk_length = 3;
  tc.max_steps = 2;
  tc.seed = 7;
  double first[2], last[2];
  for (int run = 0; run < 2; ++run) {
    Rng rng(42);
    VideoCodec codec(conv_config(), rng);
    TrainResult r =
        train_codec(codec, frames, tc, tmp.file(run ? "b.csv" : "a.csv"));
    CHECK(r.steps == 2);
    first[run] = r.first_loss;
    last[run] = r.final_loss;
  }
  CHECK(first[0] == first[1]);
  CHECK(last[0] == last[1]);
}

TEST_CASE("short run reduces the loss and logs csv rows") {
  TempDir tmp;
  Rng rng(8);
  VideoCodec codec(conv_config(), rng);
  Rng frng(9);
  auto frames = moving_frames(8, 64, frng);
  TrainConfig tc;
  tc.lambda = 0.01;
  tc.batch_size = 2;
  tc.chunk_length = 3;
  tc.max_steps = 20;
  tc.lr_initial = 4e-4;
  tc.lr_final = 1e-4;
  TrainResult r = train_codec(codec, frames, tc, tmp.file("log.csv"));
  CHECK(r.steps == 20);
  CHECK(r.final_loss < r.first_loss);

  std::ifstream log(tmp.file("log.csv"));
  std::string line;
  REQUIRE(std::getline(log, line));
  CHECK(line == "step,loss,distortion,rate_bpp,lr,seconds");
  int rows = 0;
  while (std::getline(log, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 20);
}

TEST_CASE("every parameter of the attention families receives gradient") {
  // One backward pass over a chunk with an intra and a predicted frame should
  // touch the i-frame, motion, residual, hyper, and prior parameters alike.
  for (Family fam : {Family::swin, Family::flawin}) {
    CAPTURE(family_to_string(fam));
    Rng rng(10);
    VideoCodec codec(tiny_token_config(fam), rng);
    Rng frng(11);
    auto frames = moving_frames(3, 16, frng);
    for (auto& p : codec.parameters()) p.zero_grad();
    Rng noise(12);
    for (int rep = 0; rep < 2; ++rep)
      rd_loss(codec, frames, 0.01, noise).loss.backward();
    for (auto& [name, p] : codec.named_parameters()) {
      double mx = 0.0;
      for (double g : p.grad()) mx = std::max(mx, std::abs(g));
      CAPTURE(name);
      CHECK(mx > 0.0);
    }
  }
}

TEST_CASE("key=value config parsing") {
  TempDir tmp;
  SUBCASE("comments, blanks, and values parse") {
    std::ofstream f(tmp.file("ok.cfg"));
    f << "# a comment\n\nfamily = swin\nlambda=0.02\n"
      << "stage_depths = 2,2\nnum_heads=2,4\nmax_steps = 10\n";
    f.close();
    auto kv = parse_kv_file(tmp.file("ok.cfg"));
    CHECK(kv.at("family") == "swin");
    CHECK(kv.at("lambda") == "0.02");
    CodecConfig cc;
    TrainConfig tc;
    apply_config(kv, cc, tc);
    CHECK(cc.family == Family::swin);
    CHECK(tc.lambda == 0.02);
    CHECK(cc.transform.stage_depths == std::vector<int>{2, 2});
    CHECK(cc.transform.num_heads == std::vector<int>{2, 4});
    CHECK(tc.max_steps == 10);
  }
  SUBCASE("malformed line names its number") {
    std::ofstream f(tmp.file("bad.cfg"));
    f << "lambda=0.1\nthis is not a pair\n";
    f.close();
    CHECK_THROWS_WITH_AS(parse_kv_file(tmp.file("bad.cfg")),
                         doctest::Contains(":2: expected key=value"),
                         std::runtime_error);
  }
  SUBCASE("unknown keys are rejected") {
    CodecConfig cc;
    TrainConfig tc;
    std::map<std::string, std::string> kv{{"lamda", "0.1"}};
    CHECK_THROWS_WITH_AS(apply_config(kv, cc, tc),
                         doctest::Contains("lamda"), std::runtime_error);
  }
  SUBCASE("missing file is an error") {
    CHECK_THROWS_AS(parse_kv_file(tmp.file("nope.cfg")), std::runtime_error);
  }
}
