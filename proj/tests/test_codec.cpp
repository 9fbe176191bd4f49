#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ssf/bitstream.hpp"
#include "ssf/checkpoint.hpp"
#include "ssf/codec.hpp"
#include "testutil.hpp"

using namespace ssf;
using ssftest::randn;

namespace {

CodecConfig toy_config() {
  CodecConfig cfg;
  cfg.family = Family::conv;
  cfg.frame_channels = 1;
  cfg.gop_size = 4;
  cfg.hyper_channels = 4;
  cfg.transform.embed_dim = 6;
  cfg.transform.latent_channels = 4;
  cfg.scale_space.scales = {1.0, 2.0};
  return cfg;
}

std::vector<Tensor> toy_frames(int n, Rng& rng) {
  std::vector<Tensor> frames;
  for (int i = 0; i < n; ++i) {
    Tensor f = Tensor::zeros({1, 64, 64});
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        f.data()[(size_t)y * 64 + x] = std::clamp(
            0.5 + 0.3 * std::sin(0.2 * (x + 3 * i)) * std::cos(0.15 * y) +
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
        ("ssf_codec_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
  }
  ~TempDir() { std::filesystem::remove_all(p); }
  std::string file(const char* name) const { return (p / name).string(); }
};

}  // namespace

TEST_CASE("byte serialization round trips and bounds-checks") {
  std::vector<uint8_t> b;
  put_u8(b, 0xAB);
  put_u16(b, 0x1234);
  put_u32(b, 0xDEADBEEF);
  put_bytes(b, {9, 8, 7});
  ByteReader r(b);
  CHECK(r.u8() == 0xAB);
  CHECK(r.u16() == 0x1234);
  CHECK(r.u32() == 0xDEADBEEF);
  CHECK(r.bytes() == std::vector<uint8_t>{9, 8, 7});
  CHECK(r.remaining() == 0);
  CHECK_THROWS_AS(r.u8(), DecodeError);
}

TEST_CASE("codec config validation and json round trip") {
  CodecConfig cfg = toy_config();
  cfg.validate();
  CHECK(cfg.downsample_factor() == 16);
  cfg.validate_frame(64, 64);
  // latent side 64/16 = 4 is divisible by the hyper factor; 80 gives side 5
  CHECK_THROWS_AS(cfg.validate_frame(80, 80), std::invalid_argument);
  CHECK_THROWS_AS(cfg.validate_frame(60, 64), std::invalid_argument);

  nlohmann::json j = cfg.to_json();
  CodecConfig back = CodecConfig::from_json(j);
  CHECK(back.family == cfg.family);
  CHECK(back.gop_size == cfg.gop_size);
  CHECK(back.hyper_channels == cfg.hyper_channels);
  CHECK(back.transform.embed_dim == cfg.transform.embed_dim);
  CHECK(back.transform.latent_channels == cfg.transform.latent_channels);
  CHECK(back.scale_space.scales == cfg.scale_space.scales);
  CHECK(back.to_json() == j);
}

TEST_CASE("compression net") {
  Rng rng(1);
  CodecConfig cfg = toy_config();
  CompressionNet net(cfg.subnet_config(1), 1, cfg.hyper_channels, rng);
  Tensor x = toy_frames(1, rng)[0];

  SUBCASE("training pass produces matching shapes and a finite rate") {
    Rng noise(2);
    NetOutput out = net.forward_train(x, noise);
    CHECK(out.recon.shape() == x.shape());
    CHECK(out.bits.size() == 1);
    CHECK(out.bits.item() >= 0.0);
    CHECK(std::isfinite(out.bits.item()));
  }
  SUBCASE("encoding is deterministic") {
    auto a = net.encode(x);
    auto b = net.encode(x);
    CHECK(a.z == b.z);
    CHECK(a.y == b.y);
    CHECK(!a.z.empty());
    CHECK(!a.y.empty());
  }
  SUBCASE("decode reproduces the encoder-side reconstruction bitwise") {
    Tensor enc_recon;
    auto coded = net.encode(x, &enc_recon);
    Tensor dec_recon = net.decode(coded, 4, 4);
    REQUIRE(dec_recon.shape() == enc_recon.shape());
    for (int64_t i = 0; i < dec_recon.size(); ++i)
      CHECK(dec_recon.data()[i] == enc_recon.data()[i]);
  }
  SUBCASE("corrupt latent stream raises DecodeError") {
    auto coded = net.encode(x);
    coded.y.resize(coded.y.size() / 4);
    CHECK_THROWS_AS(net.decode(coded, 4, 4), DecodeError);
  }
}

TEST_CASE("video codec round trips") {
  Rng rng(3);
  CodecConfig cfg = toy_config();
  VideoCodec codec(cfg, rng);
  Rng frng(4);
  auto frames = toy_frames(6, frng);

  SUBCASE("training pass over a chunk") {
    Rng noise(5);
    std::vector<Tensor> chunk(frames.begin(), frames.begin() + 3);
    auto out = codec.forward_train(chunk, noise);
    CHECK(out.recons.size() == 3);
    CHECK(out.distortion.item() >= 0.0);
    CHECK(out.bits.item() > 0.0);
    for (const auto& r : out.recons) {
      CHECK(r.shape() == frames[0].shape());
      for (double v : r.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("decompress matches the closed-loop encoder reconstructions bitwise") {
    std::vector<Tensor> enc_recons;
    auto chunks = codec.compress(frames, &enc_recons);
    REQUIRE(chunks.size() == 6);
    REQUIRE(enc_recons.size() == 6);
    auto dec = codec.decompress(chunks, 64, 64);
    REQUIRE(dec.size() == 6);
    for (int i = 0; i < 6; ++i) {
      CHECK(dec[i].data() == enc_recons[i].data());
      for (double v : dec[i].data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("chunk types follow the gop structure") {
    auto chunks = codec.compress(frames);  // gop_size 4: I P P P I P
    const uint8_t expect[6] = {0, 1, 1, 1, 0, 1};
    for (int i = 0; i < 6; ++i) CHECK(chunks[i][0] == expect[i]);
    // P-chunks carry four streams (motion z/y, residual z/y), I-chunks two
    ByteReader ri(chunks[0]);
    ri.u8();
    ri.bytes();
    ri.bytes();
    CHECK(ri.remaining() == 0);
    ByteReader rp(chunks[1]);
    rp.u8();
    for (int s = 0; s < 4; ++s) rp.bytes();
    CHECK(rp.remaining() == 0);
  }
  SUBCASE("chunk type inconsistent with gop position is rejected") {
    auto chunks = codec.compress(frames);
    std::swap(chunks[0], chunks[1]);
    CHECK_THROWS_WITH_AS(codec.decompress(chunks, 64, 64),
                         doctest::Contains("frame 0"), DecodeError);
  }
  SUBCASE("single-frame gop codes everything intra") {
    CodecConfig icfg = toy_config();
    icfg.gop_size = 1;
    Rng r2(6);
    VideoCodec intra(icfg, r2);
    auto chunks = intra.compress({frames[0], frames[1]});
    CHECK(chunks[0][0] == 0);
    CHECK(chunks[1][0] == 0);
    auto dec = intra.decompress(chunks, 64, 64);
    CHECK(dec.size() == 2);
  }
}

TEST_CASE("container format") {
  TempDir tmp;
  Container c;
  c.header.width = 64;
  c.header.height = 64;
  c.header.gop_size = 4;
  c.header.frame_count = 3;
  c.header.model_digest.fill(0x5A);
  c.chunks = {{1, 2, 3}, {4, 5}, {6, 7, 8, 9}};

  SUBCASE("round trip and size accounting") {
    write_container(tmp.file("a.ssfv"), c);
    CHECK(std::filesystem::file_size(tmp.file("a.ssfv")) == container_size(c));
    CHECK(container_size(c) == 31 + (8 + 3) + (8 + 2) + (8 + 4));
    Container back = read_container(tmp.file("a.ssfv"));
    CHECK(back.header.width == 64);
    CHECK(back.header.model_digest == c.header.model_digest);
    CHECK(back.chunks == c.chunks);
  }
  SUBCASE("corrupting chunk k is detected at frame k") {
    write_container(tmp.file("b.ssfv"), c);
    // flip one byte inside the third chunk's body
    std::fstream f(tmp.file("b.ssfv"),
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(31 + 11 + 10 + 8 + 1);
    char byte;
    f.seekg(31 + 11 + 10 + 8 + 1);
    f.get(byte);
    byte ^= 0x40;
    f.seekp(31 + 11 + 10 + 8 + 1);
    f.put(byte);
    f.close();
    CHECK_THROWS_WITH_AS(read_container(tmp.file("b.ssfv")),
                         doctest::Contains("frame 2"), DecodeError);
  }
  SUBCASE("truncated file is detected") {
    write_container(tmp.file("c.ssfv"), c);
    std::filesystem::resize_file(tmp.file("c.ssfv"), container_size(c) - 6);
    CHECK_THROWS_AS(read_container(tmp.file("c.ssfv")), DecodeError);
  }
}

TEST_CASE("checkpoints") {
  TempDir tmp;
  Rng rng(7);
  CodecConfig cfg = toy_config();
  VideoCodec a(cfg, rng);

  SUBCASE("save and load are bit-exact, digest tracks parameters") {
    const auto digest_a = param_digest(a);
    save_checkpoint(tmp.file("m.ckpt"), cfg.to_json(), a);

    Rng rng2(99);  // different init, will be overwritten by the load
    VideoCodec b(cfg, rng2);
    CHECK(param_digest(b) != digest_a);
    nlohmann::json j = load_checkpoint(tmp.file("m.ckpt"), b);
    CHECK(CodecConfig::from_json(j).gop_size == cfg.gop_size);
    auto pa = a.named_parameters(), pb = b.named_parameters();
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].first == pb[i].first);
      CHECK(pa[i].second.data() == pb[i].second.data());
    }
    CHECK(param_digest(b) == digest_a);

    // perturbing a single weight changes the digest
    b.parameters()[0].data()[0] += 1e-9;
    CHECK(param_digest(b) != digest_a);
  }
  SUBCASE("peek reads config without parameters") {
    save_checkpoint(tmp.file("p.ckpt"), cfg.to_json(), a);
    nlohmann::json j = peek_checkpoint_config(tmp.file("p.ckpt"));
    CHECK(CodecConfig::from_json(j).hyper_channels == cfg.hyper_channels);
  }
  SUBCASE("mismatched architecture is refused") {
    save_checkpoint(tmp.file("q.ckpt"), cfg.to_json(), a);
    CodecConfig other = cfg;
    other.transform.embed_dim = 8;
    Rng rng3(8);
    VideoCodec c(other, rng3);
    CHECK_THROWS_AS(load_checkpoint(tmp.file("q.ckpt"), c),
                    std::runtime_error);
  }
}

TEST_CASE("rate accounting is additive over chunks") {
  Rng rng(9);
  CodecConfig cfg = toy_config();
  VideoCodec codec(cfg, rng);
  Rng frng(10);
  auto frames = toy_frames(3, frng);
  auto chunks = codec.compress(frames);
  Container c;
  c.header.frame_count = 3;
  c.chunks = chunks;
  size_t expect = 31;
  for (const auto& ch : chunks) expect += 8 + ch.size();
  CHECK(container_size(c) == expect);
}
