#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ssf/dataset.hpp"
#include "ssf/metrics.hpp"
#include "ssf/report.hpp"
#include "testutil.hpp"

using namespace ssf;
using ssftest::randn;

namespace {

struct TempDir {
  std::filesystem::path p;
  explicit TempDir(const char* tag) {
    p = std::filesystem::temp_directory_path() /
        (std::string("ssf_data_test_") + tag + "_" +
         std::to_string(::getpid()));
    std::filesystem::create_directories(p);
  }
  ~TempDir() { std::filesystem::remove_all(p); }
  std::string file(const char* name) const { return (p / name).string(); }
  std::string dir() const { return p.string(); }
};

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("psnr oracles") {
  Tensor a = Tensor::zeros({1, 4, 4});
  Tensor b = Tensor::full({1, 4, 4}, 0.1);
  // MSE 0.01 -> 10*log10(100) = 20 dB
  CHECK(psnr_db(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr_db(a, a) == 100.0);
  Rng rng(1);
  Tensor x = randn({1, 5, 5}, rng, 0.2);
  Tensor y = randn({1, 5, 5}, rng, 0.2);
  double msev = 0;
  for (int i = 0; i < 25; ++i) {
    const double d = x.data()[i] - y.data()[i];
    msev += d * d / 25;
  }
  CHECK(psnr_db(x, y) ==
        doctest::Approx(-10.0 * std::log10(msev)).epsilon(1e-9));
}

TEST_CASE("bits per pixel oracles") {
  // 512 bytes = 4096 bits over one 64x64 frame
  CHECK(bits_per_pixel(512, 1, 64, 64) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bits_per_pixel(512, 2, 64, 64) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bits_per_pixel(0, 3, 8, 8) == 0.0);
}

TEST_CASE("pgm round trips") {
  TempDir tmp("pgm");
  Rng rng(2);
  Tensor f = Tensor::zeros({1, 6, 9});
  for (auto& v : f.data()) v = rng.uniform01();
  save_pgm16(tmp.file("f.pgm"), f);
  Tensor back = load_frame_file(tmp.file("f.pgm"));
  REQUIRE(back.shape() == f.shape());
  for (int64_t i = 0; i < f.size(); ++i)
    CHECK(std::abs(back.data()[i] - f.data()[i]) < 1.0 / 65535.0);

  SUBCASE("8-bit pgm with comments normalizes by 255") {
    std::ofstream o(tmp.file("g.pgm"), std::ios::binary);
    o << "P5\n# a comment\n2 2\n255\n";
    const uint8_t px[4] = {0, 128, 64, 255};
    o.write((const char*)px, 4);
    o.close();
    Tensor g = load_frame_file(tmp.file("g.pgm"));
    CHECK(g.dim(1) == 2);
    CHECK(g.data()[1] == doctest::Approx(128.0 / 255).epsilon(1e-12));
    CHECK(g.data()[3] == 1.0);
  }
  SUBCASE("16-bit values are big-endian and 65535 maps to 1.0") {
    std::ofstream o(tmp.file("h.pgm"), std::ios::binary);
    o << "P5\n1 2\n65535\n";
    const uint8_t px[4] = {0xFF, 0xFF, 0x01, 0x00};  // 65535, 256
    o.write((const char*)px, 4);
    o.close();
    Tensor h = load_frame_file(tmp.file("h.pgm"));
    CHECK(h.data()[0] == 1.0);
    CHECK(h.data()[1] == doctest::Approx(256.0 / 65535).epsilon(1e-12));
  }
}

TEST_CASE("f32 frames round trip and reject non-finite values") {
  TempDir tmp("f32");
  {
    std::ofstream o(tmp.file("a.f32"), std::ios::binary);
    const uint32_t w = 3, h = 2;
    o.write((const char*)&w, 4);
    o.write((const char*)&h, 4);
    const float vals[6] = {0.f, 0.25f, 0.5f, 0.75f, 1.f, 0.125f};
    o.write((const char*)vals, sizeof(vals));
  }
  Tensor t = load_frame_file(tmp.file("a.f32"));
  CHECK(t.dim(1) == 2);
  CHECK(t.dim(2) == 3);
  CHECK(t.data()[1] == 0.25);
  CHECK(t.data()[5] == 0.125);
  {
    std::ofstream o(tmp.file("b.f32"), std::ios::binary);
    const uint32_t w = 1, h = 1;
    o.write((const char*)&w, 4);
    o.write((const char*)&h, 4);
    const float bad = NAN;
    o.write((const char*)&bad, 4);
  }
  CHECK_THROWS_AS(load_frame_file(tmp.file("b.f32")), std::runtime_error);
}

TEST_CASE("synthetic generator") {
  TempDir a("gen_a"), b("gen_b"), c("gen_c");
  gen_synthetic(a.dir(), 4, 32, 11);
  gen_synthetic(b.dir(), 4, 32, 11);
  gen_synthetic(c.dir(), 4, 32, 12);

  SUBCASE("deterministic in the seed, bitwise at the file level") {
    for (int i = 0; i < 4; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%04d.pgm", i);
      CHECK(slurp(a.file(name)) == slurp(b.file(name)));
    }
    CHECK(slurp(a.file("frame_0000.pgm")) != slurp(c.file("frame_0000.pgm")));
  }
  SUBCASE("frames are in range and temporally correlated") {
    SequenceDataset ds = load_dataset(a.dir());
    REQUIRE(ds.frames.size() == 4);
    CHECK(ds.h == 32);
    CHECK(ds.w == 32);
    for (const auto& f : ds.frames)
      for (double v : f.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    // consecutive frames are much closer than shuffled pairs
    CHECK(psnr_db(ds.frames[0], ds.frames[1]) >
          psnr_db(ds.frames[0], ds.frames[3]));
    // and not static
    CHECK(psnr_db(ds.frames[0], ds.frames[1]) < 100.0);
  }
}

TEST_CASE("dataset loading") {
  TempDir tmp("load");
  SUBCASE("files load in lexicographic order regardless of creation order") {
    for (const char* name : {"c.pgm", "a.pgm", "b.pgm"}) {
      Tensor f = Tensor::full({1, 2, 2}, name[0] == 'a'   ? 0.1
                                         : name[0] == 'b' ? 0.2
                                                          : 0.3);
      save_pgm16(tmp.file(name), f);
    }
    SequenceDataset ds = load_dataset(tmp.dir());
    REQUIRE(ds.frames.size() == 3);
    CHECK(std::filesystem::path(ds.files[0]).filename() == "a.pgm");
    CHECK(std::filesystem::path(ds.files[2]).filename() == "c.pgm");
    CHECK(ds.frames[0].data()[0] == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(ds.frames[2].data()[0] == doctest::Approx(0.3).epsilon(1e-3));
  }
  SUBCASE("empty directory errors") {
    CHECK_THROWS_AS(load_dataset(tmp.dir()), std::runtime_error);
  }
  SUBCASE("mixed resolutions name the offending file") {
    save_pgm16(tmp.file("a.pgm"), Tensor::zeros({1, 4, 4}));
    save_pgm16(tmp.file("b.pgm"), Tensor::zeros({1, 4, 8}));
    CHECK_THROWS_WITH_AS(load_dataset(tmp.dir()), doctest::Contains("b.pgm"),
                         std::runtime_error);
  }
}

TEST_CASE("test clip slicing") {
  auto clips = test_clips(120, 30);
  REQUIRE(clips.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(clips[i].first == 30 * i);
    CHECK(clips[i].second == 30);
  }
  auto tail = test_clips(70, 30);
  REQUIRE(tail.size() == 3);
  CHECK(tail[2].first == 60);
  CHECK(tail[2].second == 10);
  CHECK(test_clips(5, 30).size() == 1);
}

TEST_CASE("crop_frame extracts the window") {
  Tensor f = Tensor::zeros({1, 4, 4});
  for (int i = 0; i < 16; ++i) f.data()[i] = i;
  Tensor c = crop_frame(f, 1, 2, 2);
  CHECK(c.dim(1) == 2);
  CHECK(c.data() == std::vector<double>{6, 7, 10, 11});
}

TEST_CASE("rd outputs") {
  TempDir tmp("rd");
  std::vector<RdPoint> pts{
      {"conv", 0.01, 0.30, 30.0, "aa"},  {"conv", 0.05, 0.55, 33.0, "bb"},
      {"swin", 0.01, 0.28, 30.5, "cc"},  {"swin", 0.05, 0.50, 33.2, "dd"},
      {"flawin", 0.01, 0.27, 30.6, "ee"}};
  write_rd_outputs(pts, tmp.file("curve"));

  SUBCASE("csv has a header and one row per point") {
    std::ifstream f(tmp.file("curve.csv"));
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "family,lambda,bpp,psnr_db,digest");
    int rows = 0;
    while (std::getline(f, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 5);
  }
  SUBCASE("json round trips the points") {
    std::ifstream f(tmp.file("curve.json"));
    nlohmann::json j = nlohmann::json::parse(f);
    REQUIRE(j.size() == 5);
    CHECK(j[0]["family"] == "conv");
    CHECK(j[4]["family"] == "flawin");
    CHECK(j[2]["bpp"] == doctest::Approx(0.28));
    CHECK(j[3]["psnr_db"] == doctest::Approx(33.2));
  }
  SUBCASE("svg plots one series per family in first-appearance order") {
    std::ifstream f(tmp.file("curve.svg"));
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string svg = ss.str();
    const size_t pc = svg.find("conv"), ps = svg.find("swin"),
                 pf = svg.find("flawin");
    REQUIRE(pc != std::string::npos);
    REQUIRE(ps != std::string::npos);
    REQUIRE(pf != std::string::npos);
    CHECK(pc < ps);
    CHECK(ps < pf);
    CHECK(svg.find("<polyline") != std::string::npos);
  }
}

TEST_CASE("eval report json round trip") {
  EvalReport r;
  r.point = {"swin", 0.02, 0.4, 31.5, "0123456789abcdef0123456789abcdef"};
  r.frame_psnr = {30.0, 31.0, 33.5};
  r.stream_bytes = 1234;
  r.payload_bytes = 1203;
  EvalReport back = report_from_json(report_to_json(r));
  CHECK(back.point.family == "swin");
  CHECK(back.point.lambda == 0.02);
  CHECK(back.point.digest_hex == r.point.digest_hex);
  CHECK(back.frame_psnr == r.frame_psnr);
  CHECK(back.stream_bytes == 1234);
  CHECK(back.payload_bytes == 1203);
}

TEST_CASE("digest hex formatting") {
  std::array<uint8_t, 16> d{};
  d[0] = 0x01;
  d[15] = 0xFF;
  const std::string h = digest_hex(d);
  CHECK(h.size() == 32);
  CHECK(h.substr(0, 2) == "01");
  CHECK(h.substr(30) == "ff");
}
