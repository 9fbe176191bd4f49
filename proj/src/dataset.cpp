#include "ssf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace ssf {

namespace {

[[noreturn]] void data_error(const std::string& msg) {
  throw std::runtime_error(msg);
}

int pgm_token(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comment lines between header fields.
  for (;;) {
    const int c = in.peek();
    if (c == EOF) data_error(path + ": truncated PGM header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
  }
  int v;
  if (!(in >> v)) data_error(path + ": bad PGM header");
  return v;
}

Tensor load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) data_error("cannot open: " + path);
  char magic[2];
  f.read(magic, 2);
  if (!f || magic[0] != 'P' || magic[1] != '5')
    data_error(path + ": not a binary PGM (P5)");
  const int w = pgm_token(f, path);
  const int h = pgm_token(f, path);
  const int maxval = pgm_token(f, path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    data_error(path + ": bad PGM dimensions");
  f.get();  // single whitespace before raster
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<uint8_t> raw((size_t)w * h * bytes);
  f.read((char*)raw.data(), (std::streamsize)raw.size());
  if (!f) data_error(path + ": truncated PGM raster");
  Tensor t = Tensor::zeros({1, h, w});
  for (size_t i = 0; i < (size_t)w * h; ++i) {
    const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
    t.data()[i] = (double)v / maxval;
  }
  return t;
}

Tensor load_f32(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) data_error("cannot open: " + path);
  uint32_t w = 0, h = 0;
  f.read((char*)&w, 4);
  f.read((char*)&h, 4);
  if (!f || w == 0 || h == 0 || w > 1 << 16 || h > 1 << 16)
    data_error(path + ": bad .f32 header");
  std::vector<float> raw((size_t)w * h);
  f.read((char*)raw.data(), (std::streamsize)(raw.size() * 4));
  if (!f) data_error(path + ": truncated .f32 data");
  Tensor t = Tensor::zeros({1, (int)h, (int)w});
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]))
      data_error(path + ": non-finite value at index " + std::to_string(i));
    t.data()[i] = raw[i];
  }
  return t;
}

}  // namespace

Tensor load_frame_file(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  if (ext == ".pgm") return load_pgm(path);
  if (ext == ".f32") return load_f32(path);
  data_error(path + ": unsupported frame format (want .pgm or .f32)");
}

void save_pgm16(const std::string& path, const Tensor& frame) {
  const int h = frame.dim(1), w = frame.dim(2);
  std::ofstream f(path, std::ios::binary);
  if (!f) data_error("cannot open for writing: " + path);
  f << "P5\n" << w << " " << h << "\n65535\n";
  std::vector<uint8_t> raw((size_t)w * h * 2);
  for (size_t i = 0; i < (size_t)w * h; ++i) {
    const double c = std::min(1.0, std::max(0.0, frame.data()[i]));
    const int v = (int)std::lround(c * 65535.0);
    raw[2 * i] = (uint8_t)(v >> 8);
    raw[2 * i + 1] = (uint8_t)(v & 0xFF);
  }
  f.write((const char*)raw.data(), (std::streamsize)raw.size());
  if (!f) data_error("write failed: " + path);
}

SequenceDataset load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) data_error("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".f32"))
      files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) data_error("no frames (.pgm/.f32) found in " + dir);
  SequenceDataset d;
  d.files = files;
  std::vector<std::string> offending;
  for (const auto& fpath : files) {
    Tensor t = load_frame_file(fpath);
    if (d.frames.empty()) {
      d.h = t.dim(1);
      d.w = t.dim(2);
    } else if (t.dim(1) != d.h || t.dim(2) != d.w) {
      offending.push_back(fpath + " (" + std::to_string(t.dim(2)) + "x" +
                          std::to_string(t.dim(1)) + ")");
    }
    d.frames.push_back(std::move(t));
  }
  if (!offending.empty()) {
    std::string msg = "mixed resolutions; expected " + std::to_string(d.w) +
                      "x" + std::to_string(d.h) + " but got:";
    for (const auto& o : offending) msg += "\n  " + o;
    data_error(msg);
  }
  return d;
}

std::vector<std::pair<int, int>> test_clips(int n_frames, int clip_len) {
  std::vector<std::pair<int, int>> clips;
  for (int s = 0; s < n_frames; s += clip_len)
    clips.emplace_back(s, std::min(clip_len, n_frames - s));
  return clips;
}

void gen_synthetic(const std::string& dir, int n_frames, int size,
                   uint64_t seed) {
  if (n_frames <= 0 || size <= 0)
    data_error("gen_synthetic: frames and size must be positive");
  fs::create_directories(dir);
  Rng rng(seed);
  struct Blob {
    double cx, cy, vx, vy, sigma, amp, damp;
  };
  std::vector<Blob> blobs(6);
  for (auto& b : blobs) {
    b.cx = rng.uniform(0, size);
    b.cy = rng.uniform(0, size);
    b.vx = rng.uniform(-1.5, 1.5);
    b.vy = rng.uniform(-1.5, 1.5);
    b.sigma = rng.uniform(size / 16.0, size / 8.0);
    b.amp = rng.uniform(0.3, 0.8);
    b.damp = rng.uniform(-0.004, 0.004);
  }
  for (int t = 0; t < n_frames; ++t) {
    Tensor frame = Tensor::zeros({1, size, size});
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double v = 0.1 + 0.15 * x / size + 0.1 * y / size;
        for (const auto& b : blobs) {
          // Wrapped drift keeps blobs on-frame indefinitely.
          const double cx = std::fmod(b.cx + b.vx * t + 8.0 * size, size);
          const double cy = std::fmod(b.cy + b.vy * t + 8.0 * size, size);
          double dx = std::abs(x - cx), dy = std::abs(y - cy);
          dx = std::min(dx, size - dx);
          dy = std::min(dy, size - dy);
          const double amp = std::max(0.0, b.amp + b.damp * t);
          v += amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
        }
        frame.data()[(size_t)y * size + x] = std::min(1.0, std::max(0.0, v));
      }
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.pgm", t);
    save_pgm16((fs::path(dir) / name).string(), frame);
  }
}

Tensor crop_frame(const Tensor& f, int y0, int x0, int size) {
  const int c = f.dim(0), h = f.dim(1), w = f.dim(2);
  if (y0 < 0 || x0 < 0 || y0 + size > h || x0 + size > w)
    data_error("crop out of bounds");
  Tensor out = Tensor::zeros({c, size, size});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < size; ++y)
      std::memcpy(&out.data()[((size_t)ch * size + y) * size],
                  &f.data()[((size_t)ch * h + y0 + y) * w + x0],
                  (size_t)size * sizeof(double));
  return out;
}

}  // namespace ssf
