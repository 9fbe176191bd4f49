#pragma once

// Frame sequence ingestion and the synthetic stand-in generator. Frames are
// single-channel, normalized to [0,1]; supported files are binary PGM (8- or
// 16-bit) and raw float arrays (.f32: u32 width, u32 height, float32 LE
// row-major).

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssf/tensor.hpp"

namespace ssf {

struct SequenceDataset {
  std::vector<Tensor> frames;  // each [1,h,w]
  std::vector<std::string> files;
  int h = 0, w = 0;
};

Tensor load_frame_file(const std::string& path);
// 16-bit binary PGM, values clamped to [0,1].
void save_pgm16(const std::string& path, const Tensor& frame);

// Loads every .pgm/.f32 in the directory in lexicographic filename order.
// Errors on an empty directory or mixed resolutions (listing the files).
SequenceDataset load_dataset(const std::string& dir);

// (start, length) of consecutive non-overlapping test clips; a shorter tail
// clip is kept.
std::vector<std::pair<int, int>> test_clips(int n_frames, int clip_len);

// Drifting, slowly brightening/dimming Gaussian blobs over a smooth
// background; deterministic in the seed. Writes frame_%04d.pgm files.
void gen_synthetic(const std::string& dir, int n_frames, int size,
                   uint64_t seed);

Tensor crop_frame(const Tensor& f, int y0, int x0, int size);

}  // namespace ssf
