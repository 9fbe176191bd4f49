#pragma once

// Rate-distortion training: Adam with cosine learning-rate decay and global
// gradient-norm clipping, the D + lambda*R objective over short frame chunks,
// and the flat key=value config file shared with the CLI.

#include <map>
#include <string>
#include <vector>

#include "ssf/codec.hpp"

namespace ssf {

struct TrainConfig {
  double lambda = 0.01;
  int epochs = 1;
  int batch_size = 8;
  int crop = 64;
  double lr_initial = 1e-4;
  double lr_final = 1.2e-6;
  uint64_t seed = 1;
  int chunk_length = 4;
  int max_steps = 0;  // 0: epochs decide
  double grad_clip = 1.0;

  void validate() const;
};

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double lr = 1e-4);
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  double global_grad_norm() const;
  void clip_grad_norm(double max_norm);
  void step();
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
};

double cosine_lr(double lr_initial, double lr_final, int step, int total_steps);

struct RdLoss {
  Tensor loss, distortion, rate_bpp;  // loss = distortion + lambda*rate_bpp
};
// Differentiable objective over one chunk (frame 0 intra, rest predicted);
// rate is in bits per pixel across the chunk.
RdLoss rd_loss(const VideoCodec& codec, const std::vector<Tensor>& chunk,
               double lambda, Rng& rng);

struct TrainResult {
  int steps = 0;
  double first_loss = 0.0, final_loss = 0.0;
};

// Appends per-step rows to log_path (created with a header if absent).
// Throws on a non-finite loss, naming the step and both loss components.
TrainResult train_codec(VideoCodec& codec, const std::vector<Tensor>& frames,
                        const TrainConfig& cfg, const std::string& log_path);

// --- flat key=value config ---
std::map<std::string, std::string> parse_kv_file(const std::string& path);
// Unknown keys throw; lists are comma-separated.
void apply_config(const std::map<std::string, std::string>& kv,
                  CodecConfig& codec_cfg, TrainConfig& train_cfg);

}  // namespace ssf
