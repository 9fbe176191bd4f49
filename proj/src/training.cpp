#include "ssf/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ssf/dataset.hpp"

namespace ssf {

void TrainConfig::validate() const {
  if (lambda < 0) throw std::invalid_argument("train: lambda must be >= 0");
  if (epochs <= 0 && max_steps <= 0)
    throw std::invalid_argument("train: need epochs > 0 or max_steps > 0");
  if (batch_size <= 0 || crop <= 0)
    throw std::invalid_argument("train: batch_size and crop must be positive");
  if (chunk_length < 2)
    throw std::invalid_argument(
        "train: chunk_length must be >= 2 so every chunk trains the motion "
        "and residual nets");
  if (lr_initial <= 0 || lr_final <= 0 || lr_final > lr_initial)
    throw std::invalid_argument("train: need 0 < lr_final <= lr_initial");
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::vector<Tensor> params, double lr)
    : params_(std::move(params)), lr_(lr) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

double Adam::global_grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) {
    const auto& g = const_cast<Tensor&>(p).grad();
    for (double v : g) sq += v * v;
  }
  return std::sqrt(sq);
}

void Adam::clip_grad_norm(double max_norm) {
  const double n = global_grad_norm();
  if (n <= max_norm || n == 0.0) return;
  const double s = max_norm / n;
  for (auto& p : params_)
    for (double& g : p.grad()) g *= s;
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, (double)t_);
  const double bc2 = 1.0 - std::pow(beta2_, (double)t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& val = params_[i].data();
    auto& g = params_[i].grad();
    for (size_t j = 0; j < val.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1 - beta2_) * g[j] * g[j];
      val[j] -= lr_ * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

double cosine_lr(double lr_initial, double lr_final, int step,
                 int total_steps) {
  if (total_steps <= 1) return lr_initial;
  const double t = std::min(1.0, (double)step / (total_steps - 1));
  return lr_final + 0.5 * (lr_initial - lr_final) * (1.0 + std::cos(M_PI * t));
}

// ---------------------------------------------------------------------------
// objective

RdLoss rd_loss(const VideoCodec& codec, const std::vector<Tensor>& chunk,
               double lambda, Rng& rng) {
  if (chunk.empty()) throw std::invalid_argument("rd_loss: empty chunk");
  auto out = codec.forward_train(chunk, rng);
  const double pixels =
      (double)chunk.size() * chunk[0].dim(1) * chunk[0].dim(2);
  RdLoss rl;
  rl.distortion = out.distortion;
  rl.rate_bpp = out.bits * (1.0 / pixels);
  rl.loss = rl.distortion + lambda * rl.rate_bpp;
  return rl;
}

// ---------------------------------------------------------------------------
// loop

TrainResult train_codec(VideoCodec& codec, const std::vector<Tensor>& frames,
                        const TrainConfig& cfg, const std::string& log_path) {
  cfg.validate();
  if ((int)frames.size() < cfg.chunk_length)
    throw std::invalid_argument("train: dataset shorter than one chunk");
  const int h = frames[0].dim(1), w = frames[0].dim(2);
  if (cfg.crop > h || cfg.crop > w)
    throw std::invalid_argument("train: crop larger than the frames");
  codec.config().validate_frame(cfg.crop, cfg.crop);

  Rng rng(cfg.seed);
  Adam opt(codec.parameters(), cfg.lr_initial);
  const int n = (int)frames.size();
  const int chunks_avail = n - cfg.chunk_length + 1;
  const int steps_per_epoch = std::max(1, chunks_avail / cfg.batch_size);
  const int total_steps = cfg.max_steps > 0 ? cfg.max_steps
                                            : cfg.epochs * steps_per_epoch;

  const bool fresh = !std::ifstream(log_path).good();
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw std::runtime_error("cannot open log: " + log_path);
  if (fresh) log << "step,loss,distortion,rate_bpp,lr,seconds\n";

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res;
  for (int step = 0; step < total_steps; ++step) {
    const double lr = cosine_lr(cfg.lr_initial, cfg.lr_final, step, total_steps);
    opt.set_lr(lr);
    opt.zero_grad();
    double lsum = 0, dsum = 0, rsum = 0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int t = rng.uniform_int(0, n - cfg.chunk_length);
      const int y0 = rng.uniform_int(0, h - cfg.crop);
      const int x0 = rng.uniform_int(0, w - cfg.crop);
      std::vector<Tensor> chunk;
      for (int i = 0; i < cfg.chunk_length; ++i)
        chunk.push_back(crop_frame(frames[t + i], y0, x0, cfg.crop));
      RdLoss rl = rd_loss(codec, chunk, cfg.lambda, rng);
      Tensor scaled = rl.loss * (1.0 / cfg.batch_size);
      scaled.backward();
      lsum += rl.loss.item();
      dsum += rl.distortion.item();
      rsum += rl.rate_bpp.item();
    }
    lsum /= cfg.batch_size;
    dsum /= cfg.batch_size;
    rsum /= cfg.batch_size;
    if (!std::isfinite(lsum)) {
      std::ostringstream msg;
      msg << "training diverged at step " << step << ": loss=" << lsum
          << " distortion=" << dsum << " rate_bpp=" << rsum << " lr=" << lr;
      throw std::runtime_error(msg.str());
    }
    opt.clip_grad_norm(cfg.grad_clip);
    opt.step();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    log << step << ',' << lsum << ',' << dsum << ',' << rsum << ',' << lr
        << ',' << secs << '\n';
    log.flush();
    if (step == 0) res.first_loss = lsum;
    res.final_loss = lsum;
    ++res.steps;
  }
  codec.invalidate_tables();
  return res;
}

// ---------------------------------------------------------------------------
// config file

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key=value");
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

void apply_config(const std::map<std::string, std::string>& kv,
                  CodecConfig& cc, TrainConfig& tc) {
  for (const auto& [k, v] : kv) {
    if (k == "family") cc.family = family_from_string(v);
    else if (k == "frame_channels") cc.frame_channels = std::stoi(v);
    else if (k == "gop_size") cc.gop_size = std::stoi(v);
    else if (k == "hyper_channels") cc.hyper_channels = std::stoi(v);
    else if (k == "embed_dim") cc.transform.embed_dim = std::stoi(v);
    else if (k == "stage_depths") cc.transform.stage_depths = parse_int_list(v);
    else if (k == "window_size") cc.transform.window_size = std::stoi(v);
    else if (k == "num_heads") cc.transform.num_heads = parse_int_list(v);
    else if (k == "patch_size") cc.transform.patch_size = std::stoi(v);
    else if (k == "latent_channels") cc.transform.latent_channels = std::stoi(v);
    else if (k == "flaff_expansion") cc.transform.flaff_expansion = std::stod(v);
    else if (k == "scales") cc.scale_space.scales = parse_double_list(v);
    else if (k == "kernel_truncation") cc.scale_space.kernel_truncation = std::stod(v);
    else if (k == "lambda") tc.lambda = std::stod(v);
    else if (k == "epochs") tc.epochs = std::stoi(v);
    else if (k == "batch_size") tc.batch_size = std::stoi(v);
    else if (k == "crop") tc.crop = std::stoi(v);
    else if (k == "lr_initial") tc.lr_initial = std::stod(v);
    else if (k == "lr_final") tc.lr_final = std::stod(v);
    else if (k == "seed") tc.seed = (uint64_t)std::stoull(v);
    else if (k == "chunk_length") tc.chunk_length = std::stoi(v);
    else if (k == "max_steps") tc.max_steps = std::stoi(v);
    else if (k == "grad_clip") tc.grad_clip = std::stod(v);
    else throw std::runtime_error("unknown config key: " + k);
  }
}

}  // namespace ssf
