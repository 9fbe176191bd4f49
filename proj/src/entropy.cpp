#include "ssf/entropy.hpp"

#include <cmath>
#include <stdexcept>

namespace ssf {

Tensor quantize_train(const Tensor& y, Rng& rng) {
  return add_uniform_noise(y, rng);
}

std::vector<double> quantize_test(const std::vector<double>& y) {
  std::vector<double> out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = round_half_away(y[i]);
  return out;
}

Tensor quantize_test(const Tensor& y) {
  return Tensor::from(y.shape(), quantize_test(y.data()));
}

Tensor gaussian_likelihood(const Tensor& v, const Tensor& sigma,
                           double sigma_floor) {
  return gaussian_bin_mass(v, clamp_min(sigma, sigma_floor), kLikelihoodFloor);
}

// ---------------------------------------------------------------------------
// GaussianConditional tables

std::vector<double> GaussianConditional::scale_table() const {
  std::vector<double> t(num_scales);
  const double lo = std::log(sigma_floor), hi = std::log(max_scale);
  for (int i = 0; i < num_scales; ++i)
    t[i] = std::exp(lo + (hi - lo) * i / (num_scales - 1));
  return t;
}

int GaussianConditional::scale_index(double sigma) const {
  const auto table = scale_table();
  for (int i = 0; i < num_scales; ++i)
    if (table[i] >= sigma - 1e-12) return i;
  return num_scales - 1;
}

std::vector<CdfTable> GaussianConditional::build_cdf_tables() const {
  std::vector<CdfTable> tables;
  tables.reserve(num_scales);
  for (double s : scale_table()) {
    int r = 0;
    while (r < 4096 && 2.0 * normal_cdf(-(r + 0.5) / s) >= tail_mass) ++r;
    std::vector<double> pmf;
    pmf.reserve(2 * r + 2);
    for (int v = -r; v <= r; ++v)
      pmf.push_back(normal_cdf((v + 0.5) / s) - normal_cdf((v - 0.5) / s));
    pmf.push_back(std::max(tail_mass, 2.0 * normal_cdf(-(r + 0.5) / s)));
    CdfTable t;
    t.min_value = -r;
    t.num_values = 2 * r + 1;
    auto freq = quantize_pmf(pmf);
    t.cdf.resize(freq.size() + 1, 0);
    for (size_t i = 0; i < freq.size(); ++i) t.cdf[i + 1] = t.cdf[i] + freq[i];
    tables.push_back(std::move(t));
  }
  return tables;
}

// ---------------------------------------------------------------------------
// FactorizedPrior

namespace {
constexpr int kWidths[] = {1, 3, 3, 3, 1};
constexpr int kNumStages = 4;
constexpr double kInitScale = 10.0;
}  // namespace

FactorizedPrior::FactorizedPrior(int channels, Rng& rng) : channels_(channels) {
  const double scale = std::pow(kInitScale, 1.0 / kNumStages);
  for (int s = 0; s < kNumStages; ++s) {
    Stage st;
    st.in = kWidths[s];
    st.out = kWidths[s + 1];
    const double h_init = std::log(std::expm1(1.0 / scale / st.out));
    Tensor h = Tensor::full({channels, st.in * st.out}, h_init);
    Tensor b = Tensor::zeros({channels, st.out});
    for (auto& v : b.data()) v = rng.uniform(-0.5, 0.5);
    st.h = add_param("stage" + std::to_string(s) + ".h", h);
    st.b = add_param("stage" + std::to_string(s) + ".b", b);
    if (s + 1 < kNumStages)
      st.a = add_param("stage" + std::to_string(s) + ".a",
                       Tensor::zeros({channels, st.out}));
    stages_.push_back(st);
  }
}

Tensor FactorizedPrior::stage_forward(int ch, Tensor u, int stage) const {
  const Stage& st = stages_[stage];
  Tensor w = reshape(softplus(slice_rows(st.h, ch, ch + 1)), {st.in, st.out});
  Tensor b = reshape(slice_rows(st.b, ch, ch + 1), {st.out});
  u = add_row_bias(matmul(u, w), b);
  if (stage + 1 < kNumStages) {
    Tensor a = reshape(tanh_t(slice_rows(st.a, ch, ch + 1)), {st.out});
    u = u + mul_rows(tanh_t(u), a);
  }
  return u;
}

Tensor FactorizedPrior::likelihood(const Tensor& z) const {
  if (z.shape().size() != 3 || z.dim(0) != channels_)
    throw std::invalid_argument("FactorizedPrior: z must be [" +
                                std::to_string(channels_) + ",h,w]");
  const int h = z.dim(1), w = z.dim(2), n = h * w;
  std::vector<Tensor> per_ch;
  for (int ch = 0; ch < channels_; ++ch) {
    Tensor flat = reshape(slice_ch(z, ch, ch + 1), {n, 1});
    Tensor cu = flat + 0.5, cl = flat + (-0.5);
    for (int s = 0; s < kNumStages; ++s) {
      cu = stage_forward(ch, cu, s);
      cl = stage_forward(ch, cl, s);
    }
    Tensor p = sigmoid(cu) - sigmoid(cl);
    per_ch.push_back(clamp_min(p, kLikelihoodFloor));
  }
  return reshape(concat_rows(per_ch), z.shape());
}

double FactorizedPrior::cdf_value(int channel, double x) const {
  double u[3] = {x, 0, 0};
  for (int s = 0; s < kNumStages; ++s) {
    const Stage& st = stages_[s];
    const double* hp = st.h.data().data() + (size_t)channel * st.in * st.out;
    const double* bp = st.b.data().data() + (size_t)channel * st.out;
    double v[3] = {0, 0, 0};
    for (int o = 0; o < st.out; ++o) {
      double acc = bp[o];
      for (int i = 0; i < st.in; ++i) {
        const double hw = hp[i * st.out + o];
        acc += u[i] * (hw > 30 ? hw : std::log1p(std::exp(hw)));
      }
      v[o] = acc;
    }
    if (s + 1 < kNumStages) {
      const double* ap = st.a.data().data() + (size_t)channel * st.out;
      for (int o = 0; o < st.out; ++o)
        v[o] += std::tanh(ap[o]) * std::tanh(v[o]);
    }
    for (int o = 0; o < 3; ++o) u[o] = v[o];
  }
  return 1.0 / (1.0 + std::exp(-u[0]));
}

std::vector<CdfTable> FactorizedPrior::build_cdf_tables(double tail_mass) const {
  std::vector<CdfTable> tables;
  tables.reserve(channels_);
  for (int ch = 0; ch < channels_; ++ch) {
    int vmin = 0, vmax = 0;
    while (vmin > -4096 && cdf_value(ch, vmin - 0.5) >= tail_mass / 2) --vmin;
    while (vmax < 4096 && 1.0 - cdf_value(ch, vmax + 0.5) >= tail_mass / 2)
      ++vmax;
    std::vector<double> pmf;
    double covered = 0.0;
    for (int v = vmin; v <= vmax; ++v) {
      const double p = std::max(
          cdf_value(ch, v + 0.5) - cdf_value(ch, v - 0.5), kLikelihoodFloor);
      pmf.push_back(p);
      covered += p;
    }
    pmf.push_back(std::max(1.0 - covered, tail_mass));
    CdfTable t;
    t.min_value = vmin;
    t.num_values = vmax - vmin + 1;
    auto freq = quantize_pmf(pmf);
    t.cdf.resize(freq.size() + 1, 0);
    for (size_t i = 0; i < freq.size(); ++i) t.cdf[i + 1] = t.cdf[i] + freq[i];
    tables.push_back(std::move(t));
  }
  return tables;
}

}  // namespace ssf
