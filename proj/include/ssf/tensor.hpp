#pragma once

// Minimal reverse-mode autodiff over dense double tensors. Graphs are built
// per forward pass; leaves flagged requires_grad accumulate into persistent
// grad buffers until cleared by the optimizer. Inference paths wrap work in
// NoGradGuard so no tape is recorded.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ssf {

using Shape = std::vector<int>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool is_leaf = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad();
};

class Rng {
 public:
  explicit Rng(uint64_t seed);
  uint64_t next_u64();
  // Uniform in [0,1) with 53 random bits; platform-independent.
  double uniform01();
  double uniform(double lo, double hi);
  double normal();  // standard normal, Box-Muller
  int uniform_int(int lo, int hi);  // inclusive bounds

 private:
  uint64_t s_[4];
  bool have_cached_ = false;
  double cached_ = 0.0;
};

bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool prev;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, double v);
  static Tensor from(const Shape& s, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[i]; }
  int64_t size() const { return (int64_t)node_->value.size(); }
  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& grad();
  double item() const;
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b);
  void zero_grad();
  NodePtr node() const { return node_; }

  // Reverse pass from a scalar.
  void backward();

 private:
  NodePtr node_;
};

// --- elementwise ---
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double s);
Tensor operator*(double s, const Tensor& a);
Tensor operator+(const Tensor& a, double s);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_t(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp_t(const Tensor& x);
Tensor log_t(const Tensor& x);
// Clamp to [0,1]; straight-through gradient.
Tensor clamp01(const Tensor& x);
// max(x, lo) with zero gradient below the floor.
Tensor clamp_min(const Tensor& x, double lo);

// --- reductions ---
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mse(const Tensor& a, const Tensor& b);
// sum(-log2(p))
Tensor rate_bits(const Tensor& p);

// --- shape / indexing ---
Tensor reshape(const Tensor& x, const Shape& s);
Tensor slice_rows(const Tensor& x, int r0, int r1);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor transpose(const Tensor& x);  // [n,c] -> [c,n]
Tensor concat_rows(const std::vector<Tensor>& xs);
Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor gather_rows(const Tensor& x, std::vector<int> idx);
Tensor gather_elems(const Tensor& x, std::vector<int> idx);
// channel ops on [c,h,w]
Tensor concat_ch(const std::vector<Tensor>& xs);
Tensor slice_ch(const Tensor& x, int c0, int c1);

// --- linear algebra ---
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor add_row_bias(const Tensor& x, const Tensor& b);
Tensor mul_rows(const Tensor& x, const Tensor& a);  // broadcast [c] over rows
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-6);

// --- conv ---
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad, int out_pad);
Tensor depthwise3x3(const Tensor& x, const Tensor& w, const Tensor& b);

// --- compression-specific ---
// y + u, u ~ U[-0.5, 0.5); gradient passes through unchanged.
Tensor add_uniform_noise(const Tensor& x, Rng& rng);
// Unit-bin Gaussian mass: Phi((v+.5)/sigma) - Phi((v-.5)/sigma), floored.
Tensor gaussian_bin_mass(const Tensor& v, const Tensor& sigma, double floor_p);

// Standard normal CDF.
double normal_cdf(double x);
// Round half away from zero.
double round_half_away(double v);

}  // namespace ssf
