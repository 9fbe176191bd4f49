#include "ssf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "ssf/kernels.hpp"

namespace ssf {

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string r = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += ",";
    r += std::to_string(s[i]);
  }
  return r + ")";
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

// ---------------------------------------------------------------------------
// Rng: xoshiro256** seeded with splitmix64.

namespace {
uint64_t splitmix64(uint64_t& x) {
  uint64_t z = (x += 0x9E3779B97f4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(uint64_t seed) {
  for (auto& s : s_) s = splitmix64(seed);
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform01() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double Rng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  double u1 = uniform01(), u2 = uniform01();
  while (u1 <= 1e-300) u1 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  cached_ = r * std::sin(2.0 * M_PI * u2);
  have_cached_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int lo, int hi) {
  return lo + (int)(next_u64() % (uint64_t)(hi - lo + 1));
}

// ---------------------------------------------------------------------------

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }

namespace {

NodePtr make_node(Shape shape, std::vector<NodePtr> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.resize((size_t)numel(n->shape));
  if (g_grad_enabled) {
    for (const auto& p : parents)
      if (p->requires_grad) {
        n->requires_grad = true;
        break;
      }
  }
  if (n->requires_grad) n->parents = std::move(parents);
  return n;
}

void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value.assign((size_t)numel(s), 0.0);
  n->requires_grad = requires_grad;
  n->is_leaf = true;
  return Tensor(n);
}

Tensor Tensor::full(const Shape& s, double v) {
  Tensor t = zeros(s);
  std::fill(t.data().begin(), t.data().end(), v);
  return t;
}

Tensor Tensor::from(const Shape& s, std::vector<double> data,
                    bool requires_grad) {
  check((int64_t)data.size() == numel(s), "from: data size mismatch " +
                                              shape_str(s));
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  n->is_leaf = true;
  return Tensor(n);
}

Tensor Tensor::scalar(double v) { return full({1}, v); }

std::vector<double>& Tensor::grad() {
  node_->ensure_grad();
  return node_->grad;
}

double Tensor::item() const {
  check(node_->value.size() == 1, "item: tensor not scalar");
  return node_->value[0];
}

void Tensor::set_requires_grad(bool b) {
  node_->requires_grad = b;
  node_->is_leaf = true;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() {
  check(node_->value.size() == 1, "backward: root must be scalar");
  // Topological order by iterative DFS.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) n->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// elementwise

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, Fwd f, Bwd dfdx) {
  auto n = make_node(x.shape(), {x.node()});
  const auto& xv = x.data();
  for (size_t i = 0; i < xv.size(); ++i) n->value[i] = f(xv[i]);
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, dfdx](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        xp->grad[i] += self.grad[i] * dfdx(xp->value[i], self.value[i]);
    };
  }
  return Tensor(n);
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = a.data()[i] + b.data()[i];
  if (n->requires_grad) {
    auto ap = a.node(), bp = b.node();
    n->backward_fn = [ap, bp](Node& self) {
      if (ap->requires_grad) {
        ap->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += self.grad[i];
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) bp->grad[i] += self.grad[i];
      }
    };
  }
  return Tensor(n);
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "sub: shape mismatch");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = a.data()[i] - b.data()[i];
  if (n->requires_grad) {
    auto ap = a.node(), bp = b.node();
    n->backward_fn = [ap, bp](Node& self) {
      if (ap->requires_grad) {
        ap->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += self.grad[i];
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) bp->grad[i] -= self.grad[i];
      }
    };
  }
  return Tensor(n);
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "mul: shape mismatch");
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = a.data()[i] * b.data()[i];
  if (n->requires_grad) {
    auto ap = a.node(), bp = b.node();
    n->backward_fn = [ap, bp](Node& self) {
      if (ap->requires_grad) {
        ap->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          ap->grad[i] += self.grad[i] * bp->value[i];
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          bp->grad[i] += self.grad[i] * ap->value[i];
      }
    };
  }
  return Tensor(n);
}

Tensor operator*(const Tensor& a, double s) {
  return unary_op(a, [s](double x) { return x * s; },
                  [s](double, double) { return s; });
}
Tensor operator*(double s, const Tensor& a) { return a * s; }

Tensor operator+(const Tensor& a, double s) {
  return unary_op(a, [s](double x) { return x + s; },
                  [](double, double) { return 1.0; });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double round_half_away(double v) {
  return v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2pi = 0.3989422804014327;
  return unary_op(
      x, [](double v) { return v * normal_cdf(v); },
      [](double v, double) {
        return normal_cdf(v) + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_t(const Tensor& x) {
  return unary_op(x, [](double v) { return std::tanh(v); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor softplus(const Tensor& x) {
  return unary_op(
      x,
      [](double v) { return v > 30 ? v : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor exp_t(const Tensor& x) {
  return unary_op(x, [](double v) { return std::exp(v); },
                  [](double, double y) { return y; });
}

Tensor log_t(const Tensor& x) {
  return unary_op(x, [](double v) { return std::log(v); },
                  [](double v, double) { return 1.0 / v; });
}

Tensor clamp01(const Tensor& x) {
  // Straight-through: gradient passes unchanged so training signal survives
  // saturated reconstructions.
  return unary_op(x, [](double v) { return std::clamp(v, 0.0, 1.0); },
                  [](double, double) { return 1.0; });
}

Tensor clamp_min(const Tensor& x, double lo) {
  return unary_op(x, [lo](double v) { return std::max(v, lo); },
                  [lo](double v, double) { return v > lo ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// reductions

Tensor sum(const Tensor& x) {
  auto n = make_node({1}, {x.node()});
  n->value[0] = std::accumulate(x.data().begin(), x.data().end(), 0.0);
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp](Node& self) {
      xp->ensure_grad();
      const double g = self.grad[0];
      for (auto& gv : xp->grad) gv += g;
    };
  }
  return Tensor(n);
}

Tensor mean(const Tensor& x) { return sum(x) * (1.0 / (double)x.size()); }

Tensor mse(const Tensor& a, const Tensor& b) {
  Tensor d = a - b;
  return mean(d * d);
}

Tensor rate_bits(const Tensor& p) {
  constexpr double inv_ln2 = 1.4426950408889634;
  auto n = make_node({1}, {p.node()});
  double acc = 0.0;
  for (double v : p.data()) acc -= std::log2(v);
  n->value[0] = acc;
  if (n->requires_grad) {
    auto pp = p.node();
    n->backward_fn = [pp](Node& self) {
      pp->ensure_grad();
      const double g = self.grad[0];
      for (size_t i = 0; i < pp->grad.size(); ++i)
        pp->grad[i] -= g * inv_ln2 / pp->value[i];
    };
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// shape / indexing

Tensor reshape(const Tensor& x, const Shape& s) {
  check(numel(s) == x.size(), "reshape: size mismatch " + shape_str(x.shape()) +
                                  " -> " + shape_str(s));
  auto n = make_node(s, {x.node()});
  n->value = x.data();
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) xp->grad[i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
  check(x.shape().size() == 2, "slice_rows: need 2-d");
  const int rows = x.dim(0), cols = x.dim(1);
  check(0 <= r0 && r0 < r1 && r1 <= rows, "slice_rows: bad range");
  auto n = make_node({r1 - r0, cols}, {x.node()});
  std::copy(x.data().begin() + (size_t)r0 * cols,
            x.data().begin() + (size_t)r1 * cols, n->value.begin());
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, r0, cols](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        xp->grad[(size_t)r0 * cols + i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
  check(x.shape().size() == 2, "slice_cols: need 2-d");
  const int rows = x.dim(0), cols = x.dim(1);
  check(0 <= c0 && c0 < c1 && c1 <= cols, "slice_cols: bad range");
  const int w = c1 - c0;
  auto n = make_node({rows, w}, {x.node()});
  for (int r = 0; r < rows; ++r)
    std::copy(x.data().begin() + (size_t)r * cols + c0,
              x.data().begin() + (size_t)r * cols + c1,
              n->value.begin() + (size_t)r * w);
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, c0, cols, w, rows](Node& self) {
      xp->ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < w; ++c)
          xp->grad[(size_t)r * cols + c0 + c] += self.grad[(size_t)r * w + c];
    };
  }
  return Tensor(n);
}

Tensor transpose(const Tensor& x) {
  check(x.shape().size() == 2, "transpose: need 2-d");
  const int rows = x.dim(0), cols = x.dim(1);
  auto n = make_node({cols, rows}, {x.node()});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      n->value[(size_t)c * rows + r] = x.data()[(size_t)r * cols + c];
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, rows, cols](Node& self) {
      xp->ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          xp->grad[(size_t)r * cols + c] += self.grad[(size_t)c * rows + r];
    };
  }
  return Tensor(n);
}

Tensor concat_rows(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "concat_rows: empty");
  const int cols = xs[0].dim(1);
  int rows = 0;
  std::vector<NodePtr> parents;
  for (const auto& t : xs) {
    check(t.shape().size() == 2 && t.dim(1) == cols, "concat_rows: col mismatch");
    rows += t.dim(0);
    parents.push_back(t.node());
  }
  auto n = make_node({rows, cols}, parents);
  size_t off = 0;
  for (const auto& t : xs) {
    std::copy(t.data().begin(), t.data().end(), n->value.begin() + off);
    off += t.data().size();
  }
  if (n->requires_grad) {
    auto ps = parents;
    n->backward_fn = [ps](Node& self) {
      size_t off = 0;
      for (auto& p : ps) {
        if (p->requires_grad) {
          p->ensure_grad();
          for (size_t i = 0; i < p->value.size(); ++i)
            p->grad[i] += self.grad[off + i];
        }
        off += p->value.size();
      }
    };
  }
  return Tensor(n);
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "concat_cols: empty");
  const int rows = xs[0].dim(0);
  int cols = 0;
  std::vector<NodePtr> parents;
  for (const auto& t : xs) {
    check(t.shape().size() == 2 && t.dim(0) == rows, "concat_cols: row mismatch");
    cols += t.dim(1);
    parents.push_back(t.node());
  }
  auto n = make_node({rows, cols}, parents);
  int coff = 0;
  for (const auto& t : xs) {
    const int w = t.dim(1);
    for (int r = 0; r < rows; ++r)
      std::copy(t.data().begin() + (size_t)r * w,
                t.data().begin() + (size_t)(r + 1) * w,
                n->value.begin() + (size_t)r * cols + coff);
    coff += w;
  }
  if (n->requires_grad) {
    auto ps = parents;
    n->backward_fn = [ps, rows, cols](Node& self) {
      int coff = 0;
      for (auto& p : ps) {
        const int w = p->shape[1];
        if (p->requires_grad) {
          p->ensure_grad();
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < w; ++c)
              p->grad[(size_t)r * w + c] +=
                  self.grad[(size_t)r * cols + coff + c];
        }
        coff += w;
      }
    };
  }
  return Tensor(n);
}

Tensor gather_rows(const Tensor& x, std::vector<int> idx) {
  check(x.shape().size() == 2, "gather_rows: need 2-d");
  const int cols = x.dim(1), rows = x.dim(0);
  for (int i : idx) check(0 <= i && i < rows, "gather_rows: index out of range");
  auto n = make_node({(int)idx.size(), cols}, {x.node()});
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy(x.data().begin() + (size_t)idx[r] * cols,
              x.data().begin() + (size_t)(idx[r] + 1) * cols,
              n->value.begin() + r * cols);
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, idx = std::move(idx), cols](Node& self) {
      xp->ensure_grad();
      for (size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < cols; ++c)
          xp->grad[(size_t)idx[r] * cols + c] += self.grad[r * cols + c];
    };
  }
  return Tensor(n);
}

Tensor gather_elems(const Tensor& x, std::vector<int> idx) {
  const int64_t sz = x.size();
  for (int i : idx) check(0 <= i && i < sz, "gather_elems: index out of range");
  auto n = make_node({(int)idx.size()}, {x.node()});
  for (size_t i = 0; i < idx.size(); ++i) n->value[i] = x.data()[idx[i]];
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, idx = std::move(idx)](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < idx.size(); ++i)
        xp->grad[idx[i]] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor concat_ch(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "concat_ch: empty");
  const int h = xs[0].dim(1), w = xs[0].dim(2);
  int c = 0;
  std::vector<NodePtr> parents;
  for (const auto& t : xs) {
    check(t.shape().size() == 3 && t.dim(1) == h && t.dim(2) == w,
          "concat_ch: spatial mismatch");
    c += t.dim(0);
    parents.push_back(t.node());
  }
  auto n = make_node({c, h, w}, parents);
  size_t off = 0;
  for (const auto& t : xs) {
    std::copy(t.data().begin(), t.data().end(), n->value.begin() + off);
    off += t.data().size();
  }
  if (n->requires_grad) {
    auto ps = parents;
    n->backward_fn = [ps](Node& self) {
      size_t off = 0;
      for (auto& p : ps) {
        if (p->requires_grad) {
          p->ensure_grad();
          for (size_t i = 0; i < p->value.size(); ++i)
            p->grad[i] += self.grad[off + i];
        }
        off += p->value.size();
      }
    };
  }
  return Tensor(n);
}

Tensor slice_ch(const Tensor& x, int c0, int c1) {
  check(x.shape().size() == 3, "slice_ch: need 3-d");
  const int h = x.dim(1), w = x.dim(2);
  check(0 <= c0 && c0 < c1 && c1 <= x.dim(0), "slice_ch: bad range");
  const size_t plane = (size_t)h * w;
  auto n = make_node({c1 - c0, h, w}, {x.node()});
  std::copy(x.data().begin() + c0 * plane, x.data().begin() + c1 * plane,
            n->value.begin());
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, c0, plane](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        xp->grad[c0 * plane + i] += self.grad[i];
    };
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.shape().size() == 2 && b.shape().size() == 2 && a.dim(1) == b.dim(0),
        "matmul: shape mismatch " + shape_str(a.shape()) + " x " +
            shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), nn = b.dim(1);
  auto n = make_node({m, nn}, {a.node(), b.node()});
  kernels::matmul(a.data().data(), b.data().data(), n->value.data(), m, k, nn);
  if (n->requires_grad) {
    auto ap = a.node(), bp = b.node();
    n->backward_fn = [ap, bp, m, k, nn](Node& self) {
      if (ap->requires_grad) {
        ap->ensure_grad();
        kernels::matmul_nt_acc(self.grad.data(), bp->value.data(),
                               ap->grad.data(), m, nn, k);
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        kernels::matmul_tn_acc(ap->value.data(), self.grad.data(),
                               bp->grad.data(), k, m, nn);
      }
    };
  }
  return Tensor(n);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check(a.shape().size() == 2 && b.shape().size() == 2 && a.dim(1) == b.dim(1),
        "matmul_nt: shape mismatch");
  const int m = a.dim(0), k = a.dim(1), nn = b.dim(0);
  auto n = make_node({m, nn}, {a.node(), b.node()});
  kernels::matmul_nt(a.data().data(), b.data().data(), n->value.data(), m, k,
                     nn);
  if (n->requires_grad) {
    auto ap = a.node(), bp = b.node();
    n->backward_fn = [ap, bp, m, k, nn](Node& self) {
      if (ap->requires_grad) {
        ap->ensure_grad();
        // dA = dC * B   (dC:[m,nn], B:[nn,k])
        kernels::matmul_acc(self.grad.data(), bp->value.data(), ap->grad.data(),
                            m, nn, k);
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        // dB = dC^T * A (dC:[m,nn] -> [nn,m], A:[m,k])
        kernels::matmul_tn_acc(self.grad.data(), ap->value.data(),
                               bp->grad.data(), nn, m, k);
      }
    };
  }
  return Tensor(n);
}

Tensor add_row_bias(const Tensor& x, const Tensor& b) {
  check(x.shape().size() == 2 && b.size() == x.dim(1),
        "add_row_bias: shape mismatch");
  const int rows = x.dim(0), cols = x.dim(1);
  auto n = make_node(x.shape(), {x.node(), b.node()});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      n->value[(size_t)r * cols + c] = x.data()[(size_t)r * cols + c] +
                                       b.data()[c];
  if (n->requires_grad) {
    auto xp = x.node(), bp = b.node();
    n->backward_fn = [xp, bp, rows, cols](Node& self) {
      if (xp->requires_grad) {
        xp->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          xp->grad[i] += self.grad[i];
      }
      if (bp->requires_grad) {
        bp->ensure_grad();
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            bp->grad[c] += self.grad[(size_t)r * cols + c];
      }
    };
  }
  return Tensor(n);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return b.defined() ? add_row_bias(matmul(x, w), b) : matmul(x, w);
}

Tensor mul_rows(const Tensor& x, const Tensor& a) {
  check(x.shape().size() == 2 && a.size() == x.dim(1),
        "mul_rows: shape mismatch");
  const int rows = x.dim(0), cols = x.dim(1);
  auto n = make_node(x.shape(), {x.node(), a.node()});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      n->value[(size_t)r * cols + c] =
          x.data()[(size_t)r * cols + c] * a.data()[c];
  if (n->requires_grad) {
    auto xp = x.node(), ap = a.node();
    n->backward_fn = [xp, ap, rows, cols](Node& self) {
      if (xp->requires_grad) {
        xp->ensure_grad();
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            xp->grad[(size_t)r * cols + c] +=
                self.grad[(size_t)r * cols + c] * ap->value[c];
      }
      if (ap->requires_grad) {
        ap->ensure_grad();
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            ap->grad[c] += self.grad[(size_t)r * cols + c] *
                           xp->value[(size_t)r * cols + c];
      }
    };
  }
  return Tensor(n);
}

Tensor softmax_rows(const Tensor& x) {
  check(x.shape().size() == 2, "softmax_rows: need 2-d");
  const int rows = x.dim(0), cols = x.dim(1);
  auto n = make_node(x.shape(), {x.node()});
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + (size_t)r * cols;
    double* yr = n->value.data() + (size_t)r * cols;
    double mx = xr[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += (yr[c] = std::exp(xr[c] - mx));
    for (int c = 0; c < cols; ++c) yr[c] /= s;
  }
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp, rows, cols](Node& self) {
      xp->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        const double* y = self.value.data() + (size_t)r * cols;
        const double* dy = self.grad.data() + (size_t)r * cols;
        double dot = 0.0;
        for (int c = 0; c < cols; ++c) dot += y[c] * dy[c];
        for (int c = 0; c < cols; ++c)
          xp->grad[(size_t)r * cols + c] += y[c] * (dy[c] - dot);
      }
    };
  }
  return Tensor(n);
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps) {
  check(x.shape().size() == 2 && gamma.size() == x.dim(1) &&
            beta.size() == x.dim(1),
        "layer_norm: shape mismatch");
  const int rows = x.dim(0), cols = x.dim(1);
  auto n = make_node(x.shape(), {x.node(), gamma.node(), beta.node()});
  std::vector<double> inv_std(rows), mu(rows);
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + (size_t)r * cols;
    double m = 0.0;
    for (int c = 0; c < cols; ++c) m += xr[c];
    m /= cols;
    double v = 0.0;
    for (int c = 0; c < cols; ++c) v += (xr[c] - m) * (xr[c] - m);
    v /= cols;
    const double is = 1.0 / std::sqrt(v + eps);
    mu[r] = m;
    inv_std[r] = is;
    for (int c = 0; c < cols; ++c)
      n->value[(size_t)r * cols + c] =
          (xr[c] - m) * is * gamma.data()[c] + beta.data()[c];
  }
  if (n->requires_grad) {
    auto xp = x.node(), gp = gamma.node(), bp = beta.node();
    n->backward_fn = [xp, gp, bp, rows, cols, mu = std::move(mu),
                      inv_std = std::move(inv_std)](Node& self) {
      for (int r = 0; r < rows; ++r) {
        const double* xr = xp->value.data() + (size_t)r * cols;
        const double* dy = self.grad.data() + (size_t)r * cols;
        const double is = inv_std[r], m = mu[r];
        if (gp->requires_grad || bp->requires_grad) {
          gp->ensure_grad();
          bp->ensure_grad();
          for (int c = 0; c < cols; ++c) {
            gp->grad[c] += dy[c] * (xr[c] - m) * is;
            bp->grad[c] += dy[c];
          }
        }
        if (xp->requires_grad) {
          xp->ensure_grad();
          double s1 = 0.0, s2 = 0.0;
          for (int c = 0; c < cols; ++c) {
            const double gdy = dy[c] * gp->value[c];
            const double xhat = (xr[c] - m) * is;
            s1 += gdy;
            s2 += gdy * xhat;
          }
          s1 /= cols;
          s2 /= cols;
          for (int c = 0; c < cols; ++c) {
            const double gdy = dy[c] * gp->value[c];
            const double xhat = (xr[c] - m) * is;
            xp->grad[(size_t)r * cols + c] += is * (gdy - s1 - xhat * s2);
          }
        }
      }
    };
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// conv

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  check(x.shape().size() == 3 && w.shape().size() == 4 &&
            w.dim(1) == x.dim(0) && w.dim(2) == w.dim(3),
        "conv2d: shape mismatch x" + shape_str(x.shape()) + " w" +
            shape_str(w.shape()));
  const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int co = w.dim(0), k = w.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  check(oh > 0 && ow > 0, "conv2d: output would be empty");
  std::vector<NodePtr> parents{x.node(), w.node()};
  if (b.defined()) parents.push_back(b.node());
  auto n = make_node({co, oh, ow}, parents);
  kernels::conv2d_fwd(x.data().data(), w.data().data(),
                      b.defined() ? b.data().data() : nullptr, n->value.data(),
                      ci, h, wd, co, k, stride, pad);
  if (n->requires_grad) {
    auto xp = x.node(), wp = w.node();
    NodePtr bp = b.defined() ? b.node() : nullptr;
    n->backward_fn = [xp, wp, bp, ci, h, wd, co, k, stride, pad](Node& self) {
      if (xp->requires_grad) {
        xp->ensure_grad();
        kernels::conv2d_bwd_input(self.grad.data(), wp->value.data(),
                                  xp->grad.data(), ci, h, wd, co, k, stride,
                                  pad);
      }
      if (wp->requires_grad || (bp && bp->requires_grad)) {
        wp->ensure_grad();
        if (bp) bp->ensure_grad();
        kernels::conv2d_bwd_weight(self.grad.data(), xp->value.data(),
                                   wp->grad.data(),
                                   bp ? bp->grad.data() : nullptr, ci, h, wd,
                                   co, k, stride, pad);
      }
    };
  }
  return Tensor(n);
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int pad, int out_pad) {
  check(x.shape().size() == 3 && w.shape().size() == 4 &&
            w.dim(0) == x.dim(0) && w.dim(2) == w.dim(3),
        "conv_transpose2d: shape mismatch");
  const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int co = w.dim(1), k = w.dim(2);
  const int oh = (h - 1) * stride - 2 * pad + k + out_pad;
  const int ow = (wd - 1) * stride - 2 * pad + k + out_pad;
  check(oh > 0 && ow > 0, "conv_transpose2d: output would be empty");
  std::vector<NodePtr> parents{x.node(), w.node()};
  if (b.defined()) parents.push_back(b.node());
  auto n = make_node({co, oh, ow}, parents);
  kernels::tconv2d_fwd(x.data().data(), w.data().data(),
                       b.defined() ? b.data().data() : nullptr, n->value.data(),
                       ci, h, wd, co, k, stride, pad, out_pad);
  if (n->requires_grad) {
    auto xp = x.node(), wp = w.node();
    NodePtr bp = b.defined() ? b.node() : nullptr;
    n->backward_fn = [xp, wp, bp, ci, h, wd, co, k, stride, pad,
                      out_pad](Node& self) {
      if (xp->requires_grad) {
        xp->ensure_grad();
        kernels::tconv2d_bwd_input(self.grad.data(), wp->value.data(),
                                   xp->grad.data(), ci, h, wd, co, k, stride,
                                   pad, out_pad);
      }
      if (wp->requires_grad || (bp && bp->requires_grad)) {
        wp->ensure_grad();
        if (bp) bp->ensure_grad();
        kernels::tconv2d_bwd_weight(self.grad.data(), xp->value.data(),
                                    wp->grad.data(),
                                    bp ? bp->grad.data() : nullptr, ci, h, wd,
                                    co, k, stride, pad, out_pad);
      }
    };
  }
  return Tensor(n);
}

Tensor depthwise3x3(const Tensor& x, const Tensor& w, const Tensor& b) {
  check(x.shape().size() == 3 && w.shape().size() == 3 &&
            w.dim(0) == x.dim(0) && w.dim(1) == 3 && w.dim(2) == 3,
        "depthwise3x3: shape mismatch");
  const int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  std::vector<NodePtr> parents{x.node(), w.node()};
  if (b.defined()) parents.push_back(b.node());
  auto n = make_node({c, h, wd}, parents);
  kernels::dwconv3x3_fwd(x.data().data(), w.data().data(),
                         b.defined() ? b.data().data() : nullptr,
                         n->value.data(), c, h, wd);
  if (n->requires_grad) {
    auto xp = x.node(), wp = w.node();
    NodePtr bp = b.defined() ? b.node() : nullptr;
    n->backward_fn = [xp, wp, bp, c, h, wd](Node& self) {
      xp->ensure_grad();
      wp->ensure_grad();
      if (bp) bp->ensure_grad();
      kernels::dwconv3x3_bwd(self.grad.data(), xp->value.data(),
                             wp->value.data(),
                             xp->requires_grad ? xp->grad.data() : nullptr,
                             wp->requires_grad ? wp->grad.data() : nullptr,
                             bp && bp->requires_grad ? bp->grad.data() : nullptr,
                             c, h, wd);
    };
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// compression-specific

Tensor add_uniform_noise(const Tensor& x, Rng& rng) {
  auto n = make_node(x.shape(), {x.node()});
  for (size_t i = 0; i < n->value.size(); ++i)
    n->value[i] = x.data()[i] + (rng.uniform01() - 0.5);
  if (n->requires_grad) {
    auto xp = x.node();
    n->backward_fn = [xp](Node& self) {
      xp->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) xp->grad[i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor gaussian_bin_mass(const Tensor& v, const Tensor& sigma, double floor_p) {
  check(v.shape() == sigma.shape(), "gaussian_bin_mass: shape mismatch");
  constexpr double inv_sqrt2pi = 0.3989422804014327;
  auto n = make_node(v.shape(), {v.node(), sigma.node()});
  for (size_t i = 0; i < n->value.size(); ++i) {
    const double s = sigma.data()[i];
    const double up = (v.data()[i] + 0.5) / s, um = (v.data()[i] - 0.5) / s;
    n->value[i] = std::max(normal_cdf(up) - normal_cdf(um), floor_p);
  }
  if (n->requires_grad) {
    auto vp = v.node(), sp = sigma.node();
    n->backward_fn = [vp, sp, floor_p](Node& self) {
      constexpr double c = inv_sqrt2pi;
      if (vp->requires_grad) vp->ensure_grad();
      if (sp->requires_grad) sp->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) {
        if (self.value[i] <= floor_p) continue;  // flat region
        const double s = sp->value[i];
        const double up = (vp->value[i] + 0.5) / s;
        const double um = (vp->value[i] - 0.5) / s;
        const double pu = c * std::exp(-0.5 * up * up);
        const double pm = c * std::exp(-0.5 * um * um);
        const double g = self.grad[i];
        if (vp->requires_grad) vp->grad[i] += g * (pu - pm) / s;
        if (sp->requires_grad) sp->grad[i] += g * (-pu * up + pm * um) / s;
      }
    };
  }
  return Tensor(n);
}

}  // namespace ssf
