#pragma once

// Parameter container base. Modules own their parameters and expose them
// recursively by dotted name for the optimizer and checkpoint I/O.

#include <string>
#include <utility>
#include <vector>

#include "ssf/tensor.hpp"

namespace ssf {

class Module {
 public:
  virtual ~Module() = default;
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    collect("", out);
    return out;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (auto& [name, t] : named_parameters()) n += t.size();
    return n;
  }

 protected:
  Tensor add_param(const std::string& name, Tensor t) {
    t.set_requires_grad(true);
    params_.emplace_back(name, t);
    return t;
  }

  void add_child(const std::string& name, Module* m) {
    children_.emplace_back(name, m);
  }

 private:
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor>>& out) const {
    for (auto& [name, t] : params_) out.emplace_back(prefix + name, t);
    for (auto& [name, m] : children_) m->collect(prefix + name + ".", out);
  }

  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<std::pair<std::string, Module*>> children_;
};

}  // namespace ssf
