// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "semguide/core/random.hpp"
#include "semguide/core/tape.hpp"
#include "semguide/core/tensor.hpp"

namespace semguide::nets {

/// Ordered, named float parameters. Initialization draws from a per-name
/// stream, so adding or removing one parameter never shifts another's values.
class ParamSet {
 public:
  Tensor32& create_conv(const std::string& name, int out_ch, int in_ch, int k, std::uint64_t seed) {
    Tensor32 w = Tensor32::zeros({out_ch, in_ch, k, k});
    Rng rng = named_stream(seed, name);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * k * k);
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(rng.uniform(-bound, bound));
    return add(name, std::move(w));
  }

  Tensor32& create_matrix(const std::string& name, int rows, int cols, std::uint64_t seed) {
    Tensor32 w = Tensor32::zeros({rows, cols});
    Rng rng = named_stream(seed, name);
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(rng.uniform(-bound, bound));
    return add(name, std::move(w));
  }

  Tensor32& create_full(const std::string& name, Shape shape, float value) {
    return add(name, Tensor32::full(std::move(shape), value));
  }

  Tensor32& add(const std::string& name, Tensor32 value) {
    if (index_.count(name)) throw TensorError("param '" + name + "' already exists");
    index_[name] = names_.size();
    names_.push_back(name);
    values_.push_back(std::move(value));
    return values_.back();
  }

  const Tensor32& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw TensorError("unknown param '" + name + "'");
    return values_[it->second];
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  Tensor32& value(std::size_t i) { return values_[i]; }
  const Tensor32& value(std::size_t i) const { return values_[i]; }

  bool all_finite() const {
    for (const Tensor32& v : values_)
      if (!v.all_finite()) return false;
    return true;
  }

  /// Content hash over names, shapes and payload bytes.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor32> values_;
  std::map<std::string, std::size_t> index_;
};

/// Tape bindings for one forward/backward pass. With a null tape the raw
/// tensors pass through (evaluation mode).
class BoundParams {
 public:
  BoundParams(const ParamSet& set, Tape<float>* tape) : set_(&set), tape_(tape) {}

  Tensor32 get(const std::string& name) {
    if (!tape_) return set_->get(name);
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Tensor32 leaf = tape_->leaf(set_->get(name));
    bound_.emplace(name, leaf);
    return leaf;
  }

  /// Gradients collected after backward, keyed by name (missing = untouched).
  std::map<std::string, Tensor32> grads() const {
    std::map<std::string, Tensor32> out;
    if (!tape_) return out;
    for (const auto& [name, leaf] : bound_) out.emplace(name, tape_->grad(leaf));
    return out;
  }

 private:
  const ParamSet* set_;
  Tape<float>* tape_;
  std::map<std::string, Tensor32> bound_;
};

/// Adaptive-moment gradient descent with bias correction, epsilon 1e-8.
class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(ParamSet& params, const std::map<std::string, Tensor32>& grads, double lr_scale = 1.0) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(static_cast<std::size_t>(params.value(i).size()), 0.0f);
        v_[i].assign(static_cast<std::size_t>(params.value(i).size()), 0.0f);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    const float lr_t = static_cast<float>(lr_ * lr_scale * std::sqrt(bc2) / bc1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto it = grads.find(params.names()[i]);
      if (it == grads.end()) continue;
      const Tensor32& g = it->second;
      Tensor32& p = params.value(i);
      for (std::int64_t j = 0; j < p.size(); ++j) {
        const float gj = g[j];
        m_[i][static_cast<std::size_t>(j)] =
            static_cast<float>(beta1_) * m_[i][static_cast<std::size_t>(j)] +
            static_cast<float>(1.0 - beta1_) * gj;
        v_[i][static_cast<std::size_t>(j)] =
            static_cast<float>(beta2_) * v_[i][static_cast<std::size_t>(j)] +
            static_cast<float>(1.0 - beta2_) * gj * gj;
        p[j] -= lr_t * m_[i][static_cast<std::size_t>(j)] /
                (std::sqrt(v_[i][static_cast<std::size_t>(j)]) + 1e-8f);
      }
    }
  }

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace semguide::nets
