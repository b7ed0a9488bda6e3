// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Optimizer, learning-rate schedule, loss and gradient checking.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phonmt/rng.hpp"
#include "phonmt/tensor.hpp"

namespace phonmt {

// Inverse-square-root schedule with linear warmup:
//   factor * model_dim^-0.5 * min(step^-0.5, step * warmup^-1.5)
struct LrSchedule {
  double factor = 2.0;
  std::size_t model_dim = 512;
  std::size_t warmup_steps = 4000;

  void validate() const;
};

double noam_lr(std::size_t step, const LrSchedule& sched);

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  std::vector<T> grad;
};

// Cross-entropy of softmax(logits) against the smoothed target distribution
// q(target) = 1 - eps + eps/V, q(other) = eps/V. The gradient w.r.t. the logits
// is softmax(logits) - q.
template <typename T>
LossAndGrad<T> label_smoothed_ce(std::span<const T> logits, std::size_t target, double epsilon);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

template <typename T>
struct AdamState {
  AdamOptions options;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update over parallel parameter/gradient lists. The
// state is lazily shaped on the first call; shapes must match afterwards.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
               double lr);

// Handle on one parameter tensor and its analytic gradient.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  const Tensor<T>* grad = nullptr;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Probes `probes` coordinates drawn uniformly over all parameters and compares
// the analytic gradient a with the central difference n = (f(x+h) - f(x-h)) / 2h.
// Returns max |a - n| / (|a| + |n| + 1e-12). The loss must not have side effects
// on the parameters; each probe restores the coordinate.
template <typename T>
GradCheckResult finite_diff_check(const std::function<double()>& loss, std::span<const ParamRef<T>> params,
                                  std::size_t probes, double h, std::uint64_t seed);

// Inverted dropout mask: each entry is 0 with probability p, else 1/(1-p).
template <typename T>
Tensor<T> dropout_mask(const std::vector<std::size_t>& dims, double p, Rng& rng);

}  // namespace phonmt
