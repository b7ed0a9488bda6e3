// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#include "phonmt/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "phonmt/error.hpp"

namespace phonmt {

void LrSchedule::validate() const {
  if (!(factor > 0.0)) throw Error("learning-rate factor must be positive");
  if (warmup_steps < 1) throw Error("warmup steps must be at least 1");
  if (model_dim < 1) throw Error("model dimension must be at least 1");
}

double noam_lr(std::size_t step, const LrSchedule& sched) {
  sched.validate();
  if (step == 0) throw Error("noam_lr: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(sched.warmup_steps);
  return sched.factor * std::pow(static_cast<double>(sched.model_dim), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

template <typename T>
LossAndGrad<T> label_smoothed_ce(std::span<const T> logits, std::size_t target, double epsilon) {
  const std::size_t v = logits.size();
  if (v < 2) throw Error("label_smoothed_ce: need at least two classes");
  if (target >= v) throw Error("label_smoothed_ce: target " + std::to_string(target) + " out of range");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error("label_smoothed_ce: smoothing must lie in [0, 1)");

  using W = wide_t<T>;
  W mx = logits[0];
  for (T x : logits) mx = std::max<W>(mx, x);
  W sum = 0;
  for (T x : logits) sum += std::exp(static_cast<W>(x) - mx);
  const W log_z = mx + std::log(sum);

  const W off = static_cast<W>(epsilon) / static_cast<W>(v);
  const W on = 1 - static_cast<W>(epsilon) + off;
  LossAndGrad<T> out;
  out.grad.resize(v);
  W loss = 0;
  for (std::size_t i = 0; i < v; ++i) {
    const W log_p = static_cast<W>(logits[i]) - log_z;
    const W q = i == target ? on : off;
    loss -= q * log_p;
    out.grad[i] = static_cast<T>(std::exp(log_p) - q);
  }
  out.loss = static_cast<double>(loss);
  return out;
}

template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
               double lr) {
  if (params.size() != grads.size()) throw Error("adam_step: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->dims());
      state.second_moment.emplace_back(p->dims());
    }
  }
  if (state.first_moment.size() != params.size()) throw Error("adam_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state.first_moment[i])) {
      throw Error("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
  }

  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T step_size = static_cast<T>(lr / c1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
  const T eps = static_cast<T>(o.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    const T* g = grads[i]->data();
    T* m = state.first_moment[i].data();
    T* v = state.second_moment[i].data();
    const std::size_t n = params[i]->size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1 - b1) * g[j];
      v[j] = b2 * v[j] + (1 - b2) * g[j] * g[j];
      p[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
  }
}

template <typename T>
GradCheckResult finite_diff_check(const std::function<double()>& loss, std::span<const ParamRef<T>> params,
                                  std::size_t probes, double h, std::uint64_t seed) {
  std::size_t total = 0;
  for (const auto& p : params) {
    if (!p.value || !p.grad || !p.value->same_shape(*p.grad)) {
      throw Error("finite_diff_check: parameter '" + p.name + "' has no matching gradient");
    }
    total += p.value->size();
  }
  if (total == 0) throw Error("finite_diff_check: no parameters");

  Rng rng(seed);
  GradCheckResult result;
  result.probes = probes;
  for (std::size_t k = 0; k < probes; ++k) {
    std::size_t flat = rng.below(total);
    std::size_t which = 0;
    while (flat >= params[which].value->size()) flat -= params[which++].value->size();
    auto& p = params[which];
    T& x = (*p.value)[flat];
    const T saved = x;
    x = static_cast<T>(saved + h);
    const double plus = loss();
    x = static_cast<T>(saved - h);
    const double minus = loss();
    x = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) throw Error("finite_diff_check: non-finite loss");
    const double numeric = (plus - minus) / (2.0 * h);
    const double analytic = static_cast<double>((*p.grad)[flat]);
    const double rel = std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
    if (rel > result.max_rel_error || k == 0) {
      result.max_rel_error = std::max(result.max_rel_error, rel);
      result.worst_param = p.name;
      result.worst_index = flat;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

template <typename T>
Tensor<T> dropout_mask(const std::vector<std::size_t>& dims, double p, Rng& rng) {
  Tensor<T> mask(dims, T{1});
  if (p <= 0.0) return mask;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& m : mask.values()) m = rng.bernoulli(p) ? T{0} : keep_scale;
  return mask;
}

template LossAndGrad<float> label_smoothed_ce(std::span<const float>, std::size_t, double);
template LossAndGrad<double> label_smoothed_ce(std::span<const double>, std::size_t, double);
template void adam_step(std::span<Tensor<float>* const>, std::span<const Tensor<float>* const>, AdamState<float>&,
                        double);
template void adam_step(std::span<Tensor<double>* const>, std::span<const Tensor<double>* const>,
                        AdamState<double>&, double);
template GradCheckResult finite_diff_check(const std::function<double()>&, std::span<const ParamRef<float>>,
                                           std::size_t, double, std::uint64_t);
template GradCheckResult finite_diff_check(const std::function<double()>&, std::span<const ParamRef<double>>,
                                           std::size_t, double, std::uint64_t);
template Tensor<float> dropout_mask(const std::vector<std::size_t>&, double, Rng&);
template Tensor<double> dropout_mask(const std::vector<std::size_t>&, double, Rng&);

}  // namespace phonmt
