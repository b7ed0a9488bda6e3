// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Ready-made finite-difference checks of the hand-written backward passes on
// small random problems (64-bit).

#pragma once

#include <cstddef>
#include <cstdint>

#include "phonmt/model.hpp"
#include "phonmt/numerics.hpp"

namespace phonmt {

struct GradCheckOptions {
  std::size_t probes = 100;
  double h = 1e-4;
  std::uint64_t seed = 1;
};

// Joint embedding layer alone under the loss sum_ij c_ij * tanh(e_ij) with
// random c, over random sentences that include multi-syllable and <unk> tokens.
GradCheckResult check_embedding_gradients(std::size_t width, double beta, const GradCheckOptions& options);

// Default configuration of the full-model check: 2 layers, width 16, no dropout.
ModelConfig tiny_gradcheck_config();

// Full model loss (label-smoothed cross-entropy over two random sentence pairs).
// Dropout is disabled regardless of config.dropout.
GradCheckResult check_model_gradients(const ModelConfig& config, const GradCheckOptions& options);

}  // namespace phonmt
