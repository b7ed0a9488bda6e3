// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace phonmt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace phonmt
