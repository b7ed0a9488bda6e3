// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

// Binary checkpoint format, little-endian throughout:
//
//   "PNMT"                      magic
//   u32 version                 kCheckpointVersion
//   u32 length, bytes           UTF-8 config block of key=value lines
//   repeated tensor records:    u32 name length, name, u32 rank, u32 dims[rank],
//                               f32 values (row-major)
//
// The config block carries the model configuration plus vocabularies, BPE
// merges and the syllable inventory; records appear in Weights::visit order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>

#include "phonmt/translation.hpp"

namespace phonmt {

inline constexpr char kCheckpointMagic[4] = {'P', 'N', 'M', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  using Error::Error;
};

void save_checkpoint(const TranslationModel& model, std::ostream& out);
void save_checkpoint(const TranslationModel& model, const std::filesystem::path& path);

// Throws CheckpointError on a bad magic, version, truncated or malformed file.
TranslationModel load_checkpoint(std::istream& in);
TranslationModel load_checkpoint(const std::filesystem::path& path);

}  // namespace phonmt
