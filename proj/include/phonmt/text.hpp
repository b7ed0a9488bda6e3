// Copyright 2026 The phonmt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace phonmt {

// A whitespace-tokenized sentence.
using Sentence = std::vector<std::string>;

// Splits a UTF-8 string into its code points, each returned as a view into `s`.
// Invalid lead bytes are treated as single-byte characters.
std::vector<std::string_view> utf8_chars(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view line);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

// ASCII-only lowercasing; non-ASCII bytes are left alone.
std::string ascii_lower(std::string_view s);

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<Sentence> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<Sentence>& corpus);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

}  // namespace phonmt
