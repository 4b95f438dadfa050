// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "vizforge/store/record.hpp"

namespace vizforge::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture(const std::string& rel);

SampleRecord paired(SourceType type, std::string instruction, std::string code);
SampleRecord code_only(SourceType type, std::string code);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vizforge::testing
