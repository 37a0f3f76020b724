// Copyright 2026 The contrastiq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ciq {

/**
 * Named float32 tensors plus string metadata.
 *
 * Binary layout, all integers little-endian:
 *
 *   "CQWA"                     4 bytes magic
 *   version                    u16 (= 1)
 *   entry count                u32
 *   per entry:
 *     name length              u16, then UTF-8 name bytes
 *     rank                     u8, then rank x u32 dims
 *     values                   product(dims) x f32 little-endian
 *   metadata count             u32
 *   per metadata pair (sorted by key):
 *     key length               u16, then key bytes
 *     value length             u32, then value bytes
 *   crc32                      u32, IEEE CRC-32 of every preceding byte
 */
struct ArchiveEntry {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> values;

  friend bool operator==(const ArchiveEntry&, const ArchiveEntry&) = default;
};

class WeightArchive {
 public:
  static constexpr std::uint16_t kVersion = 1;

  /// Throws InvalidArgument on duplicate names or value/shape size mismatch.
  void add(std::string name, std::vector<std::uint32_t> shape, std::vector<float> values);

  const ArchiveEntry* find(std::string_view name) const;

  /// Throws MissingParameter, or ShapeMismatch when `shape` differs.
  const ArchiveEntry& require(std::string_view name,
                              std::span<const std::uint32_t> shape) const;

  const std::vector<ArchiveEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::map<std::string, std::string>& metadata() noexcept { return metadata_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }
  std::optional<std::string> meta(const std::string& key) const;

  std::vector<std::uint8_t> serialize() const;
  /// Throws BadMagic, TruncatedFile, ChecksumMismatch.
  static WeightArchive deserialize(std::span<const std::uint8_t> bytes);

  friend bool operator==(const WeightArchive&, const WeightArchive&) = default;

 private:
  std::vector<ArchiveEntry> entries_;
  std::map<std::string, std::string> metadata_;
};

WeightArchive load_weight_archive(const std::filesystem::path& path);
void save_weight_archive(const WeightArchive& a, const std::filesystem::path& path);

}  // namespace ciq
