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

#include "contrastiq/archive.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>

#include "contrastiq/error.hpp"
#include "contrastiq/textio.hpp"

namespace ciq {
namespace {

constexpr char kMagic[4] = {'C', 'Q', 'W', 'A'};

std::uint64_t element_count(std::span<const std::uint32_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::uint64_t{1},
                         std::multiplies<std::uint64_t>());
}

std::string shape_string(std::span<const std::uint32_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  std::span<const std::uint8_t> view() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::TruncatedFile, "archive ends early");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T le() {
    const auto b = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(T{b[i]} << (8 * i));
    return v;
  }
  std::string str(std::size_t n) {
    const auto b = take(n);
    return std::string(b.begin(), b.end());
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void WeightArchive::add(std::string name, std::vector<std::uint32_t> shape,
                        std::vector<float> values) {
  if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max())
    throw Error(ErrorCode::InvalidArgument, "archive entry name length out of range");
  if (shape.size() > std::numeric_limits<std::uint8_t>::max())
    throw Error(ErrorCode::InvalidArgument, "archive entry rank too large: " + name);
  if (element_count(shape) != values.size())
    throw Error(ErrorCode::InvalidArgument, "archive entry " + name + ": shape " +
                                                shape_string(shape) + " does not hold " +
                                                std::to_string(values.size()) + " values");
  if (find(name)) throw Error(ErrorCode::InvalidArgument, "duplicate archive entry " + name);
  entries_.push_back({std::move(name), std::move(shape), std::move(values)});
}

const ArchiveEntry* WeightArchive::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

const ArchiveEntry& WeightArchive::require(std::string_view name,
                                           std::span<const std::uint32_t> shape) const {
  const ArchiveEntry* e = find(name);
  if (!e) throw Error(ErrorCode::MissingParameter, std::string(name));
  if (!std::equal(e->shape.begin(), e->shape.end(), shape.begin(), shape.end()))
    throw Error(ErrorCode::ShapeMismatch, std::string(name) + ": expected " +
                                              shape_string(shape) + ", archive has " +
                                              shape_string(e->shape));
  return *e;
}

std::optional<std::string> WeightArchive::meta(const std::string& key) const {
  const auto it = metadata_.find(key);
  if (it == metadata_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint8_t> WeightArchive::serialize() const {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint16_t>(kVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    w.le<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.le<std::uint8_t>(static_cast<std::uint8_t>(e.shape.size()));
    for (const auto d : e.shape) w.le<std::uint32_t>(d);
    for (const float v : e.values) w.f32(v);
  }
  w.le<std::uint32_t>(static_cast<std::uint32_t>(metadata_.size()));
  for (const auto& [key, value] : metadata_) {
    if (key.size() > std::numeric_limits<std::uint16_t>::max() ||
        value.size() > std::numeric_limits<std::uint32_t>::max())
      throw Error(ErrorCode::InvalidArgument, "archive metadata too long: " + key);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(key.size()));
    w.bytes(key.data(), key.size());
    w.le<std::uint32_t>(static_cast<std::uint32_t>(value.size()));
    w.bytes(value.data(), value.size());
  }
  w.le<std::uint32_t>(crc32_of(w.view()));
  return w.take();
}

namespace {

WeightArchive parse_body(std::span<const std::uint8_t> body) {
  Reader r(body);
  r.take(4);
  const auto version = r.le<std::uint16_t>();
  if (version != WeightArchive::kVersion)
    throw Error(ErrorCode::BadMagic, "unsupported archive version " + std::to_string(version));

  WeightArchive a;
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.le<std::uint16_t>());
    const auto rank = r.le<std::uint8_t>();
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) d = r.le<std::uint32_t>();
    const std::uint64_t n = element_count(shape);
    if (n > body.size() / 4) throw Error(ErrorCode::TruncatedFile, "entry " + name + " overruns file");
    std::vector<float> values(n);
    for (auto& v : values) v = std::bit_cast<float>(r.le<std::uint32_t>());
    a.add(std::move(name), std::move(shape), std::move(values));
  }
  const auto n_meta = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.str(r.le<std::uint16_t>());
    a.metadata()[std::move(key)] = r.str(r.le<std::uint32_t>());
  }
  return a;
}

}  // namespace

WeightArchive WeightArchive::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::BadMagic, "not a CQWA archive");
  if (bytes.size() < sizeof(kMagic) + 2 + 4 + 4 + 4)
    throw Error(ErrorCode::TruncatedFile, "archive shorter than its fixed header");

  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc32_of(body) != tail.le<std::uint32_t>()) {
    // A cut-off file also fails the CRC; its structure runs past the end.
    try {
      parse_body(bytes);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TruncatedFile)
        throw Error(ErrorCode::TruncatedFile, "archive ends before its last entry");
    }
    throw Error(ErrorCode::ChecksumMismatch, "archive CRC32 does not match its contents");
  }
  return parse_body(body);
}

WeightArchive load_weight_archive(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return WeightArchive::deserialize(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void save_weight_archive(const WeightArchive& a, const std::filesystem::path& path) {
  write_file_bytes(path, a.serialize());
}

}  // namespace ciq
