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

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <string>

#include "contrastiq/error.hpp"
#include "contrastiq/image.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::image {
namespace {

constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool looks_like_png(std::span<const std::uint8_t> bytes) {
  // A prefix of the signature counts: a truncated header is corrupt PNG data,
  // not an unknown format.
  const std::size_t n = std::min<std::size_t>(bytes.size(), sizeof(kPngMagic));
  return n >= 4 && std::memcmp(bytes.data(), kPngMagic, n) == 0;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::CorruptData, "png: " + msg);
  }
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0 || image.width > (1u << 15) ||
      image.height > (1u << 15)) {
    png_image_free(&image);
    throw Error(ErrorCode::CorruptData, "png: implausible dimensions");
  }
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::CorruptData, "png: " + msg);
  }
  return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height),
                     std::move(data));
}

// Netpbm header tokenizer: whitespace separated, '#' starts a comment line.
class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1L << 20)) throw Error(ErrorCode::CorruptData, "pnm: value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::CorruptData, "pnm: malformed header");
    return static_cast<int>(value);
  }

  /// Position of the first raster byte (after the single whitespace byte).
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw Error(ErrorCode::CorruptData, "pnm: truncated header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

RasterImage decode_pnm(std::span<const std::uint8_t> bytes, bool gray) {
  PnmHeader header(bytes);
  const int width = header.next_int();
  const int height = header.next_int();
  const int maxval = header.next_int();
  if (width < 1 || height < 1) throw Error(ErrorCode::CorruptData, "pnm: zero dimension");
  if (maxval < 1 || maxval > 255)
    throw Error(ErrorCode::UnsupportedFormat, "pnm: only 8-bit maxval is supported");
  const std::size_t offset = header.raster_offset();
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const std::size_t need = pixels * (gray ? 1 : 3);
  if (bytes.size() < offset + need) throw Error(ErrorCode::CorruptData, "pnm: truncated raster");

  RasterImage img(width, height);
  auto out = img.data();
  const auto scale = [maxval](std::uint8_t v) -> std::uint8_t {
    if (maxval == 255) return v;
    return saturate_u8(255.0 * std::min<int>(v, maxval) / maxval);
  };
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int c = 0; c < 3; ++c) {
      out[i * 3 + c] = scale(bytes[offset + (gray ? i : i * 3 + c)]);
    }
  }
  return img;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (looks_like_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5'))
    return decode_pnm(bytes, bytes[1] == '5');
  throw Error(ErrorCode::UnsupportedFormat, "expected PNG or binary PPM/PGM data");
}

RasterImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr))
    throw Error(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr))
    throw Error(ErrorCode::IoFailure, std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data().begin(), img.data().end());
  return out;
}

void write_png(const RasterImage& img, const std::filesystem::path& path) {
  write_file_bytes(path, encode_png(img));
}

}  // namespace ciq::image
