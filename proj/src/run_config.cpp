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


#include <cmath>
#include <functional>
#include <map>

#include "contrastiq/cli.hpp"
#include "contrastiq/error.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::cli {
namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': " + what);
}

double as_double(const std::string& key, std::string_view v) {
  const auto d = parse_double(v);
  if (!d || !std::isfinite(*d)) bad(key, "expected a number, got '" + std::string(v) + "'");
  return *d;
}

long long as_int(const std::string& key, std::string_view v) {
  const auto i = parse_int(v);
  if (!i) bad(key, "expected an integer, got '" + std::string(v) + "'");
  return *i;
}

std::uint64_t as_u64(const std::string& key, std::string_view v) {
  const auto i = as_int(key, v);
  if (i < 0) bad(key, "must be >= 0");
  return static_cast<std::uint64_t>(i);
}

bool as_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, "expected true or false, got '" + std::string(v) + "'");
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig c;
  auto& t = c.train;
  const auto path = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  using Setter = std::function<void(const std::string&, std::string_view)>;
  const std::map<std::string, Setter> setters = {
      {"learning_rate", [&](auto& k, auto v) { t.learning_rate = as_double(k, v); }},
      {"weight_decay", [&](auto& k, auto v) { t.weight_decay = as_double(k, v); }},
      {"epochs", [&](auto& k, auto v) { t.epochs = static_cast<int>(as_int(k, v)); }},
      {"batch_size", [&](auto& k, auto v) { t.batch_size = static_cast<int>(as_int(k, v)); }},
      {"dropout", [&](auto& k, auto v) { t.dropout = as_double(k, v); }},
      {"seed", [&](auto& k, auto v) { t.seed = as_u64(k, v); }},
      {"scheduler_factor", [&](auto& k, auto v) { t.scheduler.factor = as_double(k, v); }},
      {"scheduler_patience",
       [&](auto& k, auto v) { t.scheduler.patience = static_cast<int>(as_int(k, v)); }},
      {"min_lr", [&](auto& k, auto v) { t.scheduler.min_lr = as_double(k, v); }},
      {"beta1", [&](auto& k, auto v) { t.adamw.beta1 = as_double(k, v); }},
      {"beta2", [&](auto& k, auto v) { t.adamw.beta2 = as_double(k, v); }},
      {"eps", [&](auto& k, auto v) { t.adamw.eps = as_double(k, v); }},
      {"manifest", [&](auto&, auto v) { c.manifest = path(v); }},
      {"cache", [&](auto&, auto v) { c.cache = path(v); }},
      {"output_dir", [&](auto&, auto v) { c.output_dir = path(v); }},
      {"split_fraction", [&](auto& k, auto v) { c.split_fraction = as_double(k, v); }},
      {"extractor", [&](auto&, auto v) { c.extractor = std::string(v); }},
      {"backbone", [&](auto&, auto v) { c.backbone = std::string(v); }},
      {"weights", [&](auto&, auto v) { c.weights = path(v); }},
      {"random_weights", [&](auto& k, auto v) { c.random_weights = as_u64(k, v); }},
      {"augment", [&](auto& k, auto v) { c.augment = as_bool(k, v); }},
      {"pairs_per_image",
       [&](auto& k, auto v) { c.pairs_per_image = static_cast<int>(as_int(k, v)); }},
      {"threads", [&](auto& k, auto v) { c.threads = static_cast<unsigned>(as_u64(k, v)); }},
  };

  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidArgument,
                  "config line " + std::to_string(i + 1) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    it->second(key, value);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return parse(read_file_text(path), path.parent_path());
}

void RunConfig::validate() const {
  train.validate();
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) bad("split_fraction", "must be in (0,1)");
  if (extractor != "handcrafted" && extractor != "cnn")
    bad("extractor", "expected handcrafted or cnn, got '" + extractor + "'");
  if (pairs_per_image < 1) bad("pairs_per_image", "must be >= 1");
  if (manifest.empty()) bad("manifest", "is required");
}

}  // namespace ciq::cli
