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


#include "contrastiq/cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "CLI11.hpp"
#include "contrastiq/error.hpp"
#include "contrastiq/features.hpp"
#include "contrastiq/metrics.hpp"
#include "contrastiq/synth.hpp"
#include "contrastiq/textio.hpp"

namespace ciq::cli {
namespace {

namespace fs = std::filesystem;
using dataset::Manifest;
using dataset::Split;
using features::FeatureCache;
using features::FeatureVector;

// Siamese heads carry at most this many training rows as scoring anchors.
constexpr std::size_t kMaxAnchors = 64;

template <typename F>
auto for_flag(const std::string& flag, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), flag + ": " + e.detail());
  }
}

void require_file(const fs::path& p, const std::string& flag) {
  if (!fs::exists(p)) throw Error(ErrorCode::MissingFile, flag + ": " + p.string() + " not found");
}

std::string num(double v) { return format_double(v); }

struct ExtractorChoice {
  std::string kind = "handcrafted";
  std::string backbone = "nano";
  fs::path weights;
  std::optional<std::uint64_t> random_weights;
};

// Builds the extractor and the cache metadata needed to rebuild it later.
features::Extractor make_extractor(const ExtractorChoice& c,
                                   std::map<std::string, std::string>& meta) {
  if (c.kind == "handcrafted") return features::Extractor::handcrafted();
  if (c.kind != "cnn")
    throw Error(ErrorCode::InvalidArgument, "--extractor: unknown extractor '" + c.kind + "'");
  const auto cfg = for_flag("--config", [&] { return features::BackboneConfig::preset(c.backbone); });
  std::shared_ptr<const WeightArchive> weights;
  if (!c.weights.empty()) {
    require_file(c.weights, "--weights");
    weights = std::make_shared<WeightArchive>(load_weight_archive(c.weights));
    meta["weights"] = fs::absolute(c.weights).lexically_normal().string();
  } else if (c.random_weights) {
    weights = std::make_shared<WeightArchive>(features::random_backbone_weights(cfg, *c.random_weights));
    meta["weights"] = "random:" + std::to_string(*c.random_weights);
  } else {
    throw Error(ErrorCode::InvalidArgument, "--weights: the cnn extractor needs --weights or --random-weights");
  }
  meta["backbone"] = cfg.name;
  return features::Extractor::cnn(cfg, std::move(weights));
}

// Rebuilds the extractor recorded in head metadata; flags take precedence.
features::Extractor extractor_for_head(const std::map<std::string, std::string>& extra,
                                       ExtractorChoice flags) {
  const auto tag = extra.count("extractor") ? extra.at("extractor") : "handcrafted";
  std::map<std::string, std::string> ignored;
  if (tag == "handcrafted") return features::Extractor::handcrafted();
  if (tag.rfind("cnn-", 0) != 0)
    throw Error(ErrorCode::InvalidArgument, "head was trained on unknown extractor '" + tag + "'");
  flags.kind = "cnn";
  flags.backbone = tag.substr(4);
  if (flags.weights.empty() && !flags.random_weights && extra.count("weights")) {
    const auto& w = extra.at("weights");
    if (w.rfind("random:", 0) == 0) {
      const auto seed = parse_int(std::string_view(w).substr(7));
      if (!seed || *seed < 0) throw Error(ErrorCode::CorruptData, "head weights metadata '" + w + "'");
      flags.random_weights = static_cast<std::uint64_t>(*seed);
    } else {
      flags.weights = w;
    }
  }
  return make_extractor(flags, ignored);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::MissingFile, "--bases: " + dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pgm")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw Error(ErrorCode::InvalidArgument, "--bases: no .png/.ppm/.pgm images in " + dir.string());
  return out;
}

// ---- synth -----------------------------------------------------------------

struct SynthOpts {
  std::string bases;
  int procedural = 0;
  std::vector<double> gammas, contrasts;
  std::uint64_t seed = 0;
  std::string out;
  int variants = 1;
  double rotation = 10.0;
};

int cmd_synth(const SynthOpts& o, std::ostream& out) {
  synth::SynthSpec spec;
  spec.output_dir = o.out;
  spec.seed = o.seed;
  if (o.variants < 1) throw Error(ErrorCode::InvalidArgument, "--variants: must be >= 1");
  if (o.procedural < 0) throw Error(ErrorCode::InvalidArgument, "--procedural: must be >= 0");
  if (!(o.rotation >= 0.0 && o.rotation <= 45.0))
    throw Error(ErrorCode::InvalidArgument, "--max-rotation: must be in [0,45]");
  spec.variants_per_base = o.variants;
  spec.variant_rotation_limit = o.rotation;
  for (double g : o.gammas) {
    spec.levels.push_back(synth::Distortion::gamma(g));
    for_flag("--gammas", [&] { spec.levels.back().validate(); });
  }
  for (double s : o.contrasts) {
    spec.levels.push_back(synth::Distortion::linear_contrast(s));
    for_flag("--contrasts", [&] { spec.levels.back().validate(); });
  }
  if (spec.levels.empty())
    throw Error(ErrorCode::InvalidArgument, "--gammas: give at least one level (or --contrasts)");
  if (!o.bases.empty()) spec.base_images = list_images(o.bases);
  if (spec.base_images.empty() && o.procedural == 0)
    throw Error(ErrorCode::InvalidArgument, "--bases: give a base image directory or --procedural N");
  for (int i = 0; i < o.procedural; ++i) {
    const auto p = fs::path(o.out) / "bases" / ("procedural" + std::to_string(i) + ".png");
    image::write_png(synth::procedural_base(i), p);
    spec.base_images.push_back(p);
  }
  const Manifest m = synth::generate_dataset(spec);
  out << "synth: wrote " << m.size() << " records to "
      << (fs::path(o.out) / "manifest.csv").string() << "\n";
  return kExitOk;
}

// ---- extract ---------------------------------------------------------------

struct ExtractOpts {
  std::string manifest, out;
  ExtractorChoice extractor;
  unsigned threads = 0;
};

int cmd_extract(const ExtractOpts& o, std::ostream& out) {
  require_file(o.manifest, "--manifest");
  const Manifest m = dataset::load_manifest(o.manifest);
  std::map<std::string, std::string> meta;
  const auto ex = make_extractor(o.extractor, meta);
  FeatureCache cache = features::extract_features(m, ex, o.threads);
  cache.extra = meta;
  features::save_feature_cache(cache, o.out);
  out << "extract: " << cache.size() << " rows, dim " << cache.dim << ", " << cache.extractor_tag
      << " -> " << o.out << "\n";
  return kExitOk;
}

// ---- train / pair-train ------------------------------------------------------

struct TrainOpts {
  std::string config, manifest, cache, out;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> pairs_per_image;
  bool augment = false;
  std::optional<unsigned> threads;
};

RunConfig resolve_config(const TrainOpts& o) {
  RunConfig rc;
  if (!o.config.empty()) {
    require_file(o.config, "--config");
    rc = RunConfig::load(o.config);
  }
  if (!o.manifest.empty()) rc.manifest = o.manifest;
  if (!o.cache.empty()) rc.cache = o.cache;
  if (!o.out.empty()) rc.output_dir = o.out;
  if (o.epochs) rc.train.epochs = *o.epochs;
  if (o.seed) rc.train.seed = *o.seed;
  if (o.pairs_per_image) rc.pairs_per_image = *o.pairs_per_image;
  if (o.augment) rc.augment = true;
  if (o.threads) rc.threads = *o.threads;
  rc.validate();
  require_file(rc.manifest, "manifest");
  if (!rc.cache.empty()) require_file(rc.cache, "cache");
  return rc;
}

ExtractorChoice choice_of(const RunConfig& rc) {
  return {rc.extractor, rc.backbone, rc.weights, rc.random_weights};
}

struct Prepared {
  Manifest manifest;
  dataset::ZScoreNormalizer normalizer;
  FeatureCache cache;
};

Prepared prepare(const RunConfig& rc) {
  Prepared p;
  p.manifest = dataset::load_manifest(rc.manifest);
  const bool assigned = std::any_of(p.manifest.records.begin(), p.manifest.records.end(),
                                    [](const auto& r) { return r.split != Split::Unassigned; });
  if (!assigned) p.manifest = dataset::split(p.manifest, rc.split_fraction, rc.train.seed);
  std::vector<dataset::MosRecord> train_rows;
  for (const auto i : p.manifest.indices(Split::Train)) train_rows.push_back(p.manifest.records[i]);
  if (train_rows.empty()) throw Error(ErrorCode::EmptySplit, "manifest has no train rows");
  p.normalizer = dataset::fit_normalizer(std::span<const dataset::MosRecord>(train_rows));
  if (!rc.cache.empty()) {
    p.cache = features::load_feature_cache(rc.cache);
    p.cache.check_matches(p.manifest);
  } else {
    std::map<std::string, std::string> meta;
    p.cache = features::extract_features(p.manifest, make_extractor(choice_of(rc), meta), rc.threads);
    p.cache.extra = meta;
  }
  return p;
}

regressor::HeadModel head_model(regressor::HeadParams params, const Prepared& p,
                                std::string arch) {
  regressor::HeadModel model{std::move(params), p.normalizer, std::move(arch), p.cache.extra};
  model.extra["extractor"] = p.cache.extractor_tag;
  return model;
}

void write_common(const fs::path& dir, const regressor::TrainReport& report, const Prepared& p) {
  write_file_text(dir / "train_report.csv", report.to_csv());
  write_file_text(dir / "normalizer.json", p.normalizer.to_json());
  dataset::save_manifest(p.manifest, dir / "split_manifest.csv");
}

void print_best(std::ostream& out, const char* cmd, const regressor::TrainReport& r) {
  const auto& b = r.best();
  out << cmd << ": " << r.epochs.size() << " epochs, best epoch " << b.epoch
      << " val_mse=" << num(b.val_mse) << " val_plcc=" << num(b.val_plcc)
      << " val_srcc=" << num(b.val_srcc) << "\n";
}

int cmd_train(const TrainOpts& o, std::ostream& out) {
  const RunConfig rc = resolve_config(o);
  const Prepared p = prepare(rc);

  regressor::EpochFeatures augmented;
  std::vector<image::RasterImage> images;
  std::optional<features::Extractor> aug_ex;
  std::vector<std::size_t> train_idx;
  if (rc.augment) {
    std::map<std::string, std::string> meta;
    aug_ex = make_extractor(choice_of(rc), meta);
    if (aug_ex->tag() != p.cache.extractor_tag)
      throw Error(ErrorCode::DimMismatch, "augment extractor " + aug_ex->tag() +
                                              " differs from cache extractor " +
                                              p.cache.extractor_tag);
    images = features::load_images(p.manifest, rc.threads);
    train_idx = p.manifest.indices(Split::Train);
    augmented = [&](std::uint64_t epoch) {
      return features::extract_augmented(images, *aug_ex, rc.train.seed, epoch, train_idx,
                                         rc.threads);
    };
  }

  auto result = regressor::train(p.cache, p.manifest, p.normalizer, rc.train, augmented);
  regressor::save_head(head_model(std::move(result.params), p, "mlp-512-256-1"),
                       rc.output_dir / "head.cqwa");
  write_common(rc.output_dir, result.report, p);
  print_best(out, "train", result.report);
  out << "train: wrote head.cqwa, train_report.csv, normalizer.json, split_manifest.csv to "
      << rc.output_dir.string() << "\n";
  return kExitOk;
}

std::vector<regressor::Anchor> read_anchors(const WeightArchive& a, std::size_t dim) {
  const auto* f = a.find("anchors.features");
  const auto* m = a.find("anchors.mos");
  if (!f || !m) throw Error(ErrorCode::MissingParameter, "siamese head has no anchors");
  if (f->shape.size() != 2 || f->shape[1] != dim || m->shape.size() != 1 ||
      m->shape[0] != f->shape[0])
    throw Error(ErrorCode::DimMismatch, "siamese anchors do not match the head");
  std::vector<regressor::Anchor> anchors(m->shape[0]);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    anchors[i].features.values.assign(f->values.begin() + i * dim, f->values.begin() + (i + 1) * dim);
    anchors[i].mos = m->values[i];
  }
  return anchors;
}

int cmd_pair_train(const TrainOpts& o, std::ostream& out) {
  const RunConfig rc = resolve_config(o);
  if (rc.augment) throw Error(ErrorCode::InvalidArgument, "augment: not supported by pair-train");
  const Prepared p = prepare(rc);
  const auto train_pairs = regressor::make_pairs(p.cache, p.manifest, p.normalizer, Split::Train,
                                                 rc.pairs_per_image, rc.train.seed);
  const auto val_pairs = regressor::make_pairs(p.cache, p.manifest, p.normalizer, Split::Val,
                                               rc.pairs_per_image, rc.train.seed);
  auto result = regressor::siamese_train(train_pairs, val_pairs, rc.train);

  const auto train_idx = p.manifest.indices(Split::Train);
  const std::size_t count = std::min(kMaxAnchors, train_idx.size());
  std::vector<regressor::Anchor> anchors;
  std::vector<float> anchor_features, anchor_mos;
  for (std::size_t k = 0; k < count; ++k) {
    const auto i = train_idx[k * train_idx.size() / count];
    anchors.push_back({p.cache.rows[i], p.manifest.records[i].mos});
    anchor_features.insert(anchor_features.end(), p.cache.rows[i].values.begin(),
                           p.cache.rows[i].values.end());
    anchor_mos.push_back(static_cast<float>(p.manifest.records[i].mos));
  }

  auto archive = regressor::head_to_archive(head_model(result.params, p, "siamese"));
  archive.add("anchors.features",
              {static_cast<std::uint32_t>(count), static_cast<std::uint32_t>(p.cache.dim)},
              anchor_features);
  archive.add("anchors.mos", {static_cast<std::uint32_t>(count)}, anchor_mos);
  save_weight_archive(archive, rc.output_dir / "head.cqwa");
  // Score with the stored (f32) anchors so results match `score` and `eval`.
  const auto stored = read_anchors(archive, p.cache.dim);
  write_common(rc.output_dir, result.report, p);

  std::vector<double> pred, actual;
  std::vector<std::string> paths;
  for (const auto i : p.manifest.indices(Split::Val)) {
    pred.push_back(regressor::siamese_score(p.cache.rows[i], stored, result.params, p.normalizer));
    actual.push_back(p.manifest.records[i].mos);
    paths.push_back(p.manifest.records[i].image_path);
  }
  metrics::EvalReport rep;
  rep.n = pred.size();
  for (std::size_t k = 0; k < pred.size(); ++k) rep.per_image.push_back({paths[k], actual[k], pred[k]});
  write_file_text(rc.output_dir / "val_scores.csv", rep.per_image_csv());

  print_best(out, "pair-train", result.report);
  const auto safe = [&](auto fn) {
    try {
      return num(fn(std::span<const double>(pred), std::span<const double>(actual)));
    } catch (const Error&) {
      return std::string("nan");
    }
  };
  out << "pair-train: anchor-scored val plcc=" << safe(metrics::plcc)
      << " srcc=" << safe(metrics::srcc) << " over " << pred.size() << " images\n";
  return kExitOk;
}

// ---- eval --------------------------------------------------------------------

struct EvalOpts {
  std::string manifest, cache, head, split, subset = "auto", out;
};

std::vector<double> score_rows(const WeightArchive& archive, const regressor::HeadModel& model,
                               std::span<const FeatureVector> rows) {
  if (model.arch == "siamese") {
    const auto anchors = read_anchors(archive, model.params.in_dim());
    std::vector<double> out;
    for (const auto& r : rows)
      out.push_back(regressor::siamese_score(r, anchors, model.params, model.normalizer));
    return out;
  }
  return regressor::predict(rows, model.params, model.normalizer);
}

int cmd_eval(const EvalOpts& o, std::ostream& out) {
  require_file(o.manifest, "--manifest");
  require_file(o.cache, "--cache");
  require_file(o.head, "--head");
  Manifest m = dataset::load_manifest(o.manifest);
  if (!o.split.empty()) {
    require_file(o.split, "--split");
    const Manifest s = dataset::load_manifest(o.split);
    bool same = s.size() == m.size();
    for (std::size_t i = 0; same && i < m.size(); ++i)
      same = s.records[i].image_path == m.records[i].image_path;
    if (!same)
      throw Error(ErrorCode::DimMismatch, "--split: " + o.split + " lists different images than " +
                                              o.manifest);
    for (std::size_t i = 0; i < m.size(); ++i) m.records[i].split = s.records[i].split;
  }
  const FeatureCache cache = features::load_feature_cache(o.cache);
  for_flag("--cache", [&] { cache.check_matches(m); });
  const WeightArchive archive = load_weight_archive(o.head);
  const auto model = regressor::head_from_archive(archive);
  const auto tag = model.extra.count("extractor") ? model.extra.at("extractor") : cache.extractor_tag;
  if (tag != cache.extractor_tag)
    throw Error(ErrorCode::DimMismatch, "--cache: extracted with " + cache.extractor_tag +
                                            " but the head expects " + tag);

  std::vector<std::size_t> idx;
  if (o.subset == "val" || (o.subset == "auto" && !m.indices(Split::Val).empty()))
    idx = m.indices(Split::Val);
  else if (o.subset == "train")
    idx = m.indices(Split::Train);
  else
    for (std::size_t i = 0; i < m.size(); ++i) idx.push_back(i);
  if (idx.empty()) throw Error(ErrorCode::EmptySplit, "--subset: no rows selected");

  std::vector<FeatureVector> rows;
  std::vector<double> actual;
  std::vector<std::string> paths;
  for (const auto i : idx) {
    rows.push_back(cache.rows[i]);
    actual.push_back(m.records[i].mos);
    paths.push_back(m.records[i].image_path);
  }
  const auto pred = score_rows(archive, model, rows);
  const auto report = metrics::evaluate(pred, actual, paths);
  const fs::path dir = o.out;
  write_file_text(dir / "report.json", report.to_json());
  write_file_text(dir / "summary.csv", report.summary_csv());
  write_file_text(dir / "per_image.csv", report.per_image_csv());
  out << "eval: n=" << report.n << " plcc=" << num(report.plcc) << " srcc=" << num(report.srcc)
      << " tolerance_accuracy=" << num(report.tolerance_accuracy) << " mse=" << num(report.mse)
      << "\n";
  return kExitOk;
}

// ---- score -------------------------------------------------------------------

struct ScoreOpts {
  std::string image, head;
  ExtractorChoice extractor;
};

int cmd_score(const ScoreOpts& o, std::ostream& out) {
  require_file(o.head, "--head");
  require_file(o.image, "--image");
  const WeightArchive archive = load_weight_archive(o.head);
  const auto model = regressor::head_from_archive(archive);
  const auto ex = extractor_for_head(model.extra, o.extractor);
  const auto img = image::read_image(o.image);
  const FeatureVector f = ex.extract(img);
  const auto score = score_rows(archive, model, std::span<const FeatureVector>(&f, 1));
  out << num(score[0]) << "\n";
  return kExitOk;
}

// ---- report ------------------------------------------------------------------

struct ReportOpts {
  std::string train_report, per_image, out;
};

int cmd_report(const ReportOpts& o, std::ostream& out) {
  require_file(o.train_report, "--train-report");
  const auto report = for_flag("--train-report", [&] {
    return regressor::TrainReport::from_csv(read_file_text(o.train_report));
  });
  std::string curves = "epoch,train_mse,val_mse,val_plcc,val_srcc,lr,best\n";
  for (const auto& e : report.epochs)
    curves += std::to_string(e.epoch) + "," + num(e.train_mse) + "," + num(e.val_mse) + "," +
              num(e.val_plcc) + "," + num(e.val_srcc) + "," + num(e.lr) + "," +
              (e.epoch == report.best_epoch ? "1" : "0") + "\n";

  std::string scatter = "path,actual_mos,predicted_mos\n";
  if (!o.per_image.empty()) {
    require_file(o.per_image, "--per-image");
    const auto text = read_file_text(o.per_image);
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != "path,actual_mos,predicted_mos")
      throw Error(ErrorCode::BadHeader, "--per-image: expected header 'path,actual_mos,predicted_mos'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto line = lines[i];
      const auto c2 = line.rfind(',');
      const auto c1 = c2 == std::string_view::npos ? c2 : line.rfind(',', c2 - 1);
      if (c1 == std::string_view::npos || !parse_double(line.substr(c1 + 1, c2 - c1 - 1)) ||
          !parse_double(line.substr(c2 + 1)))
        throw Error(ErrorCode::MalformedRow, "--per-image: row " + std::to_string(i + 1));
      scatter += std::string(line) + "\n";
    }
  }
  const fs::path dir = o.out;
  write_file_text(dir / "curves.csv", curves);
  write_file_text(dir / "scatter.csv", scatter);
  out << "report: " << report.epochs.size() << " epochs -> " << (dir / "curves.csv").string()
      << ", " << (dir / "scatter.csv").string() << "\n";
  return kExitOk;
}

// ---- parity ------------------------------------------------------------------

struct ParityOpts {
  std::string input, reference, weights, backbone;
};

int cmd_parity(const ParityOpts& o, std::ostream& out) {
  require_file(o.input, "--input");
  require_file(o.reference, "--reference");
  require_file(o.weights, "--weights");
  const auto fixture = features::load_parity_fixture(o.input, o.reference);
  const std::string preset = o.backbone.empty() ? fixture.config : o.backbone;
  const auto cfg = for_flag("--config", [&] { return features::BackboneConfig::preset(preset); });
  const auto weights = load_weight_archive(o.weights);
  const auto r = features::check_parity(fixture, cfg, weights);
  out << "parity: max_abs_diff " << num(r.max_abs_diff) << " at feature " << r.worst_index
      << " (tolerance " << num(features::kParityTolerance) << ")\n";
  if (!r.passed)
    throw Error(ErrorCode::ShapeMismatch,
                "--weights: backbone output differs from the reference features");
  return kExitOk;
}

void add_extractor_flags(CLI::App* sub, ExtractorChoice& c, bool with_kind) {
  if (with_kind)
    sub->add_option("--extractor", c.kind, "handcrafted or cnn")
        ->check(CLI::IsMember({"handcrafted", "cnn"}));
  sub->add_option("--config", c.backbone, "backbone preset for the cnn extractor (nano or b0)")
      ->check(CLI::IsMember({"nano", "b0"}));
  sub->add_option("--weights", c.weights, "backbone weight archive");
  sub->add_option("--random-weights", c.random_weights, "seeded random backbone weights");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"contrastiq: no-reference contrast image quality assessment", "contrastiq"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* s = app.add_subcommand("synth", "generate a contrast-distorted dataset");
  s->add_option("--bases", synth.bases, "directory of base images");
  s->add_option("--procedural", synth.procedural, "number of procedural base images");
  s->add_option("--gammas", synth.gammas, "gamma levels, comma separated")->delimiter(',');
  s->add_option("--contrasts", synth.contrasts, "linear contrast scales, comma separated")
      ->delimiter(',');
  s->add_option("--seed", synth.seed, "seed for geometric variants");
  s->add_option("--variants", synth.variants, "geometric variants per base (1 = base only)");
  s->add_option("--max-rotation", synth.rotation, "variant rotation bound in degrees");
  s->add_option("--out", synth.out, "output directory")->required();

  ExtractOpts extract;
  auto* x = app.add_subcommand("extract", "extract a feature cache");
  x->add_option("--manifest", extract.manifest, "manifest CSV")->required();
  x->add_option("--out", extract.out, "output cache file")->required();
  x->add_option("--threads", extract.threads, "worker threads (0 = all cores)");
  add_extractor_flags(x, extract.extractor, true);

  TrainOpts train, pair;
  auto* t = app.add_subcommand("train", "train the regression head");
  auto* p = app.add_subcommand("pair-train", "train the siamese difference head");
  for (auto [sub, o] : {std::pair{t, &train}, std::pair{p, &pair}}) {
    sub->add_option("--config", o->config, "run configuration file");
    sub->add_option("--manifest", o->manifest, "manifest CSV (overrides config)");
    sub->add_option("--cache", o->cache, "feature cache (overrides config)");
    sub->add_option("--out", o->out, "output directory (overrides config)");
    sub->add_option("--epochs", o->epochs, "epochs (overrides config)");
    sub->add_option("--seed", o->seed, "seed (overrides config)");
    sub->add_option("--threads", o->threads, "worker threads (overrides config)");
  }
  t->add_flag("--augment", train.augment, "re-extract augmented train features every epoch");
  p->add_option("--pairs-per-image", pair.pairs_per_image, "partners drawn per image");

  EvalOpts eval;
  auto* e = app.add_subcommand("eval", "evaluate a head on a feature cache");
  e->add_option("--manifest", eval.manifest, "manifest CSV")->required();
  e->add_option("--cache", eval.cache, "feature cache")->required();
  e->add_option("--head", eval.head, "head archive")->required();
  e->add_option("--split", eval.split, "split manifest written by train");
  e->add_option("--subset", eval.subset, "rows to evaluate")
      ->check(CLI::IsMember({"auto", "val", "train", "all"}));
  e->add_option("--out", eval.out, "output directory")->required();

  ScoreOpts score;
  auto* sc = app.add_subcommand("score", "predict the MOS of one image");
  sc->add_option("--image", score.image, "image file")->required();
  sc->add_option("--head", score.head, "head archive")->required();
  add_extractor_flags(sc, score.extractor, false);

  ReportOpts report;
  auto* r = app.add_subcommand("report", "write plot-ready curve and scatter tables");
  r->add_option("--train-report", report.train_report, "train_report.csv")->required();
  r->add_option("--per-image", report.per_image, "per_image.csv from eval");
  r->add_option("--out", report.out, "output directory")->required();

  ParityOpts parity;
  auto* pa = app.add_subcommand("parity", "check backbone output against a reference fixture");
  pa->add_option("--input", parity.input, "fixture input tensor archive")->required();
  pa->add_option("--reference", parity.reference, "fixture reference feature archive")
      ->required();
  pa->add_option("--weights", parity.weights, "backbone weight archive")->required();
  pa->add_option("--config", parity.backbone, "backbone preset (default: fixture metadata)")
      ->check(CLI::IsMember({"nano", "b0"}));

  std::vector<const char*> argv{"contrastiq"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (x->parsed()) return cmd_extract(extract, out);
    if (t->parsed()) return cmd_train(train, out);
    if (p->parsed()) return cmd_pair_train(pair, out);
    if (e->parsed()) return cmd_eval(eval, out);
    if (sc->parsed()) return cmd_score(score, out);
    if (r->parsed()) return cmd_report(report, out);
    if (pa->parsed()) return cmd_parity(parity, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return is_environment_error(ex.code()) ? kExitEnvironment : kExitValidation;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitEnvironment;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitEnvironment;
  }
  return kExitValidation;
}

}  // namespace ciq::cli
