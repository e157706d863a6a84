// Copyright 2026 The siqa Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "siqa/common.hpp"
#include "siqa/dataset.hpp"
#include "siqa/eval.hpp"
#include "siqa/feature_io.hpp"
#include "siqa/fusion.hpp"
#include "siqa/image.hpp"
#include "siqa/model.hpp"
#include "siqa/nss.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  int jobs = 1;
};

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Canonical tag for the extraction configuration, stored in feature files
/// so stale rows are never silently reused.
std::string fusion_config_tag(const siqa::fusion::FusionParams& p) {
  std::ostringstream oss;
  oss << siqa::fmt_full(p.g) << '|' << siqa::fmt_full(p.f_s) << '|'
      << siqa::fmt_full(p.pixels_per_degree) << '|'
      << siqa::fmt_full(p.mu_sigma) << '|' << siqa::fmt_full(p.c1) << '|'
      << (p.disparity == siqa::fusion::DisparityMethod::kPhase ? "phase"
                                                               : "block");
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash_string(oss.str())));
  return buf;
}

void add_fusion_flags(CLI::App* cmd, siqa::fusion::FusionParams& p,
                      std::string& disparity_name) {
  cmd->add_option("--fusion-g", p.g, "Fusion threshold g");
  cmd->add_option("--fusion-fs", p.f_s, "Spatial frequency, cycles/degree");
  cmd->add_option("--fusion-ppd", p.pixels_per_degree, "Pixels per degree");
  cmd->add_option("--fusion-mu-sigma", p.mu_sigma,
                  "Local-mean Gaussian std, pixels");
  cmd->add_option("--fusion-c1", p.c1, "Contrast stabilizer");
  cmd->add_option("--disparity", disparity_name,
                  "Disparity method: phase or block")
      ->check(CLI::IsMember({"phase", "block"}));
}

siqa::fusion::FusionParams finish_fusion(siqa::fusion::FusionParams p,
                                         const std::string& disparity_name) {
  p.disparity = disparity_name == "block"
                    ? siqa::fusion::DisparityMethod::kBlockMatch
                    : siqa::fusion::DisparityMethod::kPhase;
  p.validate();
  return p;
}

/// Write via a temp file and rename so partially written outputs never
/// land under the final name.
template <typename Fn>
void atomic_write(const fs::path& path, Fn&& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  writer(tmp);
  fs::rename(tmp, path);
}

std::pair<std::vector<double>, std::vector<double>> extract_record(
    const siqa::dataset::StereoRecord& rec,
    const siqa::fusion::FusionParams& params) {
  siqa::GrayImage left = siqa::load_image(rec.left_path);
  siqa::GrayImage right = siqa::load_image(rec.right_path);
  siqa::FusedImages fused = siqa::fusion::synthesize_pair(left, right, params);
  return {siqa::nss::extract_phase_features(fused.phase).values,
          siqa::nss::extract_contrast_features(fused.contrast).values};
}

int cmd_corpus_gen(const GlobalOpts& g, int scenes, int width, int height,
                   const std::string& kinds_csv, int levels,
                   const std::string& eyes_csv, const fs::path& out_dir) {
  using siqa::dataset::Distortion;
  using siqa::dataset::Eye;

  std::vector<Distortion> kinds;
  {
    std::istringstream iss(kinds_csv);
    std::string tok;
    while (std::getline(iss, tok, ',')) {
      auto d = siqa::dataset::distortion_from_string(tok);
      if (!d || (*d != Distortion::kWhiteNoise && *d != Distortion::kBlur &&
                 *d != Distortion::kBlock)) {
        throw std::invalid_argument("corpus-gen: unsupported kind '" + tok +
                                    "' (want wn, blur, block)");
      }
      kinds.push_back(*d);
    }
  }
  std::vector<Eye> eyes;
  {
    std::istringstream iss(eyes_csv);
    std::string tok;
    while (std::getline(iss, tok, ',')) {
      if (tok == "both") {
        eyes.push_back(Eye::kBoth);
      } else if (tok == "left") {
        eyes.push_back(Eye::kLeft);
      } else if (tok == "right") {
        eyes.push_back(Eye::kRight);
      } else {
        throw std::invalid_argument("corpus-gen: unknown eye '" + tok + "'");
      }
    }
  }
  if (kinds.empty() || eyes.empty() || levels < 1 || scenes < 1) {
    throw std::invalid_argument("corpus-gen: empty distortion grid");
  }

  auto level_for = [](Distortion kind, int step, int total) {
    const double t = static_cast<double>(step + 1) / total;
    switch (kind) {
      case Distortion::kWhiteNoise: return 0.4 * t;
      case Distortion::kBlur: return 6.0 * t;
      case Distortion::kBlock: return 1.0 + 31.0 * t;
      default: return t;
    }
  };

  std::vector<siqa::dataset::DistortionSpec> specs;
  for (Distortion kind : kinds) {
    for (int s = 0; s < levels; ++s) {
      for (Eye eye : eyes) {
        specs.push_back({kind, level_for(kind, s, levels), eye});
      }
    }
  }

  std::vector<siqa::dataset::PristinePair> pairs;
  for (int i = 0; i < scenes; ++i) {
    std::string id = "scene" + std::to_string(i);
    pairs.push_back(siqa::dataset::render_demo_scene(
        id, width, height, siqa::mix_seed(g.seed, 1000 + i)));
  }
  fs::path manifest =
      siqa::dataset::make_synthetic_corpus(pairs, specs, out_dir, g.seed);
  std::cout << "wrote " << manifest.string() << " ("
            << scenes * (1 + specs.size()) << " records)\n";
  return 0;
}

int cmd_synthesize(const fs::path& left_path, const fs::path& right_path,
                   const fs::path& out_path, const std::string& preview,
                   const siqa::fusion::FusionParams& params) {
  siqa::GrayImage left = siqa::load_image(left_path);
  siqa::GrayImage right = siqa::load_image(right_path);
  const auto t0 = std::chrono::steady_clock::now();
  siqa::FusedImages fused = siqa::fusion::synthesize_pair(left, right, params);
  const auto t1 = std::chrono::steady_clock::now();
  atomic_write(out_path,
               [&](const fs::path& p) { siqa::save_fused(fused, p); });
  if (!preview.empty()) {
    siqa::save_preview(fused.contrast, preview + "_contrast.pgm");
    siqa::save_preview(fused.phase, preview + "_phase.pgm");
  }
  const double ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  std::cout << "synthesized " << left.width() << "x" << left.height()
            << " pair in " << ms << " ms -> " << out_path.string() << "\n";
  return 0;
}

int cmd_extract(const GlobalOpts& g, const fs::path& manifest_path,
                const fs::path& out_path,
                const siqa::fusion::FusionParams& params) {
  siqa::dataset::Corpus corpus = siqa::dataset::load_manifest(manifest_path);
  const std::string tag = fusion_config_tag(params);

  siqa::nss::FeatureTable table;
  table.config_tag = tag;
  if (fs::exists(out_path)) {
    siqa::nss::FeatureTable existing = siqa::nss::load_feature_table(out_path);
    if (existing.config_tag == tag) {
      table = std::move(existing);
    } else {
      std::cerr << "extract: existing feature file has different config; "
                   "recomputing all rows\n";
      table.config_tag = tag;
    }
  }

  std::vector<const siqa::dataset::StereoRecord*> todo;
  for (const auto& rec : corpus.records) {
    if (!table.has(rec.id)) todo.push_back(&rec);
  }

  std::mutex mu;
  std::vector<std::string> errors;
  siqa::parallel_for(todo.size(), g.jobs, [&](std::size_t i) {
    const siqa::dataset::StereoRecord& rec = *todo[i];
    try {
      auto [phase_fv, contrast_fv] = extract_record(rec, params);
      std::lock_guard<std::mutex> lock(mu);
      table.insert(rec.id, std::move(phase_fv), std::move(contrast_fv));
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(mu);
      errors.push_back(rec.id + ": " + e.what());
    }
  });

  // Deterministic row order regardless of worker scheduling.
  siqa::nss::FeatureTable ordered;
  ordered.config_tag = tag;
  for (const auto& rec : corpus.records) {
    if (table.has(rec.id)) {
      ordered.insert(rec.id, table.phase.at(rec.id), table.contrast.at(rec.id));
    }
  }
  atomic_write(out_path, [&](const fs::path& p) {
    siqa::nss::save_feature_table(ordered, p);
  });

  std::cout << "extracted " << todo.size() - errors.size() << " new records ("
            << ordered.ids.size() << " total) -> " << out_path.string()
            << "\n";
  for (const std::string& e : errors) std::cerr << "extract: " << e << "\n";
  return errors.empty() ? 0 : 1;
}

struct AlignedFeatures {
  Eigen::MatrixXd phase;
  Eigen::MatrixXd contrast;
  Eigen::VectorXd dmos;
};

AlignedFeatures align_features(const siqa::dataset::Corpus& corpus,
                               const siqa::nss::FeatureTable& table) {
  AlignedFeatures out;
  const std::size_t n = corpus.records.size();
  out.phase.resize(n, siqa::nss::kPhaseFeatureCount);
  out.contrast.resize(n, siqa::nss::kContrastFeatureCount);
  out.dmos.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = corpus.records[i];
    if (!table.has(rec.id)) {
      throw std::invalid_argument("no feature rows for record '" + rec.id +
                                  "'; run extract first");
    }
    const auto& pf = table.phase.at(rec.id);
    const auto& cf = table.contrast.at(rec.id);
    for (int c = 0; c < siqa::nss::kPhaseFeatureCount; ++c) {
      out.phase(i, c) = pf[c];
    }
    for (int c = 0; c < siqa::nss::kContrastFeatureCount; ++c) {
      out.contrast(i, c) = cf[c];
    }
    out.dmos[i] = rec.dmos;
  }
  return out;
}

int cmd_train(const GlobalOpts& g, const fs::path& manifest_path,
              const fs::path& features_path, const fs::path& out_path,
              int epochs, int patience) {
  siqa::dataset::Corpus corpus = siqa::dataset::load_manifest(manifest_path);
  siqa::nss::FeatureTable table = siqa::nss::load_feature_table(features_path);
  AlignedFeatures data = align_features(corpus, table);

  siqa::model::StackedConfig cfg;
  cfg.seed = g.seed;
  cfg.train.max_epochs = epochs;
  cfg.train.patience = patience;
  siqa::model::StackedModel m = siqa::model::train_stacked(
      data.phase, data.contrast, data.dmos, cfg);
  atomic_write(out_path,
               [&](const fs::path& p) { siqa::model::save_model(m, p); });
  std::cout << "trained stacked model on " << corpus.records.size()
            << " records -> " << out_path.string() << "\n";
  return 0;
}

int cmd_score(const fs::path& model_path, const fs::path& left,
              const fs::path& right, const fs::path& manifest_path,
              const fs::path& features_path,
              const siqa::fusion::FusionParams& params) {
  siqa::model::StackedModel m = siqa::model::load_model(model_path);
  if (!left.empty()) {
    siqa::dataset::StereoRecord rec;
    rec.id = "pair";
    rec.left_path = left;
    rec.right_path = right;
    auto [phase_fv, contrast_fv] = extract_record(rec, params);
    std::cout << siqa::fmt_sig9(siqa::model::predict(m, phase_fv, contrast_fv))
              << "\n";
    return 0;
  }
  siqa::dataset::Corpus corpus = siqa::dataset::load_manifest(manifest_path);
  siqa::nss::FeatureTable table;
  bool have_table = false;
  if (!features_path.empty()) {
    table = siqa::nss::load_feature_table(features_path);
    have_table = true;
  }
  for (const auto& rec : corpus.records) {
    std::vector<double> phase_fv, contrast_fv;
    if (have_table && table.has(rec.id)) {
      phase_fv = table.phase.at(rec.id);
      contrast_fv = table.contrast.at(rec.id);
    } else {
      std::tie(phase_fv, contrast_fv) = extract_record(rec, params);
    }
    std::cout << rec.id << '\t'
              << siqa::fmt_sig9(siqa::model::predict(m, phase_fv, contrast_fv))
              << "\n";
  }
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const fs::path& manifest_path,
                 const fs::path& features_path, const fs::path& out_path,
                 int repeats, const std::string& split_name, int epochs,
                 int patience, const fs::path& scatter_out,
                 const fs::path& bland_altman_out) {
  siqa::dataset::Corpus corpus = siqa::dataset::load_manifest(manifest_path);
  siqa::nss::FeatureTable table = siqa::nss::load_feature_table(features_path);

  siqa::eval::ExperimentConfig cfg;
  cfg.repeats = repeats;
  cfg.seed = g.seed;
  cfg.jobs = g.jobs;
  cfg.mode = split_name == "by_scene" ? siqa::eval::SplitMode::kByScene
                                      : siqa::eval::SplitMode::kByRecord;
  cfg.train.max_epochs = epochs;
  cfg.train.patience = patience;

  siqa::eval::ExperimentReport report =
      siqa::eval::run_experiment(corpus, table, cfg);
  atomic_write(out_path, [&](const fs::path& p) {
    siqa::eval::save_report(report, p);
  });

  std::cout << "median over " << repeats - report.failures
            << " successful repeats: plcc "
            << siqa::fmt_sig9(report.median_overall.plcc) << ", srocc "
            << siqa::fmt_sig9(report.median_overall.srocc) << ", rmse "
            << siqa::fmt_sig9(report.median_overall.rmse) << "\n";
  std::cout << "report -> " << out_path.string() << "\n";

  if (!scatter_out.empty()) {
    atomic_write(scatter_out, [&](const fs::path& p) {
      std::ofstream out(p, std::ios::binary);
      out << "subjective\tobjective\n";
      for (const auto& [subj, obj] : report.first_repeat_scores) {
        out << siqa::fmt_sig9(subj) << '\t' << siqa::fmt_sig9(obj) << '\n';
      }
      if (!out) throw std::runtime_error(p.string() + ": write failed");
    });
  }
  if (!bland_altman_out.empty()) {
    std::vector<double> subj, obj;
    for (const auto& [s, o] : report.first_repeat_scores) {
      subj.push_back(s);
      obj.push_back(o);
    }
    siqa::eval::BlandAltmanStats stats = siqa::eval::bland_altman(subj, obj);
    atomic_write(bland_altman_out, [&](const fs::path& p) {
      std::ofstream out(p, std::ios::binary);
      out << "# mean_diff " << siqa::fmt_sig9(stats.mean_diff) << " rpc "
          << siqa::fmt_sig9(stats.rpc) << '\n';
      out << "mean\tdiff\n";
      for (const auto& [mean, diff] : stats.points) {
        out << siqa::fmt_sig9(mean) << '\t' << siqa::fmt_sig9(diff) << '\n';
      }
      if (!out) throw std::runtime_error(p.string() + ": write failed");
    });
  }
  return 0;
}

int cmd_feature_corr(const fs::path& manifest_path,
                     const fs::path& features_path, const fs::path& out_path) {
  siqa::dataset::Corpus corpus = siqa::dataset::load_manifest(manifest_path);
  siqa::nss::FeatureTable table = siqa::nss::load_feature_table(features_path);
  siqa::eval::FeatureCorrelation corr =
      siqa::eval::feature_mos_correlation(corpus, table);
  atomic_write(out_path, [&](const fs::path& p) {
    siqa::eval::save_correlation(corr, p);
  });
  std::cout << "wrote " << corr.slots.size() << "x" << corr.groups.size()
            << " correlation table -> " << out_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"siqa: no-reference stereo image quality assessment toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI config file");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Global random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads for batch commands")
      ->capture_default_str();

  // corpus-gen
  auto* gen = app.add_subcommand(
      "corpus-gen", "Generate a synthetic distorted stereo corpus");
  int gen_scenes = 4, gen_width = 256, gen_height = 256, gen_levels = 4;
  std::string gen_kinds = "wn,blur,block", gen_eyes = "both,left,right";
  fs::path gen_out;
  gen->add_option("--scenes", gen_scenes, "Number of procedural scenes")
      ->capture_default_str();
  gen->add_option("--width", gen_width, "Scene width")->capture_default_str();
  gen->add_option("--height", gen_height, "Scene height")
      ->capture_default_str();
  gen->add_option("--kinds", gen_kinds, "Comma list of wn,blur,block")
      ->capture_default_str();
  gen->add_option("--levels", gen_levels, "Levels per kind")
      ->capture_default_str();
  gen->add_option("--eyes", gen_eyes, "Comma list of both,left,right")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // synthesize
  auto* syn = app.add_subcommand(
      "synthesize", "Fuse a stereo pair into contrast/phase images");
  fs::path syn_left, syn_right, syn_out;
  std::string syn_preview;
  siqa::fusion::FusionParams syn_params;
  std::string syn_disparity = "phase";
  syn->add_option("--left", syn_left, "Left image")->required();
  syn->add_option("--right", syn_right, "Right image")->required();
  syn->add_option("--out", syn_out, "Output .siqf container")->required();
  syn->add_option("--preview", syn_preview,
                  "Prefix for 8-bit preview images (optional)");
  add_fusion_flags(syn, syn_params, syn_disparity);

  // extract
  auto* ext = app.add_subcommand(
      "extract", "Extract feature vectors for every manifest record");
  fs::path ext_manifest, ext_out;
  siqa::fusion::FusionParams ext_params;
  std::string ext_disparity = "phase";
  ext->add_option("--manifest", ext_manifest, "Corpus manifest")->required();
  ext->add_option("--out", ext_out, "Feature file (resumable)")->required();
  add_fusion_flags(ext, ext_params, ext_disparity);

  // train
  auto* trn = app.add_subcommand("train", "Train the stacked model");
  fs::path trn_manifest, trn_features, trn_out;
  int trn_epochs = 500, trn_patience = 25;
  trn->add_option("--manifest", trn_manifest, "Corpus manifest")->required();
  trn->add_option("--features", trn_features, "Feature file")->required();
  trn->add_option("--out", trn_out, "Model output path")->required();
  trn->add_option("--epochs", trn_epochs, "Epoch cap")->capture_default_str();
  trn->add_option("--patience", trn_patience, "Early-stop patience")
      ->capture_default_str();

  // score
  auto* sco = app.add_subcommand(
      "score", "Predict quality scores with a trained model");
  fs::path sco_model, sco_left, sco_right, sco_manifest, sco_features;
  siqa::fusion::FusionParams sco_params;
  std::string sco_disparity = "phase";
  sco->add_option("--model", sco_model, "Trained model file")->required();
  sco->add_option("--left", sco_left, "Left image (single-pair mode)");
  sco->add_option("--right", sco_right, "Right image (single-pair mode)");
  sco->add_option("--manifest", sco_manifest, "Manifest (batch mode)");
  sco->add_option("--features", sco_features,
                  "Optional feature file for batch mode");
  add_fusion_flags(sco, sco_params, sco_disparity);

  // evaluate
  auto* evl = app.add_subcommand(
      "evaluate", "Run the repeated 80/20 train-test protocol");
  fs::path evl_manifest, evl_features, evl_out, evl_scatter, evl_ba;
  int evl_repeats = 1000, evl_epochs = 500, evl_patience = 25;
  std::string evl_split = "by_record";
  evl->add_option("--manifest", evl_manifest, "Corpus manifest")->required();
  evl->add_option("--features", evl_features, "Feature file")->required();
  evl->add_option("--out", evl_out, "Report output path")->required();
  evl->add_option("--repeats", evl_repeats, "Train-test repetitions")
      ->capture_default_str();
  evl->add_option("--split", evl_split, "by_record or by_scene")
      ->check(CLI::IsMember({"by_record", "by_scene"}))
      ->capture_default_str();
  evl->add_option("--epochs", evl_epochs, "Epoch cap")->capture_default_str();
  evl->add_option("--patience", evl_patience, "Early-stop patience")
      ->capture_default_str();
  evl->add_option("--scatter-out", evl_scatter,
                  "Write subjective/objective pairs of one repeat");
  evl->add_option("--bland-altman-out", evl_ba,
                  "Write Bland-Altman points of one repeat");

  // feature-corr
  auto* cor = app.add_subcommand(
      "feature-corr", "Per-feature, per-distortion PLCC against dmos");
  fs::path cor_manifest, cor_features, cor_out;
  cor->add_option("--manifest", cor_manifest, "Corpus manifest")->required();
  cor->add_option("--features", cor_features, "Feature file")->required();
  cor->add_option("--out", cor_out, "Table output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_corpus_gen(g, gen_scenes, gen_width, gen_height, gen_kinds,
                            gen_levels, gen_eyes, gen_out);
    }
    if (syn->parsed()) {
      return cmd_synthesize(syn_left, syn_right, syn_out, syn_preview,
                            finish_fusion(syn_params, syn_disparity));
    }
    if (ext->parsed()) {
      return cmd_extract(g, ext_manifest, ext_out,
                         finish_fusion(ext_params, ext_disparity));
    }
    if (trn->parsed()) {
      return cmd_train(g, trn_manifest, trn_features, trn_out, trn_epochs,
                       trn_patience);
    }
    if (sco->parsed()) {
      if (sco_left.empty() != sco_right.empty()) {
        throw std::invalid_argument("score: --left and --right go together");
      }
      if (sco_left.empty() && sco_manifest.empty()) {
        throw std::invalid_argument(
            "score: need --left/--right or --manifest");
      }
      return cmd_score(sco_model, sco_left, sco_right, sco_manifest,
                       sco_features, finish_fusion(sco_params, sco_disparity));
    }
    if (evl->parsed()) {
      return cmd_evaluate(g, evl_manifest, evl_features, evl_out, evl_repeats,
                          evl_split, evl_epochs, evl_patience, evl_scatter,
                          evl_ba);
    }
    if (cor->parsed()) {
      return cmd_feature_corr(cor_manifest, cor_features, cor_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "siqa: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
