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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "siqa/dataset.hpp"
#include "siqa/feature_io.hpp"
#include "siqa/model.hpp"

namespace siqa::eval {

/// Sample Pearson linear correlation. Requires equal lengths >= 3 and
/// nonconstant inputs.
double plcc(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with average ranks for ties.
double srocc(std::span<const double> x, std::span<const double> y);

/// Root mean squared error. Requires equal nonzero lengths.
double rmse(std::span<const double> pred, std::span<const double> truth);

/// Fractional (average-tie) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> x);

struct MetricTriple {
  double plcc = 0.0;
  double srocc = 0.0;
  double rmse = 0.0;
};

struct BlandAltmanStats {
  double mean_diff = 0.0;
  double rpc = 0.0;  // 1.96 x sample std (n-1) of the differences
  std::vector<std::pair<double, double>> points;  // (mean, diff) per sample
};

BlandAltmanStats bland_altman(std::span<const double> subjective,
                              std::span<const double> objective);

enum class SplitMode { kByRecord, kByScene };

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Disjoint, exhaustive train/test split of corpus record indices.
/// kByScene keeps all records of a reference scene on one side.
Split split_80_20(const dataset::Corpus& corpus, std::uint64_t seed,
                  SplitMode mode, double train_ratio = 0.8);

struct ExperimentConfig {
  int repeats = 1000;
  std::uint64_t seed = 1;
  SplitMode mode = SplitMode::kByRecord;
  double train_ratio = 0.8;
  model::TrainConfig train;
  int jobs = 1;
};

struct RepeatOutcome {
  int repeat = 0;
  bool ok = false;
  std::string error;
  MetricTriple overall;
  std::map<std::string, MetricTriple> per_kind;
};

struct ExperimentReport {
  std::string corpus_name;
  std::size_t record_count = 0;
  ExperimentConfig config;
  std::vector<RepeatOutcome> repeats;
  MetricTriple median_overall;
  std::map<std::string, MetricTriple> median_per_kind;
  int failures = 0;
  // (subjective, objective) pairs of the first successful repeat's test
  // set, for scatter / Bland-Altman export.
  std::vector<std::pair<double, double>> first_repeat_scores;
};

/// The 80/20 x N-repeats protocol: split, train the stacked model on the
/// training side, score the held-out records, report metric medians
/// overall and per distortion kind. Individual repeat failures are
/// recorded without aborting the batch.
ExperimentReport run_experiment(const dataset::Corpus& corpus,
                                const nss::FeatureTable& features,
                                const ExperimentConfig& cfg);

void save_report(const ExperimentReport& report,
                 const std::filesystem::path& path);

/// Median with the even-length convention: mean of the two central values.
double median(std::vector<double> values);

struct FeatureCorrelation {
  std::vector<std::string> slots;   // 40 phase then 36 contrast slot names
  std::vector<std::string> groups;  // distortion kinds plus "all"
  // table[slot][group]; empty optional = skipped (degenerate)
  std::vector<std::vector<std::optional<double>>> table;
  std::vector<std::string> notices;
};

/// PLCC between every feature slot and dmos, per distortion group.
FeatureCorrelation feature_mos_correlation(const dataset::Corpus& corpus,
                                           const nss::FeatureTable& features);

void save_correlation(const FeatureCorrelation& corr,
                      const std::filesystem::path& path);

}  // namespace siqa::eval
