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

#include "siqa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "siqa/common.hpp"
#include "siqa/nss.hpp"

namespace siqa::eval {

namespace {

void require_pair(std::span<const double> x, std::span<const double> y,
                  std::size_t min_len, const char* who) {
  if (x.size() != y.size()) {
    throw std::invalid_argument(std::string(who) + ": length mismatch");
  }
  if (x.size() < min_len) {
    throw std::invalid_argument(std::string(who) + ": need at least " +
                                std::to_string(min_len) + " samples");
  }
}

}  // namespace

double plcc(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, 3, "plcc");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateInputError("plcc: constant input sequence");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order = iota_indices(n);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double srocc(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y, 3, "srocc");
  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  return plcc(rx, ry);
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  require_pair(pred, truth, 1, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

BlandAltmanStats bland_altman(std::span<const double> subjective,
                              std::span<const double> objective) {
  require_pair(subjective, objective, 3, "bland_altman");
  BlandAltmanStats stats;
  const double n = static_cast<double>(subjective.size());
  for (std::size_t i = 0; i < subjective.size(); ++i) {
    const double diff = subjective[i] - objective[i];
    const double mean = 0.5 * (subjective[i] + objective[i]);
    stats.points.emplace_back(mean, diff);
    stats.mean_diff += diff;
  }
  stats.mean_diff /= n;
  double ss = 0.0;
  for (const auto& [mean, diff] : stats.points) {
    ss += (diff - stats.mean_diff) * (diff - stats.mean_diff);
  }
  const double sd = subjective.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  stats.rpc = 1.96 * sd;
  return stats;
}

Split split_80_20(const dataset::Corpus& corpus, std::uint64_t seed,
                  SplitMode mode, double train_ratio) {
  if (train_ratio <= 0.0 || train_ratio >= 1.0) {
    throw std::invalid_argument("split_80_20: ratio must be in (0, 1)");
  }
  const std::size_t n = corpus.records.size();
  std::mt19937_64 rng(seed);
  Split split;

  if (mode == SplitMode::kByRecord) {
    if (n < 5) {
      throw std::invalid_argument("split_80_20: need at least 5 records");
    }
    std::vector<std::size_t> idx = iota_indices(n);
    fisher_yates(idx, rng);
    std::size_t train_n = static_cast<std::size_t>(
        std::llround(train_ratio * static_cast<double>(n)));
    train_n = std::clamp<std::size_t>(train_n, 1, n - 1);
    split.train.assign(idx.begin(), idx.begin() + train_n);
    split.test.assign(idx.begin() + train_n, idx.end());
  } else {
    // Unique scenes in first-appearance order.
    std::vector<std::string> scenes;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& ref = corpus.records[i].reference_id;
      auto [it, inserted] = members.try_emplace(ref);
      if (inserted) scenes.push_back(ref);
      it->second.push_back(i);
    }
    if (scenes.size() < 5) {
      throw std::invalid_argument("split_80_20: need at least 5 scenes");
    }
    std::vector<std::size_t> order = iota_indices(scenes.size());
    fisher_yates(order, rng);
    std::size_t train_s = static_cast<std::size_t>(
        std::llround(train_ratio * static_cast<double>(scenes.size())));
    train_s = std::clamp<std::size_t>(train_s, 1, scenes.size() - 1);
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& side = k < train_s ? split.train : split.test;
      for (std::size_t i : members[scenes[order[k]]]) side.push_back(i);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
  }
  return split;
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("median: empty value list");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

MetricTriple median_triple(const std::vector<MetricTriple>& triples) {
  std::vector<double> p, s, r;
  for (const MetricTriple& t : triples) {
    p.push_back(t.plcc);
    s.push_back(t.srocc);
    r.push_back(t.rmse);
  }
  return {median(std::move(p)), median(std::move(s)), median(std::move(r))};
}

}  // namespace

ExperimentReport run_experiment(const dataset::Corpus& corpus,
                                const nss::FeatureTable& features,
                                const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) {
    throw std::invalid_argument("run_experiment: repeats must be >= 1");
  }
  for (const dataset::StereoRecord& rec : corpus.records) {
    if (!features.has(rec.id)) {
      throw std::invalid_argument("run_experiment: no features for record '" +
                                  rec.id + "'");
    }
  }

  const std::size_t n = corpus.records.size();
  Eigen::MatrixXd phase(n, nss::kPhaseFeatureCount);
  Eigen::MatrixXd contrast(n, nss::kContrastFeatureCount);
  Eigen::VectorXd dmos(n);
  for (std::size_t i = 0; i < n; ++i) {
    const dataset::StereoRecord& rec = corpus.records[i];
    const std::vector<double>& pf = features.phase.at(rec.id);
    const std::vector<double>& cf = features.contrast.at(rec.id);
    for (int c = 0; c < nss::kPhaseFeatureCount; ++c) phase(i, c) = pf[c];
    for (int c = 0; c < nss::kContrastFeatureCount; ++c) contrast(i, c) = cf[c];
    dmos[i] = rec.dmos;
  }

  ExperimentReport report;
  report.corpus_name = corpus.name;
  report.record_count = n;
  report.config = cfg;
  report.repeats.resize(cfg.repeats);

  parallel_for(static_cast<std::size_t>(cfg.repeats), cfg.jobs,
               [&](std::size_t r) {
    RepeatOutcome& outcome = report.repeats[r];
    outcome.repeat = static_cast<int>(r);
    try {
      const std::uint64_t sub_seed = mix_seed(cfg.seed, r);
      Split split = split_80_20(corpus, sub_seed, cfg.mode, cfg.train_ratio);

      auto gather = [&](const std::vector<std::size_t>& rows,
                        const Eigen::MatrixXd& src) {
        Eigen::MatrixXd out(rows.size(), src.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
          out.row(static_cast<Eigen::Index>(i)) =
              src.row(static_cast<Eigen::Index>(rows[i]));
        }
        return out;
      };
      Eigen::VectorXd train_t(split.train.size());
      for (std::size_t i = 0; i < split.train.size(); ++i) {
        train_t[static_cast<Eigen::Index>(i)] = dmos[split.train[i]];
      }

      model::StackedConfig scfg;
      scfg.seed = sub_seed;
      scfg.train = cfg.train;
      model::StackedModel m =
          model::train_stacked(gather(split.train, phase),
                               gather(split.train, contrast), train_t, scfg);

      std::vector<double> pred(split.test.size()), truth(split.test.size());
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        const std::size_t row = split.test[i];
        const dataset::StereoRecord& rec = corpus.records[row];
        pred[i] = model::predict(m, features.phase.at(rec.id),
                                 features.contrast.at(rec.id));
        truth[i] = dmos[row];
      }
      outcome.overall = {plcc(pred, truth), srocc(pred, truth),
                         rmse(pred, truth)};

      std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
          groups;
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        const dataset::StereoRecord& rec = corpus.records[split.test[i]];
        auto& g = groups[dataset::to_string(rec.distortion)];
        g.first.push_back(pred[i]);
        g.second.push_back(truth[i]);
      }
      for (const auto& [kind, g] : groups) {
        if (g.first.size() < 3) continue;
        try {
          outcome.per_kind[kind] = {plcc(g.first, g.second),
                                    srocc(g.first, g.second),
                                    rmse(g.first, g.second)};
        } catch (const DegenerateInputError&) {
          // constant subgroup; skip the triple for this repeat
        }
      }
      outcome.ok = true;
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
  });

  std::vector<MetricTriple> overall;
  std::map<std::string, std::vector<MetricTriple>> per_kind;
  for (const RepeatOutcome& outcome : report.repeats) {
    if (!outcome.ok) {
      ++report.failures;
      continue;
    }
    overall.push_back(outcome.overall);
    for (const auto& [kind, triple] : outcome.per_kind) {
      per_kind[kind].push_back(triple);
    }
  }
  if (overall.empty()) {
    throw std::runtime_error("run_experiment: every repeat failed; first error: " +
                             (report.repeats.empty()
                                  ? std::string("none")
                                  : report.repeats.front().error));
  }
  report.median_overall = median_triple(overall);
  for (const auto& [kind, triples] : per_kind) {
    report.median_per_kind[kind] = median_triple(triples);
  }

  for (const RepeatOutcome& outcome : report.repeats) {
    if (!outcome.ok) continue;
    const std::uint64_t sub_seed = mix_seed(cfg.seed, outcome.repeat);
    Split split = split_80_20(corpus, sub_seed, cfg.mode, cfg.train_ratio);
    // Re-score the first successful repeat for plot exports.
    Eigen::MatrixXd ph(split.train.size(), phase.cols());
    Eigen::MatrixXd co(split.train.size(), contrast.cols());
    Eigen::VectorXd t(split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      ph.row(i) = phase.row(static_cast<Eigen::Index>(split.train[i]));
      co.row(i) = contrast.row(static_cast<Eigen::Index>(split.train[i]));
      t[static_cast<Eigen::Index>(i)] = dmos[split.train[i]];
    }
    model::StackedConfig scfg;
    scfg.seed = sub_seed;
    scfg.train = cfg.train;
    model::StackedModel m = model::train_stacked(ph, co, t, scfg);
    for (std::size_t row : split.test) {
      const dataset::StereoRecord& rec = corpus.records[row];
      double obj = model::predict(m, features.phase.at(rec.id),
                                  features.contrast.at(rec.id));
      report.first_repeat_scores.emplace_back(dmos[row], obj);
    }
    break;
  }
  return report;
}

void save_report(const ExperimentReport& report,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write report");
  out << "# siqa-report v1\n";
  out << "# corpus " << report.corpus_name << " records "
      << report.record_count << '\n';
  out << "# repeats " << report.config.repeats << " seed "
      << report.config.seed << " split "
      << (report.config.mode == SplitMode::kByRecord ? "by_record"
                                                     : "by_scene")
      << " ratio " << fmt_sig9(report.config.train_ratio) << '\n';
  out << "# failures " << report.failures << '\n';
  out << "row\trepeat\tgroup\tplcc\tsrocc\trmse\n";
  auto emit = [&](const std::string& row, const std::string& repeat,
                  const std::string& group, const MetricTriple& t) {
    out << row << '\t' << repeat << '\t' << group << '\t' << fmt_sig9(t.plcc)
        << '\t' << fmt_sig9(t.srocc) << '\t' << fmt_sig9(t.rmse) << '\n';
  };
  emit("median", "-", "all", report.median_overall);
  for (const auto& [kind, triple] : report.median_per_kind) {
    emit("median", "-", kind, triple);
  }
  for (const RepeatOutcome& outcome : report.repeats) {
    const std::string idx = std::to_string(outcome.repeat);
    if (!outcome.ok) {
      out << "error\t" << idx << "\t-\t" << outcome.error << "\t-\t-\n";
      continue;
    }
    emit("repeat", idx, "all", outcome.overall);
    for (const auto& [kind, triple] : outcome.per_kind) {
      emit("repeat", idx, kind, triple);
    }
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

FeatureCorrelation feature_mos_correlation(const dataset::Corpus& corpus,
                                           const nss::FeatureTable& features) {
  for (const dataset::StereoRecord& rec : corpus.records) {
    if (!features.has(rec.id)) {
      throw std::invalid_argument(
          "feature_mos_correlation: no features for record '" + rec.id + "'");
    }
  }

  FeatureCorrelation corr;
  for (const std::string& name : nss::phase_slot_names()) {
    corr.slots.push_back("phase_" + name);
  }
  for (const std::string& name : nss::contrast_slot_names()) {
    corr.slots.push_back("contrast_" + name);
  }

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    groups[dataset::to_string(corpus.records[i].distortion)].push_back(i);
  }
  std::vector<std::size_t> all = iota_indices(corpus.records.size());
  groups["all"] = all;

  for (const auto& [name, rows] : groups) corr.groups.push_back(name);
  corr.table.assign(corr.slots.size(),
                    std::vector<std::optional<double>>(corr.groups.size()));

  auto slot_value = [&](const dataset::StereoRecord& rec, std::size_t slot) {
    if (slot < static_cast<std::size_t>(nss::kPhaseFeatureCount)) {
      return features.phase.at(rec.id)[slot];
    }
    return features.contrast.at(rec.id)[slot - nss::kPhaseFeatureCount];
  };

  for (std::size_t g = 0; g < corr.groups.size(); ++g) {
    const std::vector<std::size_t>& rows = groups[corr.groups[g]];
    if (rows.size() < 3) {
      corr.notices.push_back("group '" + corr.groups[g] +
                             "' skipped: fewer than 3 records");
      continue;
    }
    std::vector<double> mos(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      mos[i] = corpus.records[rows[i]].dmos;
    }
    for (std::size_t slot = 0; slot < corr.slots.size(); ++slot) {
      std::vector<double> values(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        values[i] = slot_value(corpus.records[rows[i]], slot);
      }
      try {
        corr.table[slot][g] = plcc(values, mos);
      } catch (const DegenerateInputError&) {
        corr.notices.push_back("slot '" + corr.slots[slot] + "' in group '" +
                               corr.groups[g] + "' skipped: degenerate");
      }
    }
  }
  return corr;
}

void save_correlation(const FeatureCorrelation& corr,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write table");
  out << "# siqa-feature-correlation v1\n";
  for (const std::string& notice : corr.notices) {
    out << "# notice " << notice << '\n';
  }
  out << "slot";
  for (const std::string& g : corr.groups) out << '\t' << g;
  out << '\n';
  for (std::size_t s = 0; s < corr.slots.size(); ++s) {
    out << corr.slots[s];
    for (std::size_t g = 0; g < corr.groups.size(); ++g) {
      out << '\t';
      if (corr.table[s][g]) {
        out << fmt_sig9(*corr.table[s][g]);
      } else {
        out << "-";
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace siqa::eval
