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

#include "siqa/feature_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "siqa/common.hpp"
#include "siqa/nss.hpp"

namespace siqa::nss {

void FeatureTable::insert(const std::string& id,
                          std::vector<double> phase_fv,
                          std::vector<double> contrast_fv) {
  if (static_cast<int>(phase_fv.size()) != kPhaseFeatureCount ||
      static_cast<int>(contrast_fv.size()) != kContrastFeatureCount) {
    throw std::invalid_argument("FeatureTable: bad feature vector length");
  }
  if (!phase.count(id)) ids.push_back(id);
  phase[id] = std::move(phase_fv);
  contrast[id] = std::move(contrast_fv);
}

void save_feature_table(const FeatureTable& table,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error(path.string() + ": cannot write feature file");
  }
  out << "# siqa-features v1\n";
  out << "# config " << table.config_tag << '\n';
  out << "# phase_slots";
  for (const std::string& n : phase_slot_names()) out << ' ' << n;
  out << '\n';
  out << "# contrast_slots";
  for (const std::string& n : contrast_slot_names()) out << ' ' << n;
  out << '\n';
  out << "image_id\tkind\tvalues\n";
  for (const std::string& id : table.ids) {
    out << id << "\tphase";
    for (double v : table.phase.at(id)) out << '\t' << fmt_sig9(v);
    out << '\n';
    out << id << "\tcontrast";
    for (double v : table.contrast.at(id)) out << '\t' << fmt_sig9(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open feature file");
  FeatureTable table;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::map<std::string, std::vector<double>> pending_phase;

  auto fail = [&](const std::string& msg) -> void {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " +
                     msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key;
      meta >> key;
      if (key == "config") meta >> table.config_tag;
      continue;
    }
    if (!have_header) {
      if (line.rfind("image_id\tkind", 0) != 0) {
        fail("unexpected feature header row");
      }
      have_header = true;
      continue;
    }
    std::istringstream row(line);
    std::string id, kind;
    if (!std::getline(row, id, '\t') || !std::getline(row, kind, '\t')) {
      fail("malformed feature row");
    }
    std::vector<double> values;
    std::string tok;
    while (std::getline(row, tok, '\t')) {
      try {
        std::size_t pos = 0;
        values.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail("malformed value '" + tok + "' for id '" + id + "'");
      }
    }
    const int expected = kind == "phase" ? kPhaseFeatureCount
                          : kind == "contrast" ? kContrastFeatureCount
                                               : -1;
    if (expected < 0) fail("unknown feature kind '" + kind + "'");
    if (static_cast<int>(values.size()) != expected) {
      fail("id '" + id + "' " + kind + " row has " +
           std::to_string(values.size()) + " values, expected " +
           std::to_string(expected));
    }
    if (kind == "phase") {
      if (pending_phase.count(id) || table.phase.count(id)) {
        fail("duplicate phase row for id '" + id + "'");
      }
      pending_phase[id] = std::move(values);
    } else {
      auto it = pending_phase.find(id);
      if (it == pending_phase.end()) {
        fail("contrast row for id '" + id + "' has no preceding phase row");
      }
      if (table.contrast.count(id)) {
        fail("duplicate contrast row for id '" + id + "'");
      }
      table.insert(id, std::move(it->second), std::move(values));
      pending_phase.erase(it);
    }
  }
  if (!have_header) {
    line_no = 0;
    fail("feature file has no header row");
  }
  if (!pending_phase.empty()) {
    line_no = 0;
    fail("id '" + pending_phase.begin()->first + "' has no contrast row");
  }
  return table;
}

}  // namespace siqa::nss
