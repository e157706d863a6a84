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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace siqa::nss {

/// Extracted feature rows for a corpus, keyed by record id.
struct FeatureTable {
  std::string config_tag;  // hash of the extraction parameters
  std::vector<std::string> ids;  // insertion order
  std::map<std::string, std::vector<double>> phase;     // 40 values each
  std::map<std::string, std::vector<double>> contrast;  // 36 values each

  bool has(const std::string& id) const {
    return phase.count(id) != 0 && contrast.count(id) != 0;
  }
  void insert(const std::string& id, std::vector<double> phase_fv,
              std::vector<double> contrast_fv);
};

/// Tab-separated feature file: comment header carrying the config tag and
/// the slot names, then one phase row and one contrast row per record,
/// values with 9 significant digits.
void save_feature_table(const FeatureTable& table,
                        const std::filesystem::path& path);
FeatureTable load_feature_table(const std::filesystem::path& path);

}  // namespace siqa::nss
