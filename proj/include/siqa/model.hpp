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

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace siqa::model {

/// One-hidden-layer perceptron: logistic sigmoid hidden units, linear
/// scalar output.
struct Mlp {
  Eigen::MatrixXd w1;     // hidden x in
  Eigen::VectorXd b1;     // hidden
  Eigen::RowVectorXd w2;  // 1 x hidden
  double b2 = 0.0;

  int in_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }

  /// Weights drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Mlp init(int in, int hidden, std::uint64_t seed);
};

struct MlpGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::RowVectorXd w2;
  double b2 = 0.0;
};

/// Rows of x are samples; t holds their targets.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd t;

  Eigen::Index size() const { return x.rows(); }
};

double mlp_forward(const Mlp& net, std::span<const double> x);
Eigen::VectorXd mlp_forward_batch(const Mlp& net, const Eigen::MatrixXd& x);

/// Exact gradient of mean squared error over the batch.
MlpGradient mlp_gradient(const Mlp& net, const Dataset& batch);

double mse(const Mlp& net, const Dataset& data);

/// iRPROP- per-weight adaptive steps.
struct RpropParams {
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  double delta0 = 0.07;
  double delta_min = 1e-6;
  double delta_max = 50.0;
};

struct RpropState {
  Eigen::MatrixXd step_w1, sign_w1;
  Eigen::VectorXd step_b1, sign_b1;
  Eigen::RowVectorXd step_w2, sign_w2;
  double step_b2 = 0.0, sign_b2 = 0.0;
  RpropParams params;

  static RpropState init(const Mlp& net, const RpropParams& p = {});
};

/// One iRPROP- update. Same gradient sign grows the step (capped), a sign
/// flip shrinks it and skips the move for that weight, a zero previous
/// sign applies a plain step.
void rprop_step(Mlp& net, const MlpGradient& grad, RpropState& state);

struct TrainConfig {
  int max_epochs = 500;
  int patience = 25;
  RpropParams rprop;
};

struct TrainResult {
  std::vector<double> train_mse;  // per epoch, before that epoch's update
  int best_epoch = -1;            // -1 when no validation set was given
};

/// Full-batch RPROP training. With a nonempty validation set, stops after
/// `patience` epochs without improvement and restores the best-validation
/// weights; otherwise runs to the epoch cap.
TrainResult train_mlp(Mlp& net, const Dataset& train, const Dataset& valid,
                      const TrainConfig& cfg);

/// Per-feature affine normalization. Zero-variance features keep std 0 in
/// storage (flagged) and standardize with divisor 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_raw;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd apply_vec(const Eigen::VectorXd& x) const;
  bool constant_feature(int i) const { return std_raw[i] == 0.0; }
  double divisor(int i) const { return std_raw[i] > 0.0 ? std_raw[i] : 1.0; }
};

/// The two level-0 networks, the level-1 refiner, and the normalization
/// statistics they were trained with.
struct StackedModel {
  Mlp net_phase;     // 40-25-1
  Mlp net_contrast;  // 36-25-1
  Mlp refiner;       // 2-3-1
  Standardizer phase_in;
  Standardizer contrast_in;
  Standardizer refiner_in;
  double target_mean = 0.0;
  double target_std = 1.0;
  std::uint64_t seed = 0;
  TrainConfig config;
};

struct StackedConfig {
  std::uint64_t seed = 1;
  TrainConfig train;
  int level0_hidden = 25;
  int refiner_hidden = 3;
};

/// Stacked training: 75% of the samples (part A) train the two level-0
/// networks; the refiner is trained on their outputs over the held-back
/// 25% (part B) so it never sees level-0 training residuals.
StackedModel train_stacked(const Eigen::MatrixXd& phase_features,
                           const Eigen::MatrixXd& contrast_features,
                           const Eigen::VectorXd& targets,
                           const StackedConfig& cfg);

/// Quality score in target units for one stereo pair's feature vectors.
double predict(const StackedModel& model, std::span<const double> phase_fv,
               std::span<const double> contrast_fv);

void save_model(const StackedModel& model, const std::filesystem::path& path);
StackedModel load_model(const std::filesystem::path& path);

}  // namespace siqa::model
