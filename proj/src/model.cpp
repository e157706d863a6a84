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

#include "siqa/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "siqa/common.hpp"

namespace siqa::model {

namespace {

double uniform_pm(std::mt19937_64& rng, double limit) {
  // 53-bit mantissa draw in [0, 1); identical across standard libraries.
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * limit;
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return 1.0 / (1.0 + (-z.array()).exp());
}

double forward_one(const Mlp& net, const Eigen::VectorXd& x) {
  Eigen::VectorXd h =
      (1.0 / (1.0 + (-(net.w1 * x + net.b1).array()).exp())).matrix();
  return net.w2.dot(h) + net.b2;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void rprop_update_one(double& w, double g, double& step, double& prev_sign,
                      const RpropParams& p) {
  const double s = sign_of(g);
  if (s * prev_sign > 0.0) {
    step = std::min(step * p.eta_plus, p.delta_max);
    w -= s * step;
    prev_sign = s;
  } else if (s * prev_sign < 0.0) {
    step = std::max(step * p.eta_minus, p.delta_min);
    prev_sign = 0.0;  // iRPROP-: skip the move after a sign flip
  } else {
    w -= s * step;
    prev_sign = s;
  }
}

void check_dims(const Mlp& net, const Dataset& data, const char* who) {
  if (data.x.rows() != data.t.rows()) {
    throw std::invalid_argument(std::string(who) +
                                ": feature/target row mismatch");
  }
  if (data.x.rows() > 0 && data.x.cols() != net.in_dim()) {
    throw std::invalid_argument(std::string(who) + ": feature width " +
                                std::to_string(data.x.cols()) +
                                " does not match network input " +
                                std::to_string(net.in_dim()));
  }
}

double population_std(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / v.size());
}

}  // namespace

Mlp Mlp::init(int in, int hidden, std::uint64_t seed) {
  if (in < 1 || hidden < 1) {
    throw std::invalid_argument("Mlp::init: dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  Mlp net;
  net.w1.resize(hidden, in);
  net.b1.resize(hidden);
  net.w2.resize(hidden);
  const double lim1 = 1.0 / std::sqrt(static_cast<double>(in));
  for (int r = 0; r < hidden; ++r) {
    for (int c = 0; c < in; ++c) net.w1(r, c) = uniform_pm(rng, lim1);
  }
  for (int r = 0; r < hidden; ++r) net.b1[r] = uniform_pm(rng, lim1);
  const double lim2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int c = 0; c < hidden; ++c) net.w2[c] = uniform_pm(rng, lim2);
  net.b2 = uniform_pm(rng, lim2);
  return net;
}

double mlp_forward(const Mlp& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.in_dim()) {
    throw std::invalid_argument("mlp_forward: input length " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(net.in_dim()));
  }
  Eigen::Map<const Eigen::VectorXd> v(x.data(), x.size());
  return forward_one(net, v);
}

Eigen::VectorXd mlp_forward_batch(const Mlp& net, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h =
      sigmoid((x * net.w1.transpose()).rowwise() + net.b1.transpose());
  return (h * net.w2.transpose()).array() + net.b2;
}

MlpGradient mlp_gradient(const Mlp& net, const Dataset& batch) {
  if (batch.size() == 0) {
    throw std::invalid_argument("mlp_gradient: empty batch");
  }
  check_dims(net, batch, "mlp_gradient");

  const double n = static_cast<double>(batch.size());
  Eigen::MatrixXd h =
      sigmoid((batch.x * net.w1.transpose()).rowwise() + net.b1.transpose());
  Eigen::VectorXd y = (h * net.w2.transpose()).array() + net.b2;
  Eigen::VectorXd dy = 2.0 * (y - batch.t) / n;

  MlpGradient g;
  g.w2 = dy.transpose() * h;
  g.b2 = dy.sum();
  Eigen::MatrixXd dh = dy * net.w2;                       // n x hidden
  Eigen::MatrixXd dpre =
      dh.array() * h.array() * (1.0 - h.array());         // sigmoid'
  g.w1 = dpre.transpose() * batch.x;
  g.b1 = dpre.colwise().sum().transpose();
  return g;
}

double mse(const Mlp& net, const Dataset& data) {
  if (data.size() == 0) {
    throw std::invalid_argument("mse: empty dataset");
  }
  check_dims(net, data, "mse");
  Eigen::VectorXd y = mlp_forward_batch(net, data.x);
  return (y - data.t).squaredNorm() / static_cast<double>(data.size());
}

RpropState RpropState::init(const Mlp& net, const RpropParams& p) {
  RpropState s;
  s.params = p;
  s.step_w1 = Eigen::MatrixXd::Constant(net.w1.rows(), net.w1.cols(), p.delta0);
  s.sign_w1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
  s.step_b1 = Eigen::VectorXd::Constant(net.b1.size(), p.delta0);
  s.sign_b1 = Eigen::VectorXd::Zero(net.b1.size());
  s.step_w2 = Eigen::RowVectorXd::Constant(net.w2.size(), p.delta0);
  s.sign_w2 = Eigen::RowVectorXd::Zero(net.w2.size());
  s.step_b2 = p.delta0;
  s.sign_b2 = 0.0;
  return s;
}

void rprop_step(Mlp& net, const MlpGradient& grad, RpropState& state) {
  if (grad.w1.rows() != net.w1.rows() || grad.w1.cols() != net.w1.cols()) {
    throw std::invalid_argument("rprop_step: gradient/network shape mismatch");
  }
  const RpropParams& p = state.params;
  for (Eigen::Index r = 0; r < net.w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < net.w1.cols(); ++c) {
      rprop_update_one(net.w1(r, c), grad.w1(r, c), state.step_w1(r, c),
                       state.sign_w1(r, c), p);
    }
  }
  for (Eigen::Index i = 0; i < net.b1.size(); ++i) {
    rprop_update_one(net.b1[i], grad.b1[i], state.step_b1[i],
                     state.sign_b1[i], p);
  }
  for (Eigen::Index i = 0; i < net.w2.size(); ++i) {
    rprop_update_one(net.w2[i], grad.w2[i], state.step_w2[i],
                     state.sign_w2[i], p);
  }
  rprop_update_one(net.b2, grad.b2, state.step_b2, state.sign_b2, p);
}

TrainResult train_mlp(Mlp& net, const Dataset& train, const Dataset& valid,
                      const TrainConfig& cfg) {
  if (train.size() == 0) {
    throw std::invalid_argument("train_mlp: empty training set");
  }
  check_dims(net, train, "train_mlp");
  if (population_std(train.t) == 0.0) {
    throw DegenerateInputError("train_mlp: training targets are constant");
  }

  RpropState state = RpropState::init(net, cfg.rprop);
  TrainResult result;
  result.train_mse.reserve(cfg.max_epochs);

  Mlp best = net;
  double best_valid = std::numeric_limits<double>::infinity();
  int stale = 0;
  const bool has_valid = valid.size() > 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    MlpGradient g = mlp_gradient(net, train);
    result.train_mse.push_back(mse(net, train));
    rprop_step(net, g, state);
    if (has_valid) {
      double v = mse(net, valid);
      if (v < best_valid) {
        best_valid = v;
        best = net;
        result.best_epoch = epoch;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }
  }
  if (has_valid) net = best;
  return result;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) {
    throw std::invalid_argument("Standardizer::fit: no samples");
  }
  Standardizer s;
  s.mean = x.colwise().mean();
  s.std_raw.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    s.std_raw[c] = population_std(x.col(c));
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = (x.col(c).array() - mean[c]) / divisor(static_cast<int>(c));
  }
  return out;
}

Eigen::VectorXd Standardizer::apply_vec(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    out[c] = (x[c] - mean[c]) / divisor(static_cast<int>(c));
  }
  return out;
}

StackedModel train_stacked(const Eigen::MatrixXd& phase_features,
                           const Eigen::MatrixXd& contrast_features,
                           const Eigen::VectorXd& targets,
                           const StackedConfig& cfg) {
  const Eigen::Index n = targets.size();
  if (phase_features.rows() != n || contrast_features.rows() != n) {
    throw std::invalid_argument("train_stacked: feature/target row mismatch");
  }
  if (n < 20) {
    throw std::invalid_argument("train_stacked: need at least 20 samples");
  }
  if (population_std(targets) == 0.0) {
    throw DegenerateInputError("train_stacked: targets are constant");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> perm = iota_indices(static_cast<std::size_t>(n));
  fisher_yates(perm, rng);

  const Eigen::Index n_a = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(0.75 * static_cast<double>(n))),
      1, n - 1);
  const Eigen::Index n_b = n - n_a;

  auto take = [&](Eigen::Index begin, Eigen::Index count,
                  const Eigen::MatrixXd& src) {
    Eigen::MatrixXd out(count, src.cols());
    for (Eigen::Index i = 0; i < count; ++i) {
      out.row(i) = src.row(static_cast<Eigen::Index>(perm[begin + i]));
    }
    return out;
  };
  auto take_t = [&](Eigen::Index begin, Eigen::Index count) {
    Eigen::VectorXd out(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      out[i] = targets[static_cast<Eigen::Index>(perm[begin + i])];
    }
    return out;
  };

  Eigen::MatrixXd phase_a = take(0, n_a, phase_features);
  Eigen::MatrixXd contrast_a = take(0, n_a, contrast_features);
  Eigen::VectorXd t_a = take_t(0, n_a);
  Eigen::MatrixXd phase_b = take(n_a, n_b, phase_features);
  Eigen::MatrixXd contrast_b = take(n_a, n_b, contrast_features);
  Eigen::VectorXd t_b = take_t(n_a, n_b);

  StackedModel model;
  model.seed = cfg.seed;
  model.config = cfg.train;
  model.phase_in = Standardizer::fit(phase_a);
  model.contrast_in = Standardizer::fit(contrast_a);
  model.target_mean = t_a.mean();
  model.target_std = population_std(t_a);
  if (model.target_std == 0.0) {
    throw DegenerateInputError("train_stacked: part-A targets are constant");
  }

  auto std_targets = [&](const Eigen::VectorXd& t) {
    return ((t.array() - model.target_mean) / model.target_std).matrix().eval();
  };

  // Level-0 early stopping validates on the tail of A; B stays unseen.
  Eigen::Index n_val =
      n_a >= 5 ? std::max<Eigen::Index>(
                     1, static_cast<Eigen::Index>(std::llround(0.2 * n_a)))
               : 0;
  const Eigen::Index n_fit = n_a - n_val;

  auto level0 = [&](const Eigen::MatrixXd& feats_a, const Standardizer& std_in,
                    std::uint64_t salt) {
    Eigen::MatrixXd xs = std_in.apply(feats_a);
    Eigen::VectorXd ts = std_targets(t_a);
    Dataset fit{xs.topRows(n_fit), ts.head(n_fit)};
    Dataset val{xs.bottomRows(n_val), ts.tail(n_val)};
    Mlp net = Mlp::init(static_cast<int>(feats_a.cols()), cfg.level0_hidden,
                        mix_seed(cfg.seed, salt));
    train_mlp(net, fit, val, cfg.train);
    return net;
  };
  model.net_phase = level0(phase_a, model.phase_in, 11);
  model.net_contrast = level0(contrast_a, model.contrast_in, 12);

  // Refiner input: level-0 opinions over B.
  Eigen::MatrixXd level0_b(n_b, 2);
  level0_b.col(0) =
      mlp_forward_batch(model.net_phase, model.phase_in.apply(phase_b));
  level0_b.col(1) =
      mlp_forward_batch(model.net_contrast, model.contrast_in.apply(contrast_b));
  model.refiner_in = Standardizer::fit(level0_b);

  Dataset refine{model.refiner_in.apply(level0_b), std_targets(t_b)};
  model.refiner = Mlp::init(2, cfg.refiner_hidden, mix_seed(cfg.seed, 13));
  train_mlp(model.refiner, refine, Dataset{}, cfg.train);
  return model;
}

double predict(const StackedModel& model, std::span<const double> phase_fv,
               std::span<const double> contrast_fv) {
  if (static_cast<int>(phase_fv.size()) != model.net_phase.in_dim()) {
    throw std::invalid_argument("predict: phase feature length mismatch");
  }
  if (static_cast<int>(contrast_fv.size()) != model.net_contrast.in_dim()) {
    throw std::invalid_argument("predict: contrast feature length mismatch");
  }
  Eigen::Map<const Eigen::VectorXd> pv(phase_fv.data(), phase_fv.size());
  Eigen::Map<const Eigen::VectorXd> cv(contrast_fv.data(), contrast_fv.size());
  double o1 = forward_one(model.net_phase, model.phase_in.apply_vec(pv));
  double o2 = forward_one(model.net_contrast, model.contrast_in.apply_vec(cv));
  Eigen::VectorXd r(2);
  r << o1, o2;
  double y = forward_one(model.refiner, model.refiner_in.apply_vec(r));
  return y * model.target_std + model.target_mean;
}

namespace {

constexpr const char* kModelMagic = "siqa-model";
constexpr int kModelVersion = 1;

void write_vector(std::ostream& out, const char* tag,
                  const Eigen::VectorXd& v) {
  out << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt_full(v[i]);
  out << '\n';
}

void write_net(std::ostream& out, const char* name, const Mlp& net) {
  out << "net " << name << ' ' << net.in_dim() << ' ' << net.hidden_dim()
      << " 1\n";
  for (Eigen::Index r = 0; r < net.w1.rows(); ++r) {
    out << "w1";
    for (Eigen::Index c = 0; c < net.w1.cols(); ++c) {
      out << ' ' << fmt_full(net.w1(r, c));
    }
    out << '\n';
  }
  write_vector(out, "b1", net.b1);
  write_vector(out, "w2", net.w2.transpose());
  out << "b2 " << fmt_full(net.b2) << '\n';
}

void write_standardizer(std::ostream& out, const char* name,
                        const Standardizer& s) {
  out << "standardizer " << name << ' ' << s.mean.size() << '\n';
  write_vector(out, "mean", s.mean);
  write_vector(out, "std", s.std_raw);
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path)
      : path_(path.string()), in_(path) {
    if (!in_) throw ParseError(path_ + ": cannot open model file");
  }

  /// Next nonempty line split into tokens.
  std::vector<std::string> next(const char* expect_head) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty()) continue;
      std::istringstream iss(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (iss >> tok) tokens.push_back(tok);
      if (tokens.empty()) continue;
      if (expect_head && tokens[0] != expect_head) {
        fail("expected '" + std::string(expect_head) + "', found '" +
             tokens[0] + "'");
      }
      return tokens;
    }
    fail(expect_head ? "unexpected end of file, wanted '" +
                           std::string(expect_head) + "'"
                     : "unexpected end of file");
    return {};
  }

  double num(const std::string& tok) {
    try {
      std::size_t pos = 0;
      double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail("malformed number '" + tok + "'");
      return 0.0;
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  int line_no() const { return line_no_; }

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
};

Eigen::VectorXd read_vector(LineReader& r, const char* tag,
                            Eigen::Index expect) {
  std::vector<std::string> tokens = r.next(tag);
  if (static_cast<Eigen::Index>(tokens.size()) != expect + 1) {
    r.fail(std::string(tag) + " row has " + std::to_string(tokens.size() - 1) +
           " values, expected " + std::to_string(expect));
  }
  Eigen::VectorXd v(expect);
  for (Eigen::Index i = 0; i < expect; ++i) v[i] = r.num(tokens[i + 1]);
  return v;
}

Mlp read_net(LineReader& r, const char* name) {
  std::vector<std::string> head = r.next("net");
  if (head.size() != 5 || head[1] != name) {
    r.fail("expected 'net " + std::string(name) + " <in> <hidden> 1'");
  }
  const int in = static_cast<int>(r.num(head[2]));
  const int hidden = static_cast<int>(r.num(head[3]));
  if (in < 1 || hidden < 1 || r.num(head[4]) != 1.0) {
    r.fail("bad network dimensions");
  }
  Mlp net;
  net.w1.resize(hidden, in);
  for (int row = 0; row < hidden; ++row) {
    Eigen::VectorXd w = read_vector(r, "w1", in);
    net.w1.row(row) = w.transpose();
  }
  net.b1 = read_vector(r, "b1", hidden);
  net.w2 = read_vector(r, "w2", hidden).transpose();
  net.b2 = r.num(r.next("b2").at(1));
  return net;
}

Standardizer read_standardizer(LineReader& r, const char* name) {
  std::vector<std::string> head = r.next("standardizer");
  if (head.size() != 3 || head[1] != name) {
    r.fail("expected 'standardizer " + std::string(name) + " <n>'");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(r.num(head[2]));
  if (n < 1) r.fail("bad standardizer width");
  Standardizer s;
  s.mean = read_vector(r, "mean", n);
  s.std_raw = read_vector(r, "std", n);
  return s;
}

}  // namespace

void save_model(const StackedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot write model");
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "seed " << model.seed << '\n';
  const RpropParams& rp = model.config.rprop;
  out << "rprop " << fmt_full(rp.eta_plus) << ' ' << fmt_full(rp.eta_minus)
      << ' ' << fmt_full(rp.delta0) << ' ' << fmt_full(rp.delta_min) << ' '
      << fmt_full(rp.delta_max) << '\n';
  out << "train " << model.config.max_epochs << ' ' << model.config.patience
      << '\n';
  write_standardizer(out, "phase", model.phase_in);
  write_standardizer(out, "contrast", model.contrast_in);
  write_standardizer(out, "refiner", model.refiner_in);
  out << "target " << fmt_full(model.target_mean) << ' '
      << fmt_full(model.target_std) << '\n';
  write_net(out, "phase", model.net_phase);
  write_net(out, "contrast", model.net_contrast);
  write_net(out, "refiner", model.refiner);
  out << "end\n";
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

StackedModel load_model(const std::filesystem::path& path) {
  LineReader r(path);
  std::vector<std::string> head = r.next(nullptr);
  if (head.size() != 2 || head[0] != kModelMagic ||
      head[1] != std::to_string(kModelVersion)) {
    r.fail("bad model header (want '" + std::string(kModelMagic) + " " +
           std::to_string(kModelVersion) + "')");
  }
  StackedModel m;
  std::vector<std::string> seed_line = r.next("seed");
  if (seed_line.size() != 2) r.fail("bad seed line");
  try {
    m.seed = std::stoull(seed_line[1]);
  } catch (const std::exception&) {
    r.fail("malformed seed '" + seed_line[1] + "'");
  }
  std::vector<std::string> rp = r.next("rprop");
  if (rp.size() != 6) r.fail("rprop line needs 5 values");
  m.config.rprop.eta_plus = r.num(rp[1]);
  m.config.rprop.eta_minus = r.num(rp[2]);
  m.config.rprop.delta0 = r.num(rp[3]);
  m.config.rprop.delta_min = r.num(rp[4]);
  m.config.rprop.delta_max = r.num(rp[5]);
  std::vector<std::string> tr = r.next("train");
  if (tr.size() != 3) r.fail("train line needs 2 values");
  m.config.max_epochs = static_cast<int>(r.num(tr[1]));
  m.config.patience = static_cast<int>(r.num(tr[2]));
  m.phase_in = read_standardizer(r, "phase");
  m.contrast_in = read_standardizer(r, "contrast");
  m.refiner_in = read_standardizer(r, "refiner");
  std::vector<std::string> tg = r.next("target");
  if (tg.size() != 3) r.fail("target line needs 2 values");
  m.target_mean = r.num(tg[1]);
  m.target_std = r.num(tg[2]);
  m.net_phase = read_net(r, "phase");
  m.net_contrast = read_net(r, "contrast");
  m.refiner = read_net(r, "refiner");
  r.next("end");
  return m;
}

}  // namespace siqa::model
