/*
 Copyright 2026 The NODA Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "noda/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noda/errors.hpp"

namespace noda {
namespace {

constexpr std::size_t kChunk = 1024;

Tensor rows_of(const Tensor& t, std::size_t begin, std::size_t end) {
  const std::size_t cols = t.cols();
  std::vector<double> data(t.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                           t.data().begin() + static_cast<std::ptrdiff_t>(end * cols));
  return Tensor({end - begin, cols}, std::move(data));
}

TransitionBatch rows_of(const TransitionBatch& b, std::size_t begin, std::size_t end) {
  return {rows_of(b.s, begin, end), rows_of(b.a, begin, end), rows_of(b.s2, begin, end),
          rows_of(b.r, begin, end), rows_of(b.done, begin, end)};
}

void copy_rows(const Tensor& src, Tensor& dst, std::size_t begin) {
  std::copy(src.data().begin(), src.data().end(),
            dst.data().begin() + static_cast<std::ptrdiff_t>(begin * dst.cols()));
}

std::size_t dynamics_count(std::size_t in, std::size_t width, std::size_t out) {
  return in * width + width + width * width + width + width * out + out;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "noda") return ModelKind::noda;
  if (name == "ae") return ModelKind::ae;
  fail(ErrorKind::contract, "unknown model kind '" + name + "'");
}

const char* to_string(ModelKind kind) { return kind == ModelKind::noda ? "noda" : "ae"; }

ModelPart parse_model_part(const std::string& name) {
  if (name == "encoder") return ModelPart::encoder;
  if (name == "decoder") return ModelPart::decoder;
  if (name == "reward") return ModelPart::reward;
  if (name == "dynamics") return ModelPart::dynamics;
  fail(ErrorKind::contract, "unknown model part '" + name + "'");
}

const char* to_string(ModelPart part) {
  switch (part) {
    case ModelPart::encoder: return "encoder";
    case ModelPart::decoder: return "decoder";
    case ModelPart::reward: return "reward";
    case ModelPart::dynamics: return "dynamics";
  }
  return "?";
}

// --- Normalizer -----------------------------------------------------------

Normalizer Normalizer::identity(std::size_t obs_dim, double action_scale) {
  Normalizer n;
  n.obs_mean.assign(obs_dim, 0.0);
  n.obs_std.assign(obs_dim, 1.0);
  n.action_scale = action_scale;
  return n;
}

Normalizer Normalizer::fit(const TransitionBatch& data, double action_scale) {
  const std::size_t rows = data.size(), l = data.s.cols();
  if (rows == 0) fail(ErrorKind::contract, "cannot fit a normalizer to no data");
  Normalizer n = identity(l, action_scale);
  auto floor_std = [](double var) {
    const double sd = std::sqrt(std::max(var, 0.0));
    return sd < 1e-8 ? 1.0 : sd;
  };
  for (std::size_t j = 0; j < l; ++j) {
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      for (double x : {data.s(i, j), data.s2(i, j)}) {
        sum += x;
        sum2 += x * x;
      }
    }
    const double count = 2.0 * static_cast<double>(rows);
    n.obs_mean[j] = sum / count;
    n.obs_std[j] = floor_std(sum2 / count - n.obs_mean[j] * n.obs_mean[j]);
  }
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    sum += data.r[i];
    sum2 += data.r[i] * data.r[i];
  }
  n.reward_mean = sum / static_cast<double>(rows);
  n.reward_std = floor_std(sum2 / static_cast<double>(rows) - n.reward_mean * n.reward_mean);
  return n;
}

Tensor Normalizer::normalize_obs(const Tensor& s) const {
  if (s.cols() != obs_mean.size()) fail(ErrorKind::dimension, "observation width mismatch");
  Tensor out = s;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = (out(i, j) - obs_mean[j]) / obs_std[j];
  return out;
}

Tensor Normalizer::denormalize_obs(const Tensor& s) const {
  if (s.cols() != obs_mean.size()) fail(ErrorKind::dimension, "observation width mismatch");
  Tensor out = s;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = out(i, j) * obs_std[j] + obs_mean[j];
  return out;
}

Tensor Normalizer::normalize_actions(const Tensor& a) const {
  Tensor out = a;
  for (double& x : out.data()) x /= action_scale;
  return out;
}

Tensor Normalizer::normalize_rewards(const Tensor& r) const {
  Tensor out = r;
  for (double& x : out.data()) x = (x - reward_mean) / reward_std;
  return out;
}

Tensor Normalizer::denormalize_rewards(const Tensor& r) const {
  Tensor out = r;
  for (double& x : out.data()) x = x * reward_std + reward_mean;
  return out;
}

TransitionBatch Normalizer::normalize(const TransitionBatch& raw) const {
  return {normalize_obs(raw.s), normalize_actions(raw.a), normalize_obs(raw.s2),
          normalize_rewards(raw.r), raw.done};
}

// --- configuration --------------------------------------------------------

void WorldModelConfig::validate() const {
  if (obs_dim == 0 || action_dim == 0 || hidden_width == 0)
    fail(ErrorKind::contract, "model dimensions must be positive");
  if (latent_dim < 2 || latent_dim % 2 != 0)
    fail(ErrorKind::contract, "latent dimension 2K must be even and at least 2, got " +
                                  std::to_string(latent_dim));
  integrator.validate();
  if (!(field_scale >= 0.0) || !std::isfinite(field_scale))
    fail(ErrorKind::contract, "field_scale must be finite and non-negative");
}

void LossWeights::validate() const {
  if (!(mu > 0.0 && mu < 1.0)) fail(ErrorKind::contract, "mu must lie in the open interval (0, 1)");
}

std::size_t matched_width(std::size_t in, std::size_t out, std::size_t target) {
  std::size_t best = 1;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  for (std::size_t w = 1; w <= 4096; ++w) {
    const std::size_t count = dynamics_count(in, w, out);
    const std::size_t gap = count > target ? count - target : target - count;
    if (gap < best_gap) {
      best_gap = gap;
      best = w;
    }
    if (count > target) break;
  }
  return best;
}

// --- WorldModel -----------------------------------------------------------

std::string WorldModel::prefix(ModelPart part) { return to_string(part); }

WorldModel::WorldModel(WorldModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  normalizer_ = Normalizer::identity(config_.obs_dim);
  build_networks();
  Rng rng = make_rng(seed, "model");
  encoder_.init(params_, rng);
  decoder_.init(params_, rng);
  reward_.init(params_, rng);
  dynamics_.init(params_, rng);
}

WorldModel::WorldModel(const ParamSet& params, const Metadata& meta) {
  config_.kind = parse_model_kind(require(meta, "model.kind"));
  config_.obs_dim = static_cast<std::size_t>(parse_int(require(meta, "model.obs_dim")));
  config_.action_dim = static_cast<std::size_t>(parse_int(require(meta, "model.action_dim")));
  config_.latent_dim = static_cast<std::size_t>(parse_int(require(meta, "model.latent_dim")));
  config_.hidden_width = static_cast<std::size_t>(parse_int(require(meta, "model.hidden_width")));
  config_.ae_width = static_cast<std::size_t>(parse_int(require(meta, "model.ae_width")));
  config_.integrator.method = parse_method(require(meta, "integrator.method"));
  config_.integrator.t0 = parse_double(require(meta, "integrator.t0"));
  config_.integrator.tau = parse_double(require(meta, "integrator.tau"));
  config_.integrator.substeps = static_cast<std::size_t>(parse_int(require(meta, "integrator.substeps")));
  config_.field_scale = parse_double(require(meta, "model.field_scale"));
  config_.validate();

  Normalizer n;
  n.obs_mean = split_doubles(require(meta, "norm.obs_mean"));
  n.obs_std = split_doubles(require(meta, "norm.obs_std"));
  n.reward_mean = parse_double(require(meta, "norm.reward_mean"));
  n.reward_std = parse_double(require(meta, "norm.reward_std"));
  n.action_scale = parse_double(require(meta, "norm.action_scale"));
  set_normalizer(std::move(n));

  build_networks();
  ParamSet reference;
  Rng unused(0);
  for (const Mlp* net : {&encoder_, &decoder_, &reward_, &dynamics_}) net->init(reference, unused);
  for (const auto& [name, shape_src] : reference) {
    auto it = params.find(name);
    if (it == params.end())
      fail(ErrorKind::incompatible_checkpoint, "checkpoint is missing parameter '" + name + "'");
    if (it->second.shape() != shape_src.shape())
      fail(ErrorKind::incompatible_checkpoint, "parameter '" + name + "' has shape " +
                                                   shape_string(it->second.shape()) + ", expected " +
                                                   shape_string(shape_src.shape()));
    params_.emplace(name, it->second);
  }
}

void WorldModel::build_networks() {
  const std::size_t l = config_.obs_dim, m = config_.action_dim, k2 = config_.latent_dim;
  const std::size_t w = config_.hidden_width;
  if (config_.field_scale == 0.0) config_.field_scale = 1.0 / config_.integrator.tau;
  encoder_ = Mlp(prefix(ModelPart::encoder), l, {w, w}, k2);
  decoder_ = Mlp(prefix(ModelPart::decoder), k2, {w, w}, l);
  reward_ = Mlp(prefix(ModelPart::reward), k2 + m, {w, w}, 1);
  if (config_.kind == ModelKind::noda) {
    dynamics_ = Mlp(prefix(ModelPart::dynamics), k2 + m + 1, {w, w}, k2);
  } else {
    if (config_.ae_width == 0)
      config_.ae_width = matched_width(k2 + m, k2, dynamics_count(k2 + m + 1, w, k2));
    dynamics_ = Mlp(prefix(ModelPart::dynamics), k2 + m, {config_.ae_width, config_.ae_width}, k2);
  }
}

WorldModel WorldModel::matched_ae(const WorldModel& noda, std::uint64_t seed) {
  WorldModelConfig cfg = noda.config();
  cfg.kind = ModelKind::ae;
  cfg.ae_width = 0;
  WorldModel ae(cfg, seed);
  ae.set_normalizer(noda.normalizer());
  return ae;
}

void WorldModel::set_integrator(const IntegratorConfig& cfg) {
  cfg.validate();
  config_.integrator = cfg;
}

void WorldModel::set_normalizer(Normalizer normalizer) {
  if (normalizer.obs_mean.size() != config_.obs_dim || normalizer.obs_std.size() != config_.obs_dim)
    fail(ErrorKind::dimension, "normalizer width does not match the model");
  if (!(normalizer.action_scale > 0.0) || !(normalizer.reward_std > 0.0))
    fail(ErrorKind::contract, "normalizer scales must be positive");
  for (double sd : normalizer.obs_std)
    if (!(sd > 0.0)) fail(ErrorKind::contract, "normalizer scales must be positive");
  normalizer_ = std::move(normalizer);
}

Var WorldModel::encode(Tape& tape, Var s) const { return encoder_.forward(tape, params_, s); }

Var WorldModel::decode(Tape& tape, Var u) const { return decoder_.forward(tape, params_, u); }

Var WorldModel::predict_reward(Tape& tape, Var u, Var a) const {
  return reward_.forward(tape, params_, concat({u, a}));
}

Var WorldModel::evolve(Tape& tape, Var u, Var a) const {
  if (config_.kind == ModelKind::ae) return dynamics_.forward(tape, params_, concat({u, a}));
  const std::size_t rows = u.value().rows();
  const TapeField h = [&](Var uu, Var aa, double t) {
    Var time = tape.constant(Tensor({rows, 1}, t));
    return scale(dynamics_.forward(tape, params_, concat({uu, aa, time})), config_.field_scale);
  };
  return integrate(h, u, a, config_.integrator);
}

Prediction WorldModel::forward(Tape& tape, Var s, Var a) const {
  if (s.value().rank() != 2 || s.value().cols() != config_.obs_dim)
    fail(ErrorKind::dimension, "model expects states of shape [B," + std::to_string(config_.obs_dim) +
                                   "], got " + shape_string(s.value().shape()));
  if (a.value().rank() != 2 || a.value().cols() != config_.action_dim || a.value().rows() != s.value().rows())
    fail(ErrorKind::dimension, "model expects actions of shape [B," + std::to_string(config_.action_dim) +
                                   "], got " + shape_string(a.value().shape()));
  Prediction p;
  p.latent = encode(tape, s);
  p.reconstruction = decode(tape, p.latent);
  p.reward = predict_reward(tape, p.latent, a);
  p.next_state = decode(tape, evolve(tape, p.latent, a));
  return p;
}

LossTerms WorldModel::loss(Tape& tape, const TransitionBatch& batch, const LossWeights& weights) const {
  weights.validate();
  const std::size_t n = batch.size();
  if (n == 0) fail(ErrorKind::contract, "loss of an empty batch");
  Var s = tape.constant(batch.s);
  Var a = tape.constant(batch.a);
  Var s2 = tape.constant(batch.s2);
  Var r = tape.constant(batch.r);
  const Prediction p = forward(tape, s, a);
  const double inv_n = 1.0 / static_cast<double>(n);
  Var recon = scale(sum(square(sub(p.reconstruction, s))), inv_n);
  Var pred = scale(sum(square(sub(p.next_state, s2))), inv_n);
  Var rew = scale(sum(square(sub(p.reward, r))), inv_n);
  LossTerms out;
  out.total = add(scale(add(recon, pred), weights.mu), scale(rew, 1.0 - weights.mu));
  out.recon = recon.value().item();
  out.pred = pred.value().item();
  out.reward = rew.value().item();
  return out;
}

StepBatch WorldModel::step(const Tensor& states, const Tensor& actions) const {
  const std::size_t n = states.rows();
  if (actions.rows() != n) fail(ErrorKind::dimension, "state and action batches differ in length");
  StepBatch out{Tensor({n, config_.obs_dim}), Tensor({n, 1})};
  const Tensor s_norm = normalizer_.normalize_obs(states);
  const Tensor a_norm = normalizer_.normalize_actions(actions);
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t end = std::min(n, begin + kChunk);
    Tape tape;
    Var s = tape.constant(rows_of(s_norm, begin, end));
    Var a = tape.constant(rows_of(a_norm, begin, end));
    const Var u = encode(tape, s);
    const Var next = decode(tape, evolve(tape, u, a));
    const Var r = predict_reward(tape, u, a);
    copy_rows(normalizer_.denormalize_obs(next.value()), out.next_states, begin);
    copy_rows(normalizer_.denormalize_rewards(r.value()), out.rewards, begin);
  }
  return out;
}

Tensor WorldModel::encode(const Tensor& states) const {
  Tape tape;
  return encode(tape, tape.constant(normalizer_.normalize_obs(states))).value();
}

Tensor WorldModel::decode(const Tensor& latents) const {
  if (latents.rank() != 2 || latents.cols() != config_.latent_dim)
    fail(ErrorKind::dimension, "latent batch must be [B," + std::to_string(config_.latent_dim) + "]");
  Tape tape;
  return normalizer_.denormalize_obs(decode(tape, tape.constant(latents)).value());
}

double WorldModel::evaluate_loss(const TransitionBatch& raw, const LossWeights& weights) const {
  const std::size_t n = raw.size();
  if (n == 0) fail(ErrorKind::contract, "loss of an empty batch");
  const TransitionBatch data = normalizer_.normalize(raw);
  double total = 0.0;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t end = std::min(n, begin + kChunk);
    Tape tape;
    const LossTerms terms = loss(tape, rows_of(data, begin, end), weights);
    total += terms.total.value().item() * static_cast<double>(end - begin);
  }
  return total / static_cast<double>(n);
}

double WorldModel::one_step_mse(const TransitionBatch& raw) const {
  const StepBatch pred = step(raw.s, raw.a);
  const Tensor p = normalizer_.normalize_obs(pred.next_states);
  const Tensor t = normalizer_.normalize_obs(raw.s2);
  double se = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) se += (p[i] - t[i]) * (p[i] - t[i]);
  return se / static_cast<double>(p.size());
}

Metadata WorldModel::metadata() const {
  Metadata m;
  m["model.kind"] = to_string(config_.kind);
  m["model.obs_dim"] = std::to_string(config_.obs_dim);
  m["model.action_dim"] = std::to_string(config_.action_dim);
  m["model.latent_dim"] = std::to_string(config_.latent_dim);
  m["model.hidden_width"] = std::to_string(config_.hidden_width);
  m["model.ae_width"] = std::to_string(config_.ae_width);
  m["model.field_scale"] = format_double(config_.field_scale);
  m["integrator.method"] = to_string(config_.integrator.method);
  m["integrator.t0"] = format_double(config_.integrator.t0);
  m["integrator.tau"] = format_double(config_.integrator.tau);
  m["integrator.substeps"] = std::to_string(config_.integrator.substeps);
  m["norm.obs_mean"] = join_doubles(normalizer_.obs_mean);
  m["norm.obs_std"] = join_doubles(normalizer_.obs_std);
  m["norm.reward_mean"] = format_double(normalizer_.reward_mean);
  m["norm.reward_std"] = format_double(normalizer_.reward_std);
  m["norm.action_scale"] = format_double(normalizer_.action_scale);
  return m;
}

// --- free functions -------------------------------------------------------

double train_step(WorldModel& model, const TransitionBatch& raw_batch, AdamState& optimizer,
                  const LossWeights& weights) {
  const TransitionBatch batch = model.normalizer().normalize(raw_batch);
  Tape tape;
  const LossTerms terms = model.loss(tape, batch, weights);
  const double value = terms.total.value().item();
  const GradMap grads = tape.backward(terms.total);
  adam_step(model.params(), grads, optimizer);
  return value;
}

void transfer_load(WorldModel& model, const ParamSet& checkpoint, const std::set<ModelPart>& parts) {
  std::vector<std::string> selected;
  for (ModelPart part : parts) {
    const std::string pre = WorldModel::prefix(part) + ".";
    for (const auto& [name, value] : model.params()) {
      if (name.compare(0, pre.size(), pre) != 0) continue;
      auto it = checkpoint.find(name);
      if (it == checkpoint.end())
        fail(ErrorKind::incompatible_checkpoint, "checkpoint lacks parameter '" + name + "'");
      if (it->second.shape() != value.shape())
        fail(ErrorKind::incompatible_checkpoint, "parameter '" + name + "' has shape " +
                                                     shape_string(it->second.shape()) +
                                                     " in the checkpoint but " +
                                                     shape_string(value.shape()) + " in the model");
      selected.push_back(name);
    }
  }
  for (const auto& name : selected) model.params().at(name) = checkpoint.at(name);
}

RolloutResult rollout_model(const ObservationDynamics& dynamics, const std::vector<double>& s0,
                            const std::vector<std::vector<double>>& actions) {
  if (actions.empty()) fail(ErrorKind::contract, "rollout needs at least one action");
  RolloutResult out;
  std::vector<double> s = s0;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    try {
      const StepBatch next = dynamics.step(Tensor({1, s.size()}, s), Tensor({1, actions[k].size()}, actions[k]));
      s.assign(next.next_states.data().begin(), next.next_states.data().end());
      out.states.push_back(s);
      out.rewards.push_back(next.rewards[0]);
    } catch (const Error& e) {
      throw Error(e.kind(), "rollout step " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace noda
