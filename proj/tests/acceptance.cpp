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
// Acceptance checks. `acceptance <n>` runs criterion n; no argument runs all.
// Each prints one "criterion <n>: PASS|FAIL ..." line; the exit code is the
// number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "noda/commands.hpp"
#include "noda/errors.hpp"
#include "noda/odeint.hpp"
#include "noda/orchestrator.hpp"
#include "noda/text.hpp"
#include "noda/theory.hpp"

using namespace noda;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void progress(const std::string& line) {
  std::fprintf(stderr, "  %s\n", line.c_str());
  std::fflush(stderr);
}

// 1: autodiff against central differences on random NODA losses.
Outcome gradients() {
  std::size_t evaluations = 0, failures = 0;
  double worst = 0.0;
  for (const char* name : {"pendulum", "spring"}) {
    auto env = make_environment(name, 11);
    Rng rng = make_rng(11, std::string("accept.grad.") + name);
    for (std::uint64_t k = 0; k < 50; ++k) {
      const std::size_t latent = 2 * (1 + uniform_index(rng, 3));
      const std::size_t width = 4 + uniform_index(rng, 13);
      WorldModelConfig c = model_config_for(*env, latent, width);
      c.integrator.substeps = 1 + uniform_index(rng, 4);
      c.integrator.method = uniform(rng, 0.0, 1.0) < 0.5 ? Method::rk4 : Method::euler;
      WorldModel m(c, derive_seed(11, std::string(name) + std::to_string(k)));
      const TransitionBatch raw = stack(collect_random(*env, 2 + uniform_index(rng, 10), 200, rng()));
      m.set_normalizer(Normalizer::fit(raw, env->action_bound()));
      const TransitionBatch b = m.normalizer().normalize(raw);
      const LossWeights w{uniform(rng, 0.05, 0.95)};
      auto f = [&](Tape& t, const ParamSet& p) {
        WorldModel probe = m;
        probe.params() = p;
        return probe.loss(t, b, w).total;
      };
      const GradCheckReport r = grad_check(f, m.params(), 1e-5, 1e-4, 80, k);
      ++evaluations;
      worst = std::max(worst, r.max_rel_error);
      if (!r.pass) {
        ++failures;
        progress(std::string(name) + " model " + std::to_string(k) + ": " + r.worst_param + " rel " +
                 num(r.max_rel_error));
      }
    }
  }
  return {failures == 0 && evaluations >= 100,
          std::to_string(evaluations) + " losses, " + std::to_string(failures) + " failed, worst rel error " + num(worst)};
}

// 2: convergence order on du/dt = -u over [0, 1].
Outcome integrator_order() {
  auto decay = [](std::span<const double> u, std::span<const double>, double, std::span<double> du) {
    du[0] = -u[0];
  };
  const std::vector<double> one{1.0}, ref{std::exp(-1.0)};
  const double e100 = std::abs(integrate(decay, one, {}, IntegratorConfig{Method::rk4, 0.0, 1.0, 100})[0] - ref[0]);
  const std::vector<std::size_t> steps{10, 20, 40, 80};
  const auto rk = convergence_order(decay, one, {}, Method::rk4, 0.0, 1.0, steps, ref);
  const auto eu = convergence_order(decay, one, {}, Method::euler, 0.0, 1.0, steps, ref);
  bool ok = e100 <= 1e-8;
  double rk_lo = 1e300, rk_hi = 0, eu_lo = 1e300, eu_hi = 0;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    const double f4 = rk[i].error / rk[i + 1].error, f1 = eu[i].error / eu[i + 1].error;
    rk_lo = std::min(rk_lo, f4), rk_hi = std::max(rk_hi, f4);
    eu_lo = std::min(eu_lo, f1), eu_hi = std::max(eu_hi, f1);
  }
  ok = ok && rk_lo >= 12 && rk_hi <= 20 && eu_lo >= 1.8 && eu_hi <= 2.2;
  return {ok, "rk4 S=100 error " + num(e100) + ", rk4 factors [" + num(rk_lo) + ", " + num(rk_hi) +
                  "], euler factors [" + num(eu_lo) + ", " + num(eu_hi) + "]"};
}

// 3: pendulum energy conservation and torque clipping.
Outcome physics() {
  Pendulum env;
  double worst = 0.0, speed = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env.reset(seed);
    for (int k = 0; k < 500; ++k) {
      const double h0 = env.hamiltonian(env.state().canonical);
      env.step(std::vector<double>{0.0});
      speed = std::max(speed, std::abs(env.state().canonical[1]));
      worst = std::max(worst, std::abs(env.hamiltonian(env.state().canonical) - h0));
    }
  }
  bool identical = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Pendulum a, b;
    a.reset(seed);
    b.reset(seed);
    for (int k = 0; k < 200; ++k) {
      const double sign = k % 40 < 20 ? 1.0 : -1.0;
      a.step(std::vector<double>{5.0 * sign});
      b.step(std::vector<double>{2.0 * sign});
      identical = identical && a.state().canonical == b.state().canonical && a.state().observation == b.state().observation;
    }
  }
  const bool clips_inactive = speed < env.momentum_bound();
  return {worst <= 1e-6 && identical && clips_inactive,
          "max |dH| per step " + num(worst) + " (max |p| " + num(speed) + "), torque 5 vs 2 " +
              (identical ? "identical" : "different")};
}

ModelTrainingConfig pendulum_training(const Environment& env, std::uint64_t seed, ModelKind kind) {
  const EnvDefaults d = env_defaults(env.name());
  ModelTrainingConfig c;
  c.model = model_config_for(env, d.latent_dim, d.hidden_width);
  c.kind = kind;
  c.batches = 2000;
  c.batch_size = 200;
  c.lr = 1e-3;
  c.seed = seed;
  c.test_every = 250;
  c.action_scale = env.action_bound();
  return c;
}

// 4: NODA against a parameter-matched auto-encoder on the pendulum.
Outcome model_learning() {
  std::vector<double> mse, noda_loss, ae_loss;
  double worst_match = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Pendulum env;
    const TransitionBatch train = stack(collect_random(env, 20000, 200, derive_seed(seed, "accept.train")));
    const TransitionBatch test = stack(collect_random(env, 20000, 200, derive_seed(seed, "accept.test")));
    const ModelTrainingResult n = run_model_training(train, test, pendulum_training(env, seed, ModelKind::noda));
    const ModelTrainingResult a = run_model_training(train, test, pendulum_training(env, seed, ModelKind::ae));
    const double pn = static_cast<double>(n.model->param_count()), pa = static_cast<double>(a.model->param_count());
    worst_match = std::max(worst_match, std::abs(pn - pa) / pn);
    mse.push_back(n.final_test_mse);
    noda_loss.push_back(n.test_loss.back().loss);
    ae_loss.push_back(a.test_loss.back().loss);
    progress("seed " + std::to_string(seed) + ": noda mse " + num(mse.back()) + " loss " + num(noda_loss.back()) +
             ", ae loss " + num(ae_loss.back()));
  }
  const double m = median(mse), ln = median(noda_loss), la = median(ae_loss);
  return {m <= 1e-3 && ln <= la && worst_match <= 0.01,
          "median one-step mse " + num(m) + ", median test loss noda " + num(ln) + " vs ae " + num(la) +
              ", param mismatch " + num(100 * worst_match) + "%"};
}

// 5: latent-dimension sweep on the spring-mass system.
Outcome latent_sweep() {
  std::vector<double> l2, l4, l8;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto env = make_environment("spring", seed);
    const TransitionBatch train = stack(collect_random(*env, 20000, 200, derive_seed(seed, "accept.train")));
    const TransitionBatch test = stack(collect_random(*env, 5000, 200, derive_seed(seed, "accept.test")));
    ModelTrainingConfig c = pendulum_training(*env, seed, ModelKind::noda);
    c.test_every = c.batches;
    const auto rows = sweep_latent_dim(train, test, {2, 4, 8}, c);
    l2.push_back(rows[0].final_test_loss);
    l4.push_back(rows[1].final_test_loss);
    l8.push_back(rows[2].final_test_loss);
    progress("seed " + std::to_string(seed) + ": dim2 " + num(l2.back()) + " dim4 " + num(l4.back()) + " dim8 " +
             num(l8.back()));
  }
  const double m2 = median(l2), m4 = median(l4), m8 = median(l8);
  return {m4 <= 1.5 * m8 && m2 >= 2 * m4,
          "median final test loss dim2 " + num(m2) + ", dim4 " + num(m4) + ", dim8 " + num(m8)};
}

// 6: one-step pretraining followed by two-step fine-tuning.
Outcome transfer() {
  std::vector<double> fraction;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Pendulum env;
    const TransitionBatch pre = stack(collect_random(env, 20000, 200, derive_seed(seed, "accept.pre")));
    const TransitionBatch fine = stack(collect_random_multistep(env, 20000, 200, 2, derive_seed(seed, "accept.fine")));
    const TransitionBatch fine_test =
        stack(collect_random_multistep(env, 2000, 200, 2, derive_seed(seed, "accept.fine.test")));
    ModelTrainingConfig tc = pendulum_training(env, seed, ModelKind::noda);
    tc.test_every = 50;
    const WorldModelConfig pre_model = tc.model;
    tc.model.field_scale = 1.0 / pre_model.integrator.tau;
    tc.model.integrator.tau = 2 * pre_model.integrator.tau;
    tc.model.integrator.substeps = 2 * pre_model.integrator.substeps;
    WorldModelConfig pm = pre_model;
    pm.field_scale = tc.model.field_scale;
    const TransferResult r = run_transfer(pre, fine, fine_test, pm, 100, tc,
                                          {ModelPart::encoder, ModelPart::decoder, ModelPart::reward,
                                           ModelPart::dynamics});
    const auto hit = r.batches_to_match();
    fraction.push_back(hit ? static_cast<double>(*hit) / static_cast<double>(tc.batches)
                           : std::numeric_limits<double>::infinity());
    progress("seed " + std::to_string(seed) + ": scratch final " + num(r.scratch.back().loss) + ", transfer final " +
             num(r.transfer.back().loss) + ", matched at " + (hit ? std::to_string(*hit) : std::string("never")));
  }
  const double m = median(fraction);
  return {m <= 0.5, "median fraction of scratch batches needed " + num(m)};
}

// 7: bound soundness on a trained pendulum model.
Outcome bounds() {
  Pendulum env;
  const std::uint64_t seed = 7;
  const TransitionBatch train = stack(collect_random(env, 20000, 200, derive_seed(seed, "accept.train")));
  const TransitionBatch test = stack(collect_random(env, 2000, 200, derive_seed(seed, "accept.test")));
  ModelTrainingConfig tc = pendulum_training(env, seed, ModelKind::noda);
  tc.batches = 1000;
  tc.test_every = tc.batches;
  const ModelTrainingResult trained = run_model_training(train, test, tc);
  const WorldModel& model = *trained.model;

  BoundConfig bc;
  bc.rollouts = 100;
  bc.n_max = 20;
  bc.gamma = 0.9;
  bc.seed = seed;
  const EnvironmentDynamics truth(env);
  const RewardFunction reward = [&](std::span<const double> s, std::span<const double> a) { return env.reward(s, a); };
  const RolloutSet rollouts = sample_rollouts(env, bc.rollouts, bc.n_max, derive_seed(seed, "bounds.in"));
  const BoundReport r = verify_bounds(truth, model, model.normalizer(), reward, rollouts, bc);
  double gap = 0.0;
  for (double g : r.value_gaps) gap = std::max(gap, g);
  const bool ok = r.recursive_checks == bc.rollouts * bc.n_max && r.recursive_violations == 0 &&
                  r.closed_form_violations == 0 && r.value_violations == 0;
  std::string detail = std::to_string(r.recursive_checks - r.recursive_violations) + "/" +
                       std::to_string(r.recursive_checks) + " recursive steps hold, " +
                       std::to_string(r.closed_form_violations) + " closed-form violations, K_bar " +
                       num(r.constants.k_bar) + ", delta " + num(r.constants.delta);
  if (r.vacuous)
    detail += ", gamma*K_bar >= 1 so the value bound does not apply";
  else
    detail += ", value gap max " + num(gap) + " <= bound " + num(r.value_bound) + " (" +
              std::to_string(r.value_violations) + " violations)";
  return {ok, detail};
}

// 8: NODA-SAC against plain SAC on the pendulum.
Outcome reinforcement() {
  const double threshold = -300.0;
  std::vector<double> noda_steps, sac_steps;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (WorldModelChoice wm : {WorldModelChoice::noda, WorldModelChoice::none}) {
      TrainConfig c;
      c.seed = seed;
      c.world_model = wm;
      c.eval_interval = 1000;
      c.stop_return = threshold;
      const RunResult r = run_noda_sac(c);
      const auto hit = r.metrics.steps_to(threshold);
      const double steps = hit ? static_cast<double>(*hit) : std::numeric_limits<double>::infinity();
      (wm == WorldModelChoice::noda ? noda_steps : sac_steps).push_back(steps);
      progress(std::string(to_string(wm)) + " seed " + std::to_string(seed) + ": steps to threshold " +
               (hit ? std::to_string(*hit) : std::string("not reached")) + ", last return " +
               num(r.metrics.rows.back().eval_return_mean));
    }
  }
  const double mn = median(noda_steps), ms = median(sac_steps);
  return {std::isfinite(mn) && mn <= 1.1 * ms,
          "median steps to " + num(threshold) + ": noda-sac " + num(mn) + ", sac " + num(ms)};
}

// 9: reproducible command outputs and bit-exact formats.
Outcome reproducibility() {
  const auto root = std::filesystem::temp_directory_path() / "noda_acceptance_9";
  std::filesystem::remove_all(root);
  Config cfg;
  cfg.apply_text(
      "train_size = 400\ntest_size = 200\nbatches = 20\nmodel_batch = 32\nhidden_width = 8\nsubsteps = 2\n"
      "seed = 9\nn1 = 200\nn2 = 100\nn4 = 400\nb1 = 32\nb2 = 20\neval_interval = 200\neval_episodes = 2\n"
      "rollouts = 5\nn_max = 5\ndims = 2,4\npretrain_batches = 5\n");
  const std::vector<std::string> commands = {"collect", "train-model", "train-rl", "sweep-dim", "transfer",
                                             "verify-bounds"};
  std::size_t files = 0, mismatched = 0;
  for (const auto& cmd : commands) {
    for (const char* run : {"a", "b"}) run_command(cmd, cfg, (root / run / cmd).string());
    for (const auto& entry : std::filesystem::directory_iterator(root / "a" / cmd)) {
      const auto other = root / "b" / cmd / entry.path().filename();
      ++files;
      if (read_file(entry.path().string()) != read_file(other.string())) {
        ++mismatched;
        progress("differs: " + entry.path().string());
      }
    }
  }
  const std::string ckpt_bytes = read_file((root / "a" / "train-model" / "model.ckpt").string());
  const bool ckpt_round = encode_checkpoint(decode_checkpoint(ckpt_bytes)) == ckpt_bytes;
  const std::string data_bytes = read_file((root / "a" / "collect" / "train.bin").string());
  const bool data_round = encode_dataset(decode_dataset(data_bytes)) == data_bytes;

  std::size_t rejected = 0, cuts = 0;
  for (std::size_t cut = 0; cut < ckpt_bytes.size(); cut += 1 + ckpt_bytes.size() / 50, ++cuts) {
    try {
      decode_checkpoint(ckpt_bytes.substr(0, cut));
    } catch (const FormatError&) {
      ++rejected;
    }
  }
  const std::string path = (root / "truncated.ckpt").string();
  write_file(path, ckpt_bytes.substr(0, ckpt_bytes.size() - 1));
  Checkpoint target = decode_checkpoint(ckpt_bytes);
  const Checkpoint before = target;
  bool file_rejected = false;
  try {
    target = load_checkpoint(path);
  } catch (const FormatError&) {
    file_rejected = true;
  }
  bool untouched = target.metadata == before.metadata;
  for (const auto& [name, t] : before.params) untouched = untouched && bit_equal(t, target.params.at(name));

  const bool ok = mismatched == 0 && files > commands.size() && ckpt_round && data_round && rejected == cuts &&
                  file_rejected && untouched;
  return {ok, std::to_string(files - mismatched) + "/" + std::to_string(files) + " output files identical, round trips " +
                  (ckpt_round && data_round ? "bit-exact" : "differ") + ", " + std::to_string(rejected) + "/" +
                  std::to_string(cuts) + " truncations rejected, partial load " +
                  (untouched ? "prevented" : "happened")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {gradients, integrator_order, physics,   model_learning,
                                                          latent_sweep, transfer,       bounds,    reinforcement,
                                                          reproducibility};
  std::vector<std::size_t> selected;
  if (argc > 1) {
    const long n = std::strtol(argv[1], nullptr, 10);
    if (n < 1 || n > static_cast<long>(criteria.size())) {
      std::fprintf(stderr, "usage: acceptance [1-%zu]\n", criteria.size());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(n));
  } else {
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);
  }
  int failures = 0;
  for (std::size_t n : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu: %s %s [%.1f s]\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
