#include "entnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "entnet/error.hpp"
#include "entnet/ops.hpp"

namespace entnet {

TrainConfig TrainConfig::babi() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kAdam;
  c.lr = 0.01;
  c.schedule = Schedule::kHalveByEpoch;
  c.halve_every = 25;
  c.halve_until = 200;
  c.epochs = 200;
  return c;
}

TrainConfig TrainConfig::world() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kAdam;
  c.lr = 0.01;
  c.schedule = Schedule::kHalveByUpdate;
  c.halve_every = 10000;
  c.epochs = 200;
  c.patience = 25;
  return c;
}

TrainConfig TrainConfig::cbt() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kSgd;
  c.lr = 0.001;
  c.schedule = Schedule::kConstant;
  c.dropout = 0.5;
  return c;
}

double lr_schedule(const TrainConfig& config, std::size_t epoch, std::uint64_t updates) {
  switch (config.schedule) {
    case Schedule::kHalveByEpoch: {
      const std::size_t e = std::min(epoch, config.halve_until);
      return config.lr / std::pow(2.0, static_cast<double>(e / config.halve_every));
    }
    case Schedule::kHalveByUpdate:
      return config.lr / std::pow(2.0, static_cast<double>(updates / config.halve_every));
    case Schedule::kConstant: return config.lr;
  }
  return config.lr;
}

namespace {

std::size_t target_of(const Model& model, const EncodedSample& s) {
  return static_cast<std::size_t>(model.config().output == OutputMode::kDirect ? s.answer_slot
                                                                              : s.answer);
}

}  // namespace

EvalResult evaluate_error(const Model& model, std::span<const EncodedSample> samples) {
  EvalResult r;
  r.total = samples.size();
  for (const auto& s : samples) {
    Tape tape = Tape::inference();
    const ForwardResult fwd = model.forward(tape, s);
    r.loss += tape.value(fwd.loss)[0];
    if (argmax(tape.value(fwd.scores).values()) == target_of(model, s)) ++r.correct;
  }
  if (r.total > 0) {
    // wrong / total, so 1 miss in 20 is exactly 0.05
    r.error = static_cast<double>(r.total - r.correct) / static_cast<double>(r.total);
    r.loss /= static_cast<double>(r.total);
  }
  r.failed = r.error > kFailThreshold;
  return r;
}

EvalResult evaluate_error(const Model& model, std::span<const QASample> samples) {
  std::vector<EncodedSample> encoded;
  encoded.reserve(samples.size());
  for (const auto& s : samples) encoded.push_back(model.encode_sample(s));
  return evaluate_error(model, encoded);
}

const RunMetrics& select_best_seed(std::span<const RunMetrics> runs) {
  if (runs.empty()) fail(ErrorCode::kEmptyRuns, "no runs to select from");
  const RunMetrics* best = &runs.front();
  for (const auto& r : runs) {
    if (r.best_valid_error < best->best_valid_error ||
        (r.best_valid_error == best->best_valid_error && r.seed < best->seed)) {
      best = &r;
    }
  }
  return *best;
}

StepResult train_step(Model& model, std::span<const EncodedSample* const> batch,
                      const TrainConfig& config, double lr, Adam& adam, Rng& dropout_rng,
                      const TrainHooks* hooks) {
  StepResult result;
  if (batch.empty()) return result;
  ParameterSet& params = model.params();
  params.zero_grad();
  const double weight = 1.0 / static_cast<double>(batch.size());
  ForwardOptions options;
  options.training = true;
  options.rng = &dropout_rng;
  for (const EncodedSample* s : batch) {
    Tape tape;
    const ForwardResult fwd = model.forward(tape, *s, options);
    const double loss = tape.value(fwd.loss)[0];
    if (!std::isfinite(loss)) {
      fail(ErrorCode::kDivergedLoss,
           "non-finite loss " + std::to_string(loss) + " after " +
               std::to_string(adam.steps()) + " updates at lr " + std::to_string(lr));
    }
    result.mean_loss += loss * weight;
    if (argmax(tape.value(fwd.scores).values()) == target_of(model, *s)) ++result.correct;
    tape.backward(fwd.loss, weight);
  }
  model.zero_null_grad();
  if (hooks != nullptr && hooks->before_clip) hooks->before_clip(params);
  result.grad_norm = clip_global_norm(params, config.clip);
  if (hooks != nullptr && hooks->after_clip) hooks->after_clip(params);
  if (config.optimizer == OptimizerKind::kAdam) {
    adam.step(params, lr);
  } else {
    sgd_step(params, lr);
  }
  model.zero_null_row();
  return result;
}

RunMetrics train(Model& model, std::span<const QASample> train_set,
                 std::span<const QASample> valid_set, const TrainConfig& config,
                 const TrainHooks& hooks) {
  if (train_set.empty()) fail(ErrorCode::kBadConfig, "training set is empty");
  if (config.batch_size == 0) fail(ErrorCode::kBadConfig, "batch size must be positive");
  const auto started = std::chrono::steady_clock::now();

  std::vector<EncodedSample> train_encoded;
  train_encoded.reserve(train_set.size());
  for (const auto& s : train_set) train_encoded.push_back(model.encode_sample(s));
  std::vector<EncodedSample> valid_encoded;
  valid_encoded.reserve(valid_set.size());
  for (const auto& s : valid_set) valid_encoded.push_back(model.encode_sample(s));

  Rng shuffle_rng = make_stream(config.seed, "shuffle");
  Rng dropout_rng = make_stream(config.seed, "dropout");
  Adam adam;

  std::vector<std::size_t> order(train_encoded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  RunMetrics run;
  run.seed = config.seed;
  std::vector<Tensor> best_weights;
  auto snapshot = [&] {
    best_weights.clear();
    for (const auto& p : model.params()) best_weights.push_back(p->value);
  };
  snapshot();
  bool have_best = false;
  std::size_t since_best = 0;

  std::vector<const EncodedSample*> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr_schedule(config, epoch, adam.steps());
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_encoded[order[i]]);
      const double lr = lr_schedule(config, epoch, adam.steps());
      const StepResult step = train_step(model, batch, config, lr, adam, dropout_rng, &hooks);
      loss_sum += step.mean_loss * static_cast<double>(batch.size());
      correct += step.correct;
      ++run.updates;
    }
    const auto n = static_cast<double>(order.size());
    em.train_loss = loss_sum / n;
    em.train_error = (n - static_cast<double>(correct)) / n;
    if (!valid_encoded.empty()) {
      const EvalResult v = evaluate_error(model, valid_encoded);
      em.valid_loss = v.loss;
      em.valid_error = v.error;
    } else {
      em.valid_loss = em.train_loss;
      em.valid_error = em.train_error;
    }
    run.epochs.push_back(em);

    if (!have_best || em.valid_error < run.best_valid_error) {
      have_best = true;
      run.best_valid_error = em.valid_error;
      run.best_epoch = epoch;
      since_best = 0;
      snapshot();
      if (hooks.on_best) hooks.on_best(model, em);
    } else {
      ++since_best;
    }
    if (hooks.on_epoch && !hooks.on_epoch(em)) break;
    if (config.patience > 0 && since_best >= config.patience) break;
  }

  std::size_t i = 0;
  for (auto& p : model.params()) p->value = best_weights[i++];
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

void write_metrics_csv(std::ostream& out, const RunMetrics& run, bool header) {
  if (header) out << "epoch,split,loss,error,lr,seed\n";
  for (const auto& e : run.epochs) {
    out << e.epoch << ",train," << e.train_loss << ',' << e.train_error << ',' << e.lr << ','
        << run.seed << '\n';
    out << e.epoch << ",valid," << e.valid_loss << ',' << e.valid_error << ',' << e.lr << ','
        << run.seed << '\n';
  }
}

std::string metrics_json(const RunMetrics& run) {
  nlohmann::json j;
  j["seed"] = run.seed;
  j["epochs_run"] = run.epochs.size();
  j["best_epoch"] = run.best_epoch;
  j["best_valid_error"] = run.best_valid_error;
  if (run.test_error >= 0.0) j["test_error"] = run.test_error;
  j["seconds"] = run.seconds;
  j["updates"] = run.updates;
  if (!run.epochs.empty()) {
    j["final_train_loss"] = run.epochs.back().train_loss;
    j["final_lr"] = run.epochs.back().lr;
  }
  return j.dump(2);
}

}  // namespace entnet
