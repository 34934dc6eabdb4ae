#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "entnet/model.hpp"
#include "entnet/optim.hpp"
#include "entnet/sample.hpp"

namespace entnet {

enum class OptimizerKind { kAdam, kSgd };

enum class Schedule {
  kHalveByEpoch,   // lr / 2 every `halve_every` epochs until `halve_until`
  kHalveByUpdate,  // lr / 2 every `halve_every` optimizer updates
  kConstant,
};

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double lr = 0.01;
  Schedule schedule = Schedule::kHalveByEpoch;
  std::size_t halve_every = 25;
  std::size_t halve_until = 200;
  std::size_t batch_size = 32;
  double clip = kClipThreshold;
  std::size_t epochs = 200;
  /// Stop after this many epochs without a validation improvement; 0 never
  /// stops early.
  std::size_t patience = 0;
  std::uint64_t seed = 1;
  double dropout = 0.0;

  /// bAbI: ADAM 0.01, halved every 25 epochs until epoch 200.
  static TrainConfig babi();
  /// World model: ADAM 0.01, halved every 10,000 updates; 200 epochs with a
  /// 25-epoch validation plateau stop.
  static TrainConfig world();
  /// CBT: SGD at a fixed 0.001 with embedding dropout 0.5.
  static TrainConfig cbt();
};

/// Learning rate in effect for a given 0-based epoch and update count.
double lr_schedule(const TrainConfig& config, std::size_t epoch, std::uint64_t updates);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_error = 0.0;
  double valid_loss = 0.0;
  double valid_error = 0.0;
};

struct RunMetrics {
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;
  double best_valid_error = 1.0;
  std::size_t best_epoch = 0;
  double test_error = -1.0;
  double seconds = 0.0;
  std::uint64_t updates = 0;
};

struct EvalResult {
  double error = 0.0;
  double loss = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  /// error > 0.05
  bool failed = false;
};

inline constexpr double kFailThreshold = 0.05;

EvalResult evaluate_error(const Model& model, std::span<const EncodedSample> samples);
EvalResult evaluate_error(const Model& model, std::span<const QASample> samples);

/// Lowest validation error; ties go to the lowest seed. Throws EmptyRuns.
const RunMetrics& select_best_seed(std::span<const RunMetrics> runs);

struct TrainHooks {
  /// Called after every epoch; returning false stops training.
  std::function<bool(const EpochMetrics&)> on_epoch;
  /// Called when validation error improves, with the current weights.
  std::function<void(const Model&, const EpochMetrics&)> on_best;
  /// Test hooks around gradient clipping: `before_clip` may rewrite the
  /// batch gradient, `after_clip` sees what the optimizer will apply.
  std::function<void(ParameterSet&)> before_clip;
  std::function<void(ParameterSet&)> after_clip;
};

struct StepResult {
  double mean_loss = 0.0;
  std::size_t correct = 0;
  double grad_norm = 0.0;  // before clipping
};

/// Runs one optimizer update over `batch`: mean cross-entropy, backward
/// through the unrolled story, clip, step, re-zero the padding row.
/// Throws DivergedLoss on a non-finite loss.
StepResult train_step(Model& model, std::span<const EncodedSample* const> batch,
                      const TrainConfig& config, double lr, Adam& adam, Rng& dropout_rng,
                      const TrainHooks* hooks = nullptr);

/// Minibatch training with per-epoch shuffling from the run seed. On return
/// the model holds the weights from the best validation epoch.
RunMetrics train(Model& model, std::span<const QASample> train_set,
                 std::span<const QASample> valid_set, const TrainConfig& config,
                 const TrainHooks& hooks = {});

/// `epoch,split,loss,error,lr,seed` rows for the train and valid splits.
void write_metrics_csv(std::ostream& out, const RunMetrics& run, bool header = true);
std::string metrics_json(const RunMetrics& run);

}  // namespace entnet
