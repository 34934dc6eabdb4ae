#include <cmath>
#include <sstream>

#include "doctest.h"
#include "entnet/error.hpp"
#include "entnet/training.hpp"
#include "world_fixture.hpp"

using namespace entnet;
using entnet::testing::world_model;
using entnet::testing::world_samples;

namespace {

bool same_weights(const Model& a, const Model& b) {
  auto ib = b.params().begin();
  for (const auto& p : a.params()) {
    if (p->value != (*ib)->value) return false;
    ++ib;
  }
  return true;
}

}  // namespace

TEST_CASE("initialization") {
  const Model a = world_model(5, 20, 3);
  const Model b = world_model(5, 20, 3);
  const Model c = world_model(5, 20, 4);
  CHECK(same_weights(a, b));
  CHECK_FALSE(same_weights(a, c));
  for (double v : a.params().at("memory.prelu").value.values()) CHECK(v == 1.0);
  for (double v : a.params().at("output.prelu").value.values()) CHECK(v == 1.0);
  for (double v : a.params().at("encoder.story_mask").value.values()) CHECK(v == 1.0);
  for (double v : a.params().at("encoder.query_mask").value.values()) CHECK(v == 1.0);
  for (double v : a.params().at("encoder.embedding").value.row(kNullIndex)) CHECK(v == 0.0);

  // Sample standard deviation of the Gaussian weights.
  const auto& U = a.params().at("memory.U").value;
  double sum = 0.0, sq = 0.0;
  for (double v : U.values()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(U.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  CHECK(sd == doctest::Approx(0.1).epsilon(0.15));
}

TEST_CASE("learning-rate schedules") {
  const TrainConfig babi = TrainConfig::babi();
  CHECK(lr_schedule(babi, 0, 0) == 0.01);
  CHECK(lr_schedule(babi, 24, 0) == 0.01);
  CHECK(lr_schedule(babi, 25, 0) == 0.005);
  CHECK(lr_schedule(babi, 199, 0) == 0.01 / 128);
  CHECK(lr_schedule(babi, 200, 0) == 0.01 / 256);
  CHECK(lr_schedule(babi, 400, 0) == 0.01 / 256);

  const TrainConfig world = TrainConfig::world();
  CHECK(lr_schedule(world, 3, 9999) == 0.01);
  CHECK(lr_schedule(world, 3, 10000) == 0.005);
  CHECK(world.epochs == 200);
  CHECK(world.patience == 25);

  const TrainConfig cbt = TrainConfig::cbt();
  CHECK(cbt.optimizer == OptimizerKind::kSgd);
  CHECK(lr_schedule(cbt, 0, 0) == 0.001);
  CHECK(lr_schedule(cbt, 1000, 123456) == 0.001);
  CHECK(cbt.dropout == 0.5);
  CHECK(babi.batch_size == 32);
  CHECK(babi.clip == 40.0);
}

TEST_CASE("parameter count formula") {
  const Model general = world_model(5, 20, 1);
  CHECK(parameter_count(general.config()) == general.params().scalar_count());
  const std::size_t V = general.vocab().size();
  // |V| d + K d + Kq d + m d + 3 d^2 + d + d^2 + |V| d + d
  CHECK(parameter_count(general.config()) == V * 20 + 4 * 20 + 4 * 20 + 5 * 20 + 3 * 400 + 20 + 400 + V * 20 + 20);

  const Model simple = world_model(3, 6, 1, Variant::kSimplified);
  CHECK(parameter_count(simple.config()) == simple.params().scalar_count());
  CHECK(simple.params().find("memory.U") == nullptr);
}

TEST_CASE("evaluate_error and the failure threshold") {
  // A model that always answers the same token: q = e_a, r_target = e_a.
  Model model = world_model(2, 4, 1);
  for (auto& p : model.params()) {
    if (!p->name.ends_with("_mask") && !p->name.ends_with(".prelu")) p->value.fill(0.0);
  }
  for (std::size_t j = 0; j < 2; ++j) model.params().at("memory.keys").value.at(j, 1) = 1.0;
  const auto samples = world_samples(10, 5);
  const int where = model.vocab().index("where");
  const int target = model.vocab().index("(1,1)");
  model.params().at("encoder.embedding").value.at(static_cast<std::size_t>(where), 0) = 1.0;
  model.params().at("output.R").value.at(static_cast<std::size_t>(target), 0) = 1.0;

  std::vector<QASample> set;
  for (int i = 0; i < 20; ++i) {
    QASample s = samples[static_cast<std::size_t>(i)];
    s.answer = i == 0 ? "(2,2)" : "(1,1)";
    set.push_back(s);
  }
  const EvalResult edge = evaluate_error(model, set);
  CHECK(edge.error == 0.05);
  CHECK_FALSE(edge.failed);
  set[1].answer = "(3,3)";
  CHECK(evaluate_error(model, set).failed);
  for (auto& s : set) s.answer = "(1,1)";
  const EvalResult perfect = evaluate_error(model, set);
  CHECK(perfect.error == 0.0);
  CHECK_FALSE(perfect.failed);
  for (std::size_t i = 0; i < 10; ++i) set[i].answer = "(4,4)";
  CHECK(evaluate_error(model, set).error == 0.5);
}

TEST_CASE("select_best_seed") {
  auto run = [](std::uint64_t seed, double err) {
    RunMetrics r;
    r.seed = seed;
    r.best_valid_error = err;
    return r;
  };
  const std::vector<RunMetrics> one{run(4, 0.3)};
  CHECK(select_best_seed(one).seed == 4);
  const std::vector<RunMetrics> three{run(1, 0.1), run(2, 0.02), run(3, 0.3)};
  CHECK(select_best_seed(three).seed == 2);
  const std::vector<RunMetrics> tie{run(9, 0.1), run(5, 0.1)};
  CHECK(select_best_seed(tie).seed == 5);
  CHECK_THROWS_AS(select_best_seed(std::span<const RunMetrics>{}), Error);
}

TEST_CASE("clipping is applied before the optimizer step") {
  Model model = world_model(2, 4, 1);
  const auto samples = world_samples(1, 1);
  const EncodedSample e = model.encode_sample(samples[0]);
  const EncodedSample* batch[] = {&e};
  TrainConfig config = TrainConfig::world();
  Adam adam;
  Rng rng(1);
  double seen = -1.0;
  TrainHooks hooks;
  hooks.before_clip = [](ParameterSet& params) {
    params.zero_grad();
    params.at("memory.W").grad[0] = 48.0;
    params.at("memory.V").grad[0] = 64.0;  // global norm 80
  };
  hooks.after_clip = [&](ParameterSet& params) { seen = global_grad_norm(params); };
  const StepResult r = train_step(model, batch, config, 0.01, adam, rng, &hooks);
  CHECK(r.grad_norm == doctest::Approx(80.0));
  CHECK(seen == doctest::Approx(40.0));
  CHECK(model.params().at("memory.W").grad[0] == doctest::Approx(24.0));
  CHECK(model.params().at("memory.V").grad[0] == doctest::Approx(32.0));
}

TEST_CASE("overfitting ten world-model samples") {
  Model model = world_model(5, 20, 1);
  auto samples = world_samples(5, 11);
  REQUIRE(samples.size() == 10);
  TrainConfig config = TrainConfig::world();
  config.epochs = 500;
  config.patience = 0;
  bool reached = false;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochMetrics& m) {
    reached = m.train_error == 0.0;
    return !reached;
  };
  train(model, samples, samples, config, hooks);
  CHECK(reached);
  CHECK(evaluate_error(model, samples).error == 0.0);
  for (double v : model.params().at("encoder.embedding").value.row(kNullIndex)) CHECK(v == 0.0);
}

TEST_CASE("training is bitwise reproducible") {
  const auto samples = world_samples(20, 2);
  const auto valid = world_samples(5, 3);
  TrainConfig config = TrainConfig::world();
  config.epochs = 3;
  Model a = world_model(3, 8, 1);
  Model b = world_model(3, 8, 1);
  const RunMetrics ra = train(a, samples, valid, config);
  const RunMetrics rb = train(b, samples, valid, config);
  CHECK(same_weights(a, b));
  REQUIRE(ra.epochs.size() == rb.epochs.size());
  for (std::size_t i = 0; i < ra.epochs.size(); ++i) CHECK(ra.epochs[i].train_loss == rb.epochs[i].train_loss);

  std::ostringstream csv;
  write_metrics_csv(csv, ra);
  CHECK(csv.str().starts_with("epoch,split,loss,error,lr,seed\n"));
  CHECK(metrics_json(ra).find("best_valid_error") != std::string::npos);
}

TEST_CASE("loss on a fixed batch falls over the first 50 steps") {
  double first = 0.0;
  double last = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Model model = world_model(5, 20, seed);
    const auto samples = world_samples(16, seed + 100);
    std::vector<EncodedSample> encoded;
    for (const auto& s : samples) encoded.push_back(model.encode_sample(s));
    std::vector<const EncodedSample*> batch;
    for (const auto& e : encoded) batch.push_back(&e);
    const TrainConfig config = TrainConfig::world();
    Adam adam;
    Rng rng(seed);
    for (int step = 0; step < 50; ++step) {
      const StepResult r = train_step(model, batch, config, 0.01, adam, rng);
      if (step == 0) first += r.mean_loss;
      if (step == 49) last += r.mean_loss;
    }
    for (double v : model.params().at("encoder.embedding").value.row(kNullIndex)) CHECK(v == 0.0);
  }
  CHECK(last < first);
}

TEST_CASE("a non-finite loss aborts the step") {
  Model model = world_model(2, 4, 1);
  model.params().at("output.R").value.fill(std::nan(""));
  const auto samples = world_samples(1, 1);
  const EncodedSample e = model.encode_sample(samples[0]);
  const EncodedSample* batch[] = {&e};
  Adam adam;
  Rng rng(1);
  try {
    train_step(model, batch, TrainConfig::world(), 0.01, adam, rng);
    FAIL("expected DivergedLoss");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kDivergedLoss);
  }
}
