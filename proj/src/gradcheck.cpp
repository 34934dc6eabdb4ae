#include "entnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace entnet {

namespace {

double loss_of(const Model& model, const EncodedSample& sample) {
  Tape tape = Tape::inference();
  return tape.value(model.forward(tape, sample).loss)[0];
}

}  // namespace

GradCheckResult gradient_check(Model& model, const EncodedSample& sample,
                               const GradCheckOptions& options) {
  model.params().zero_grad();
  {
    Tape tape;
    const ForwardResult fwd = model.forward(tape, sample);
    tape.backward(fwd.loss);
  }

  GradCheckResult result;
  for (auto& p : model.params()) {
    if (p->frozen) continue;
    auto values = p->value.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = loss_of(model, sample);
      values[i] = saved - options.step;
      const double down = loss_of(model, sample);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel_err =
          abs_err / std::max({std::abs(analytic), std::abs(numeric), options.floor});
      ++result.checked;
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      if (rel_err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = rel_err;
        result.worst_parameter = p->name;
        result.worst_index = i;
      }
    }
  }
  model.params().zero_grad();
  return result;
}

GradCheckResult random_gradient_check(const RandomCheckSpec& spec,
                                      const GradCheckOptions& options) {
  Rng rng = make_stream(spec.seed, "gradcheck");
  const std::size_t story_length = 3;
  const std::size_t query_length = 3;

  Vocabulary vocab;
  for (int i = 0; i < 7; ++i) vocab.add("w" + std::to_string(i));

  ModelConfig config;
  config.memory = spec.variant == Variant::kGeneral ? MemoryConfig::general(spec.slots, spec.dim)
                                                    : MemoryConfig::simplified(spec.slots, spec.dim);
  if (spec.variant == Variant::kGeneral) config.memory.activation = spec.activation;
  config.output_activation = spec.activation;
  config.vocab_size = vocab.size();
  config.story_length = story_length;
  config.query_length = query_length;
  Model model(config, vocab);

  std::normal_distribution<double> gauss(0.0, 0.5);
  std::uniform_real_distribution<double> around_one(0.5, 1.5);
  std::uniform_real_distribution<double> slope(0.2, 1.2);
  for (auto& p : model.params()) {
    for (double& v : p->value.values()) {
      if (p->name.ends_with("_mask")) {
        v = around_one(rng);
      } else if (p->name.ends_with(".prelu")) {
        v = slope(rng);
      } else {
        v = gauss(rng);
      }
    }
  }
  model.zero_null_row();

  std::uniform_int_distribution<int> token(1, static_cast<int>(vocab.size()) - 1);
  std::uniform_int_distribution<std::size_t> length(1, story_length);
  EncodedSample sample;
  for (std::size_t t = 0; t < spec.steps; ++t) {
    std::vector<int> sentence(length(rng));
    for (int& w : sentence) w = token(rng);
    sample.context.push_back(pad_to_length(sentence, story_length));
  }
  std::vector<int> query(length(rng));
  for (int& w : query) w = token(rng);
  sample.query = pad_to_length(query, query_length);
  sample.answer = token(rng);
  return gradient_check(model, sample, options);
}

}  // namespace entnet
