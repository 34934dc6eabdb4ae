#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "entnet/config.hpp"
#include "entnet/model.hpp"
#include "entnet/training.hpp"
#include "entnet/world.hpp"

/// Glue between flat configs, datasets on disk and training runs. Shared by
/// the command-line tool, the acceptance harness and the Python module.
namespace entnet::pipeline {

enum class Task { kWorld, kBabi, kCbt };

Task parse_task(const std::string& name);
std::string task_name(Task task);

/// Fills every key the pipeline reads with its task default, so the result
/// is a complete description of the run. Throws BadConfig on unknown keys
/// or values.
FlatConfig resolve(const FlatConfig& user);

TrainConfig train_config(const FlatConfig& resolved, std::uint64_t seed);
/// Model shape for a vocabulary and padded lengths.
ModelConfig model_config(const FlatConfig& resolved, const Vocabulary& vocab,
                         std::size_t story_length, std::size_t query_length);

struct Splits {
  std::vector<QASample> train;
  std::vector<QASample> valid;
  std::vector<QASample> test;
};

/// Reads the train / valid / test sources named by the resolved config.
/// bAbI without a validation file holds out the last 10% of training stories.
Splits load_splits(const FlatConfig& resolved);

/// All samples of one dataset file in the task's format.
std::vector<QASample> load_samples(Task task, const std::string& path);

/// Builds the vocabulary and padded lengths over every split, then an
/// initialized model for `seed`.
Model build_model(const FlatConfig& resolved, const Splits& splits, std::uint64_t seed);

/// Stories with T drawn uniformly from [t_min, t_max] lines per story,
/// clamped to the minimal placement-and-facing prefix.
std::vector<world::WorldStory> generate_world(const world::WorldConfig& base, std::size_t count,
                                              int t_min, int t_max, std::uint64_t seed);
std::vector<QASample> world_samples(std::span<const world::WorldStory> stories);

struct SeedRun {
  RunMetrics metrics;
  EvalResult test;
};

struct Experiment {
  std::vector<SeedRun> runs;
  std::size_t best = 0;
  /// Weights of the selected seed at its best validation epoch.
  std::unique_ptr<Model> best_model;
};

/// Trains one model per seed in `seeds`, evaluates each on the test split
/// and keeps the seed with the lowest validation error. When `out_dir` is
/// set, writes `config.txt`, `seed<N>/metrics.{csv,json}`,
/// `seed<N>/checkpoint.bin` and `summary.json`.
Experiment run_experiment(const FlatConfig& resolved, const Splits& splits,
                          const std::filesystem::path& out_dir = {},
                          const std::function<void(std::uint64_t, const EpochMetrics&)>& progress = {});

std::vector<std::uint64_t> seeds(const FlatConfig& resolved);

}  // namespace entnet::pipeline
