// entnet: generate / train / eval / inspect / gradcheck.
//
// Exit codes: 0 success, 1 user error (bad flags, config, data), 2 internal
// error (including a failed gradient check).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "entnet/checkpoint.hpp"
#include "entnet/error.hpp"
#include "entnet/gradcheck.hpp"
#include "entnet/inspect.hpp"
#include "entnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace entnet;

namespace {

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

fs::path output_root() {
  const char* env = std::getenv("ENTNET_OUTPUT_ROOT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

bool is_user_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidRate:
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kUnknownToken:
    case ErrorCode::kTooLong:
    case ErrorCode::kUntiedKeys:
    case ErrorCode::kOffGrid:
    case ErrorCode::kMalformedLine:
    case ErrorCode::kNoBlank:
    case ErrorCode::kBadCandidateCount:
    case ErrorCode::kEmptyRuns:
    case ErrorCode::kBadCheckpoint:
    case ErrorCode::kBadConfig:
    case ErrorCode::kIo:
      return true;
    default:
      return false;
  }
}

// ---- generate ------------------------------------------------------------

struct GenerateArgs {
  std::string task = "world";
  int t_max = 10;
  int t_min = 0;
  std::size_t count = 12000;
  std::uint64_t seed = 1;
  int width = 10;
  int height = 10;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  if (a.task != "world") {
    fail(ErrorCode::kBadConfig, "only the world task has a generator; bAbI and CBT files are read as released");
  }
  world::WorldConfig base;
  base.width = a.width;
  base.height = a.height;
  base.lines = a.t_max;
  base.validate();
  const int t_min = a.t_min > 0 ? a.t_min : a.t_max;
  const auto stories = pipeline::generate_world(base, a.count, t_min, a.t_max, a.seed);

  fs::path out = a.out;
  if (out.empty()) {
    out = output_root() / ("world_T" + std::to_string(a.t_max) + "_seed" + std::to_string(a.seed) + ".txt");
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream file(out);
  if (!file) fail(ErrorCode::kIo, "cannot write " + out.string());
  world::write_dataset(file, stories,
                       {{"seed", std::to_string(a.seed)},
                        {"T", std::to_string(a.t_max)},
                        {"T_min", std::to_string(t_min)},
                        {"n", std::to_string(a.count)},
                        {"width", std::to_string(base.width)},
                        {"height", std::to_string(base.height)},
                        {"agents", std::to_string(base.agents)},
                        {"max_move", std::to_string(base.max_move)}});
  std::cout << "wrote " << a.count << " stories to " << out.string() << '\n';
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::string out;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  FlatConfig user;
  if (!a.config.empty()) user = FlatConfig::load(a.config);
  for (const auto& [k, v] : a.flags) user.set(k, v);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kBadConfig, "--set expects key=value, got '" + kv + "'");
    user.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  const FlatConfig resolved = pipeline::resolve(user);

  fs::path out = a.out;
  if (out.empty()) {
    std::string name = resolved.get_string("task", "run");
    if (resolved.has("task_id")) name += "_qa" + resolved.get_string("task_id", "");
    out = output_root() / name;
  }
  const pipeline::Splits splits = pipeline::load_splits(resolved);
  std::cerr << "train " << splits.train.size() << " / valid " << splits.valid.size() << " / test "
            << splits.test.size() << " samples -> " << out.string() << '\n';
  auto progress = [&](std::uint64_t seed, const EpochMetrics& m) {
    if (a.quiet) return;
    std::fprintf(stderr, "seed %llu epoch %zu lr %.6g train loss %.4f err %.4f valid err %.4f\n",
                 static_cast<unsigned long long>(seed), m.epoch, m.lr, m.train_loss, m.train_error,
                 m.valid_error);
  };
  const pipeline::Experiment exp = pipeline::run_experiment(resolved, splits, out, progress);
  for (const auto& r : exp.runs) {
    std::printf("seed %llu: best valid error %.4f at epoch %zu, test error %.4f\n",
                static_cast<unsigned long long>(r.metrics.seed), r.metrics.best_valid_error,
                r.metrics.best_epoch, r.metrics.test_error);
  }
  const auto& best = exp.runs[exp.best].metrics;
  std::printf("selected seed %llu: test error %.4f\n", static_cast<unsigned long long>(best.seed),
              best.test_error);
  return 0;
}

// ---- eval ----------------------------------------------------------------

std::string task_label(const nlohmann::json& extra, const std::string& path) {
  const std::string task = extra.value("task", std::string("world"));
  const int id = extra.value("task_id", 0);
  if (task == "babi" && id > 0) return "babi " + std::to_string(id);
  return task + " (" + fs::path(path).parent_path().filename().string() + ")";
}

int run_eval(const std::vector<std::string>& checkpoints, const std::vector<std::string>& data,
             const std::string& json_out) {
  if (checkpoints.size() != data.size()) {
    fail(ErrorCode::kBadConfig, "give one --data file per --checkpoint");
  }
  nlohmann::json rows = nlohmann::json::array();
  std::size_t failed = 0;
  double total = 0.0;
  std::printf("%-28s %10s %8s %8s\n", "Task", "Samples", "Error", "Failed");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const LoadedCheckpoint ck = load_checkpoint(checkpoints[i]);
    const auto task = pipeline::parse_task(ck.extra.value("task", std::string("world")));
    const auto samples = pipeline::load_samples(task, data[i]);
    const EvalResult r = evaluate_error(ck.model, samples);
    const std::string label = task_label(ck.extra, checkpoints[i]);
    std::printf("%-28s %10zu %8.4f %8s\n", label.c_str(), r.total, r.error, r.failed ? "yes" : "no");
    failed += r.failed ? 1 : 0;
    total += r.error;
    rows.push_back({{"task", label}, {"checkpoint", checkpoints[i]}, {"data", data[i]},
                    {"error", r.error}, {"samples", r.total}, {"failed", r.failed}});
  }
  const double mean = checkpoints.empty() ? 0.0 : total / static_cast<double>(checkpoints.size());
  std::printf("%-28s %10s %8.4f %8zu\n", "Mean error / failed tasks", "", mean, failed);
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << nlohmann::json{{"rows", rows}, {"mean_error", mean}, {"failed_tasks", failed}}.dump(2) << '\n';
  }
  return 0;
}

// ---- inspect -------------------------------------------------------------

int run_inspect(const std::string& checkpoint, const std::string& data, std::size_t index,
                std::size_t k, bool json) {
  const LoadedCheckpoint ck = load_checkpoint(checkpoint);
  const auto task = pipeline::parse_task(ck.extra.value("task", std::string("world")));
  const auto samples = pipeline::load_samples(task, data);
  if (index >= samples.size()) {
    fail(ErrorCode::kBadConfig, "sample index " + std::to_string(index) + " out of range (" +
                                    std::to_string(samples.size()) + " samples)");
  }
  const EncodedSample e = ck.model.encode_sample(samples[index]);
  const auto states = ck.model.trace(e);
  const Tensor& slots = states.empty() ? ck.model.params().at("memory.keys").value : states.back().slots;
  const AffinityReport report =
      slot_nearest_words(slots, ck.model.output_weights(), ck.model.vocab(), k, ck.model.slot_labels(e));
  if (json) {
    std::cout << report_json(report) << '\n';
    return 0;
  }
  const Prediction p = ck.model.predict(e);
  for (const auto& sentence : samples[index].context) {
    std::string line;
    for (const auto& t : sentence) line += (line.empty() ? "" : " ") + t;
    std::cout << "  " << line << '\n';
  }
  std::string q;
  for (const auto& t : samples[index].query) q += (q.empty() ? "" : " ") + t;
  std::cout << "  " << q << "\n  answer: " << samples[index].answer << "  predicted: " << p.token
            << "\n\n"
            << format_report(report);
  return 0;
}

// ---- gradcheck -----------------------------------------------------------

int run_gradcheck(const RandomCheckSpec& spec, double tol) {
  const GradCheckResult r = random_gradient_check(spec);
  const bool pass = r.max_relative_error < tol;
  std::printf("gradcheck d=%zu m=%zu T=%zu: %zu scalars, max relative error %.3e (%s[%zu]), %s\n",
              spec.dim, spec.slots, spec.steps, r.checked, r.max_relative_error,
              r.worst_parameter.c_str(), r.worst_index, pass ? "PASS" : "FAIL");
  return pass ? 0 : kInternalError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent entity network: data generation, training and analysis"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic world-model dataset");
  generate->add_option("--task", gen.task, "Dataset family (world)")->capture_default_str();
  generate->add_option("--T", gen.t_max, "Statement lines per story (maximum when --T-min is set)")
      ->capture_default_str();
  generate->add_option("--T-min", gen.t_min, "Minimum lines; T is drawn uniformly per story");
  generate->add_option("--n", gen.count, "Number of stories")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  generate->add_option("--width", gen.width, "Grid width")->capture_default_str();
  generate->add_option("--height", gen.height, "Grid height")->capture_default_str();
  generate->add_option("--out", gen.out, "Output file (default $ENTNET_OUTPUT_ROOT/world_T<T>_seed<seed>.txt)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one model per seed and keep the best");
  train_cmd->add_option("--config", tr.config, "Flat key = value config file");
  train_cmd->add_option("--set", tr.sets, "Override any config key (key=value, repeatable)");
  train_cmd->add_option("--out", tr.out, "Run directory (default $ENTNET_OUTPUT_ROOT/<task>)");
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch progress");
  // Shorthand flags for the most common keys; they override the file.
  const std::vector<std::pair<std::string, std::string>> shorthand = {
      {"--task", "task"},       {"--task-id", "task_id"}, {"--protocol", "protocol"},
      {"--data-dir", "data_dir"}, {"--data", "data"},     {"--split", "split"},
      {"--train", "train"},     {"--valid", "valid"},     {"--test", "test"},
      {"--seeds", "seeds"},     {"--epochs", "epochs"},   {"--dim", "dim"},
      {"--slots", "slots"},     {"--lr", "lr"}};
  std::map<std::string, std::string> shorthand_values;
  for (const auto& [flag, key] : shorthand) {
    train_cmd->add_option(flag, shorthand_values[key], "Sets config key '" + key + "'");
  }

  std::vector<std::string> eval_ckpt;
  std::vector<std::string> eval_data;
  std::string eval_json;
  auto* eval = app.add_subcommand("eval", "Error table for trained checkpoints");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file (repeatable)")->required();
  eval->add_option("--data", eval_data, "Dataset file for the matching checkpoint (repeatable)")->required();
  eval->add_option("--json", eval_json, "Also write the table as JSON");

  std::string insp_ckpt;
  std::string insp_data;
  std::size_t insp_index = 0;
  std::size_t insp_k = 2;
  bool insp_json = false;
  auto* inspect = app.add_subcommand("inspect", "Nearest vocabulary words for each memory slot");
  inspect->add_option("--checkpoint", insp_ckpt, "Checkpoint file")->required();
  inspect->add_option("--data", insp_data, "Dataset file holding the story")->required();
  inspect->add_option("--index", insp_index, "Sample index in the file")->capture_default_str();
  inspect->add_option("-k,--k", insp_k, "Neighbors per slot")->capture_default_str();
  inspect->add_flag("--json", insp_json, "Emit JSON instead of a table");

  RandomCheckSpec spec;
  spec.dim = 8;
  spec.slots = 3;
  std::string variant = "general";
  std::string activation = "prelu";
  double tol = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  gradcheck->add_option("--d", spec.dim, "Slot dimension")->capture_default_str();
  gradcheck->add_option("--m", spec.slots, "Slot count")->capture_default_str();
  gradcheck->add_option("--T", spec.steps, "Story length")->capture_default_str();
  gradcheck->add_option("--variant", variant, "general or simplified")
      ->check(CLI::IsMember({"general", "simplified"}))
      ->capture_default_str();
  gradcheck->add_option("--activation", activation, "prelu or identity")
      ->check(CLI::IsMember({"prelu", "identity"}))
      ->capture_default_str();
  gradcheck->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  gradcheck->add_option("--tol", tol, "Pass threshold on the max relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUserError;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train_cmd) {
      for (const auto& [key, value] : shorthand_values) {
        if (!value.empty()) tr.flags[key] = value;
      }
      return run_train(tr);
    }
    if (*eval) return run_eval(eval_ckpt, eval_data, eval_json);
    if (*inspect) return run_inspect(insp_ckpt, insp_data, insp_index, insp_k, insp_json);
    if (*gradcheck) {
      spec.variant = variant == "general" ? Variant::kGeneral : Variant::kSimplified;
      spec.activation = activation == "prelu" ? Activation::kPrelu : Activation::kIdentity;
      return run_gradcheck(spec, tol);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return is_user_error(e.code()) ? kUserError : kInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}
