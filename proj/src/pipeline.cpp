#include "entnet/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "entnet/babi.hpp"
#include "entnet/cbt.hpp"
#include "entnet/checkpoint.hpp"
#include "entnet/error.hpp"

namespace entnet::pipeline {

namespace fs = std::filesystem;

Task parse_task(const std::string& name) {
  if (name == "world") return Task::kWorld;
  if (name == "babi") return Task::kBabi;
  if (name == "cbt") return Task::kCbt;
  fail(ErrorCode::kBadConfig, "unknown task '" + name + "' (world, babi, cbt)");
}

std::string task_name(Task task) {
  switch (task) {
    case Task::kWorld: return "world";
    case Task::kBabi: return "babi";
    case Task::kCbt: return "cbt";
  }
  return "world";
}

namespace {

// Every key the pipeline understands. Data-source keys have no default and
// are only kept when given.
const std::set<std::string> kKnownKeys = {
    "task",      "dim",        "slots",       "variant",      "activation", "output_activation",
    "normalize", "keys",       "key_tokens",  "masks",        "dual_encoding", "dropout",
    "optimizer", "lr",         "schedule",    "halve_every",  "halve_until",   "batch_size",
    "clip",      "epochs",     "patience",    "seeds",        "train",         "valid",
    "test",      "data",       "split",       "data_dir",     "task_id",       "valid_fraction",
    "protocol"};

void require_one_of(const FlatConfig& c, const std::string& key,
                    std::initializer_list<const char*> allowed) {
  const std::string v = *c.get(key);
  for (const char* a : allowed) {
    if (v == a) return;
  }
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  fail(ErrorCode::kBadConfig, key + " = '" + v + "' (expected one of " + list + ")");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

FlatConfig resolve(const FlatConfig& user) {
  for (const auto& [k, v] : user.values()) {
    if (!kKnownKeys.contains(k)) fail(ErrorCode::kBadConfig, "unknown config key '" + k + "'");
  }
  const Task task = parse_task(user.get_string("task", "world"));

  FlatConfig d;
  d.set("task", task_name(task));
  d.set("protocol", task == Task::kBabi ? "babi10k" : task_name(task));
  d.set("seeds", "1");
  d.set("masks", "learned");
  d.set("dual_encoding", "false");
  d.set("keys", "free");
  d.set("batch_size", "32");
  d.set("clip", "40");
  d.set("epochs", "200");
  d.set("patience", "0");
  d.set("halve_until", "200");
  switch (task) {
    case Task::kWorld:
      d.set("dim", "20");
      d.set("slots", "5");
      d.set("variant", "general");
      d.set("activation", "prelu");
      d.set("output_activation", "prelu");
      d.set("normalize", "true");
      d.set("dropout", "0");
      d.set("optimizer", "adam");
      d.set("lr", "0.01");
      d.set("schedule", "update");
      d.set("halve_every", "10000");
      d.set("patience", "25");
      break;
    case Task::kBabi:
      d.set("dim", "100");
      d.set("slots", "20");
      d.set("variant", "general");
      d.set("activation", "prelu");
      d.set("output_activation", "prelu");
      d.set("normalize", "true");
      d.set("dropout", "0");
      d.set("optimizer", "adam");
      d.set("lr", "0.01");
      d.set("schedule", "epoch");
      d.set("halve_every", "25");
      d.set("valid_fraction", "0.1");
      d.set("seeds", "1,2,3");
      break;
    case Task::kCbt:
      d.set("dim", "100");
      d.set("slots", "10");
      d.set("variant", "simplified");
      d.set("activation", "identity");
      d.set("output_activation", "identity");
      d.set("normalize", "false");
      d.set("keys", "candidates");
      d.set("dual_encoding", "true");
      d.set("dropout", "0.5");
      d.set("optimizer", "sgd");
      d.set("lr", "0.001");
      d.set("schedule", "constant");
      d.set("halve_every", "1");
      break;
  }
  d.merge(user);

  require_one_of(d, "protocol", {"world", "babi10k", "babi1k", "cbt"});
  if ((task == Task::kBabi) != d.get_string("protocol", "").starts_with("babi") ||
      (task != Task::kBabi && d.get_string("protocol", "") != task_name(task))) {
    fail(ErrorCode::kBadConfig, "protocol '" + d.get_string("protocol", "") + "' does not match task '" +
                                    task_name(task) + "'");
  }
  require_one_of(d, "variant", {"general", "simplified"});
  require_one_of(d, "activation", {"prelu", "identity"});
  require_one_of(d, "output_activation", {"prelu", "identity"});
  require_one_of(d, "keys", {"free", "tied", "candidates"});
  require_one_of(d, "masks", {"learned", "bow"});
  require_one_of(d, "optimizer", {"adam", "sgd"});
  require_one_of(d, "schedule", {"epoch", "update", "constant"});
  if (d.get_string("variant", "") == "simplified" &&
      (d.get_string("activation", "") != "identity" || d.get_bool("normalize", false))) {
    fail(ErrorCode::kBadConfig, "variant = simplified needs activation = identity and normalize = false");
  }
  if (d.get_int("dim", 0) <= 0 || d.get_int("slots", 0) <= 0) {
    fail(ErrorCode::kBadConfig, "dim and slots must be positive");
  }
  if (d.get_string("keys", "") == "tied" && d.get_list("key_tokens").size() !=
                                                static_cast<std::size_t>(d.get_int("slots", 0))) {
    fail(ErrorCode::kBadConfig, "keys = tied needs one key_tokens entry per slot");
  }
  if (d.get_int("halve_every", 1) <= 0) fail(ErrorCode::kBadConfig, "halve_every must be positive");
  d.set("lr", fmt(d.get_double("lr", 0.01)));
  d.set("dropout", fmt(d.get_double("dropout", 0.0)));
  if (seeds(d).empty()) fail(ErrorCode::kBadConfig, "seeds must list at least one seed");
  return d;
}

std::vector<std::uint64_t> seeds(const FlatConfig& resolved) {
  std::vector<std::uint64_t> out;
  for (const auto& s : resolved.get_list("seeds")) {
    try {
      out.push_back(std::stoull(s));
    } catch (const std::exception&) {
      fail(ErrorCode::kBadConfig, "seed '" + s + "' is not a non-negative integer");
    }
  }
  return out;
}

TrainConfig train_config(const FlatConfig& c, std::uint64_t seed) {
  TrainConfig t;
  t.optimizer = c.get_string("optimizer", "adam") == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  t.lr = c.get_double("lr", t.lr);
  const std::string schedule = c.get_string("schedule", "epoch");
  t.schedule = schedule == "epoch"    ? Schedule::kHalveByEpoch
               : schedule == "update" ? Schedule::kHalveByUpdate
                                      : Schedule::kConstant;
  t.halve_every = static_cast<std::size_t>(c.get_int("halve_every", 25));
  t.halve_until = static_cast<std::size_t>(c.get_int("halve_until", 200));
  t.batch_size = static_cast<std::size_t>(c.get_int("batch_size", 32));
  t.clip = c.get_double("clip", kClipThreshold);
  t.epochs = static_cast<std::size_t>(c.get_int("epochs", 200));
  t.patience = static_cast<std::size_t>(c.get_int("patience", 0));
  t.dropout = c.get_double("dropout", 0.0);
  t.seed = seed;
  return t;
}

ModelConfig model_config(const FlatConfig& c, const Vocabulary& vocab, std::size_t story_length,
                         std::size_t query_length) {
  const auto slots = static_cast<std::size_t>(c.get_int("slots", 5));
  const auto dim = static_cast<std::size_t>(c.get_int("dim", 20));
  ModelConfig m;
  m.memory = c.get_string("variant", "general") == "simplified" ? MemoryConfig::simplified(slots, dim)
                                                                : MemoryConfig::general(slots, dim);
  if (m.memory.variant == Variant::kGeneral) {
    m.memory.activation =
        c.get_string("activation", "prelu") == "prelu" ? Activation::kPrelu : Activation::kIdentity;
    m.memory.normalize = c.get_bool("normalize", true);
  }
  m.output_activation =
      c.get_string("output_activation", "prelu") == "prelu" ? Activation::kPrelu : Activation::kIdentity;
  const std::string keys = c.get_string("keys", "free");
  if (keys == "tied") {
    m.keys = KeyMode::kTiedTokens;
    m.key_tokens = vocab.indices(c.get_list("key_tokens"));
  } else if (keys == "candidates") {
    m.keys = KeyMode::kTiedCandidates;
    m.output = OutputMode::kDirect;
  }
  m.memory.keys_tied = m.keys != KeyMode::kFree;
  m.vocab_size = vocab.size();
  m.story_length = story_length;
  m.query_length = query_length;
  m.dual_encoding = c.get_bool("dual_encoding", false);
  m.freeze_masks = c.get_string("masks", "learned") == "bow";
  m.dropout = c.get_double("dropout", 0.0);
  return m;
}

std::vector<world::WorldStory> generate_world(const world::WorldConfig& base, std::size_t count,
                                              int t_min, int t_max, std::uint64_t seed) {
  if (t_min > t_max) fail(ErrorCode::kBadConfig, "T range is empty");
  Rng rng = make_stream(seed, "generator");
  std::uniform_int_distribution<int> pick_t(t_min, t_max);
  std::vector<world::WorldStory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    world::WorldConfig c = base;
    c.lines = std::max(pick_t(rng), 2 * base.agents);
    out.push_back(world::generate_world_story(c, rng));
  }
  return out;
}

std::vector<QASample> world_samples(std::span<const world::WorldStory> stories) {
  std::vector<QASample> out;
  out.reserve(2 * stories.size());
  for (const auto& s : stories) {
    for (auto& q : world::to_samples(s)) out.push_back(std::move(q));
  }
  return out;
}

namespace {

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return in;
}

std::vector<world::WorldStory> read_world(const std::string& path) {
  auto in = open(path);
  return world::read_dataset(in).stories;
}

std::vector<QASample> read_cbt(const std::string& path) {
  auto in = open(path);
  std::vector<QASample> out;
  for (const auto& raw : cbt::parse_cbt(in)) out.push_back(cbt::build_cbt_sample(raw));
  return out;
}

// `qa<id>_*_<split>.txt` inside dir, or empty.
std::string find_babi(const fs::path& dir, int id, const std::string& split) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<std::string> hits;
  const std::string prefix = "qa" + std::to_string(id) + "_";
  const std::string suffix = "_" + split + ".txt";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.starts_with(prefix) && name.ends_with(suffix)) hits.push_back(e.path().string());
  }
  std::sort(hits.begin(), hits.end());
  return hits.empty() ? std::string() : hits.front();
}

Splits load_babi(const FlatConfig& c) {
  std::string train = c.get_string("train", "");
  std::string valid = c.get_string("valid", "");
  std::string test = c.get_string("test", "");
  int id = static_cast<int>(c.get_int("task_id", 0));
  if (const auto dir = c.get("data_dir")) {
    if (id <= 0) fail(ErrorCode::kBadConfig, "data_dir needs task_id");
    if (train.empty()) train = find_babi(*dir, id, "train");
    if (valid.empty()) valid = find_babi(*dir, id, "valid");
    if (test.empty()) test = find_babi(*dir, id, "test");
  }
  if (train.empty()) fail(ErrorCode::kBadConfig, "no bAbI training file (set train or data_dir)");
  if (id <= 0) id = babi::task_id_from_filename(train);

  Splits s;
  auto in = open(train);
  auto stories = babi::parse_stories(in);
  if (valid.empty()) {
    const double fraction = c.get_double("valid_fraction", 0.1);
    const auto held = static_cast<std::size_t>(static_cast<double>(stories.size()) * fraction);
    const std::vector<babi::Story> tail(stories.end() - static_cast<std::ptrdiff_t>(held), stories.end());
    stories.resize(stories.size() - held);
    s.valid = babi::to_samples(tail, id);
  } else {
    auto vin = open(valid);
    s.valid = babi::parse_babi(vin, id);
  }
  s.train = babi::to_samples(stories, id);
  if (!test.empty()) {
    auto tin = open(test);
    s.test = babi::parse_babi(tin, id);
  }
  return s;
}

Splits load_world(const FlatConfig& c) {
  Splits s;
  if (const auto data = c.get("data")) {
    const auto stories = read_world(*data);
    auto counts = c.get_list("split");
    if (counts.size() != 3) fail(ErrorCode::kBadConfig, "data needs split = train,valid,test counts");
    std::size_t n[3];
    for (int i = 0; i < 3; ++i) n[i] = static_cast<std::size_t>(std::stoull(counts[static_cast<std::size_t>(i)]));
    if (n[0] + n[1] + n[2] > stories.size()) {
      fail(ErrorCode::kBadConfig, "split asks for " + std::to_string(n[0] + n[1] + n[2]) +
                                      " stories but the file has " + std::to_string(stories.size()));
    }
    const std::span<const world::WorldStory> all(stories);
    s.train = world_samples(all.subspan(0, n[0]));
    s.valid = world_samples(all.subspan(n[0], n[1]));
    s.test = world_samples(all.subspan(n[0] + n[1], n[2]));
    return s;
  }
  if (const auto p = c.get("train")) s.train = world_samples(read_world(*p));
  if (const auto p = c.get("valid")) s.valid = world_samples(read_world(*p));
  if (const auto p = c.get("test")) s.test = world_samples(read_world(*p));
  return s;
}

Splits load_cbt(const FlatConfig& c) {
  Splits s;
  if (const auto p = c.get("train")) s.train = read_cbt(*p);
  if (const auto p = c.get("valid")) s.valid = read_cbt(*p);
  if (const auto p = c.get("test")) s.test = read_cbt(*p);
  return s;
}

}  // namespace

std::vector<QASample> load_samples(Task task, const std::string& path) {
  switch (task) {
    case Task::kWorld: return world_samples(read_world(path));
    case Task::kBabi: return babi::parse_babi_file(path);
    case Task::kCbt: return read_cbt(path);
  }
  return {};
}

Splits load_splits(const FlatConfig& c) {
  Splits s;
  switch (parse_task(c.get_string("task", "world"))) {
    case Task::kWorld: s = load_world(c); break;
    case Task::kBabi: s = load_babi(c); break;
    case Task::kCbt: s = load_cbt(c); break;
  }
  if (s.train.empty()) fail(ErrorCode::kEmptyCorpus, "training split is empty");
  return s;
}

Model build_model(const FlatConfig& c, const Splits& splits, std::uint64_t seed) {
  std::vector<QASample> all;
  all.reserve(splits.train.size() + splits.valid.size() + splits.test.size());
  for (const auto* part : {&splits.train, &splits.valid, &splits.test}) {
    all.insert(all.end(), part->begin(), part->end());
  }
  Vocabulary vocab = build_vocab(all);
  ModelConfig config = model_config(c, vocab, max_statement_length(all), max_query_length(all));
  Model model(config, std::move(vocab));
  Rng rng = make_stream(seed, "init");
  init_model(model, rng);
  return model;
}

Experiment run_experiment(const FlatConfig& c, const Splits& splits, const fs::path& out_dir,
                          const std::function<void(std::uint64_t, const EpochMetrics&)>& progress) {
  const bool write = !out_dir.empty();
  if (write) {
    fs::create_directories(out_dir);
    std::ofstream cfg(out_dir / "config.txt");
    c.write(cfg);
  }
  const std::span<const QASample> valid =
      splits.valid.empty() ? std::span<const QASample>(splits.train) : std::span<const QASample>(splits.valid);

  Experiment exp;
  std::vector<RunMetrics> metrics;
  for (const std::uint64_t seed : seeds(c)) {
    Model model = build_model(c, splits, seed);
    const fs::path seed_dir = out_dir / ("seed" + std::to_string(seed));
    if (write) fs::create_directories(seed_dir);

    TrainHooks hooks;
    if (progress) {
      hooks.on_epoch = [&](const EpochMetrics& m) {
        progress(seed, m);
        return true;
      };
    }
    if (write) {
      hooks.on_best = [&](const Model& best, const EpochMetrics& m) {
        save_checkpoint((seed_dir / "checkpoint.bin").string(), best,
                        {{"task", c.get_string("task", "")},
                         {"task_id", c.get_int("task_id", 0)},
                         {"seed", seed},
                         {"epoch", m.epoch},
                         {"valid_error", m.valid_error}});
      };
    }
    SeedRun run;
    run.metrics = train(model, splits.train, valid, train_config(c, seed), hooks);
    if (!splits.test.empty()) {
      run.test = evaluate_error(model, splits.test);
      run.metrics.test_error = run.test.error;
    }
    if (write) {
      std::ofstream csv(seed_dir / "metrics.csv");
      write_metrics_csv(csv, run.metrics);
      std::ofstream json(seed_dir / "metrics.json");
      json << metrics_json(run.metrics) << '\n';
    }
    metrics.push_back(run.metrics);
    exp.runs.push_back(std::move(run));
    const RunMetrics& best = select_best_seed(metrics);
    if (best.seed == seed) exp.best_model = std::make_unique<Model>(std::move(model));
  }
  const std::uint64_t best_seed = select_best_seed(metrics).seed;
  for (std::size_t i = 0; i < exp.runs.size(); ++i) {
    if (exp.runs[i].metrics.seed == best_seed) exp.best = i;
  }
  if (write) {
    nlohmann::json summary;
    summary["task"] = c.get_string("task", "");
    summary["best_seed"] = best_seed;
    summary["runs"] = nlohmann::json::array();
    for (const auto& r : exp.runs) {
      summary["runs"].push_back({{"seed", r.metrics.seed},
                                 {"best_valid_error", r.metrics.best_valid_error},
                                 {"best_epoch", r.metrics.best_epoch},
                                 {"test_error", r.metrics.test_error},
                                 {"seconds", r.metrics.seconds}});
    }
    const auto& b = exp.runs[exp.best];
    summary["test_error"] = b.metrics.test_error;
    summary["failed"] = b.metrics.test_error > kFailThreshold;
    std::ofstream out(out_dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  return exp;
}

}  // namespace entnet::pipeline
