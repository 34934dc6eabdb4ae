#include <sstream>

#include "doctest.h"
#include "entnet/checkpoint.hpp"
#include "entnet/error.hpp"
#include "world_fixture.hpp"

using namespace entnet;

namespace {

void check_same(const Model& a, const Model& b) {
  CHECK(a.vocab() == b.vocab());
  CHECK(config_to_json(a.config()) == config_to_json(b.config()));
  REQUIRE(a.params().size() == b.params().size());
  auto ib = b.params().begin();
  for (const auto& p : a.params()) {
    CHECK(p->name == (*ib)->name);
    CHECK(p->frozen == (*ib)->frozen);
    REQUIRE(p->value.shape() == (*ib)->value.shape());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      CHECK((*ib)->value[i] == static_cast<double>(static_cast<float>(p->value[i])));
    }
    ++ib;
  }
}

}  // namespace

TEST_CASE("general model round trip") {
  const Model model = testing::world_model(5, 20, 7);
  std::stringstream io;
  save_checkpoint(io, model, {{"seed", 7}});
  const LoadedCheckpoint back = load_checkpoint(io);
  check_same(model, back.model);
  CHECK(back.extra.at("seed") == 7);
}

TEST_CASE("simplified tied-candidate model round trip") {
  std::vector<TokenSeq> corpus;
  std::vector<std::string> cands;
  for (int i = 0; i < 10; ++i) cands.push_back("c" + std::to_string(i));
  corpus.push_back(cands);
  corpus.push_back({"XXXXX", "the", "cat"});
  Vocabulary vocab = Vocabulary::build(corpus);
  ModelConfig c;
  c.memory = MemoryConfig::simplified(10, 6);
  c.memory.keys_tied = true;
  c.keys = KeyMode::kTiedCandidates;
  c.output = OutputMode::kDirect;
  c.output_activation = Activation::kIdentity;
  c.dual_encoding = true;
  c.dropout = 0.5;
  c.vocab_size = vocab.size();
  c.story_length = 5;
  c.query_length = 5;
  Model model(c, vocab);
  Rng rng = make_stream(1, "init");
  init_model(model, rng);

  std::stringstream io;
  save_checkpoint(io, model);
  const LoadedCheckpoint back = load_checkpoint(io);
  check_same(model, back.model);
  CHECK(back.model.config().memory.variant == Variant::kSimplified);
  CHECK(back.model.config().output == OutputMode::kDirect);
  CHECK(back.model.params().find("memory.U") == nullptr);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const Model model = testing::world_model(2, 4, 1);
  std::stringstream io;
  save_checkpoint(io, model);
  const std::string bytes = io.str();
  auto code_for = [](const std::string& data) {
    std::istringstream in(data);
    try {
      load_checkpoint(in);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_for(bad_magic) == ErrorCode::kBadCheckpoint);
  CHECK(code_for(bytes.substr(0, bytes.size() / 2)) == ErrorCode::kBadCheckpoint);
  CHECK(code_for("") == ErrorCode::kBadCheckpoint);
  std::string bad_version = bytes;
  bad_version[8] = 9;
  CHECK(code_for(bad_version) == ErrorCode::kBadCheckpoint);
}
