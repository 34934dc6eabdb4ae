#include "doctest.h"
#include "entnet/error.hpp"
#include "entnet/inspect.hpp"

using namespace entnet;

namespace {

Vocabulary vocab_of(std::initializer_list<const char*> words) {
  Vocabulary v;
  for (const char* w : words) v.add(w);
  return v;
}

OutputWeights identity_readout(Tensor R) {
  return OutputWeights{std::move(R), Tensor::identity(2), {}, Activation::kIdentity};
}

}  // namespace

TEST_CASE("cosine affinities") {
  const Vocabulary v = vocab_of({"east", "north", "west"});
  // Rows: null, parallel, orthogonal, opposite.
  const Tensor R = Tensor::matrix(4, 2, {5, 5, 2, 0, 0, 3, -1, 0});
  const Tensor slots = Tensor::matrix(1, 2, {0.5, 0.0});
  const AffinityReport r = slot_nearest_words(slots, identity_readout(R), v, 3);
  REQUIRE(r.slots.size() == 1);
  REQUIRE(r.slots[0].nearest.size() == 3);
  CHECK(r.slots[0].nearest[0].token == "east");
  CHECK(r.slots[0].nearest[0].score == doctest::Approx(1.0));
  CHECK(r.slots[0].nearest[1].token == "north");
  CHECK(r.slots[0].nearest[1].score == doctest::Approx(0.0));
  CHECK(r.slots[0].nearest[2].score == doctest::Approx(-1.0));
  for (const auto& w : r.slots[0].nearest) CHECK(w.index != kNullIndex);

  CHECK(slot_nearest_words(slots, identity_readout(R), v, 1).slots[0].nearest.size() == 1);
}

TEST_CASE("affinity is invariant to positive rescaling") {
  const Vocabulary v = vocab_of({"a", "b", "c"});
  const Tensor R = Tensor::matrix(4, 2, {0, 0, 0.3, 0.9, -0.2, 0.4, 1.0, -1.0});
  const Tensor h = Tensor::matrix(1, 2, {0.6, -0.2});
  const AffinityReport base = slot_nearest_words(h, identity_readout(R), v, 3);
  for (double c : {0.5, 2.0}) {
    Tensor scaled = h;
    for (double& x : scaled.values()) x *= c;
    const AffinityReport r = slot_nearest_words(scaled, identity_readout(R), v, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r.slots[0].nearest[i].token == base.slots[0].nearest[i].token);
      CHECK(r.slots[0].nearest[i].score == doctest::Approx(base.slots[0].nearest[i].score));
    }
  }
}

TEST_CASE("ties keep vocabulary order") {
  const Vocabulary v = vocab_of({"b", "a", "c"});
  const Tensor R = Tensor::matrix(4, 2, {0, 0, 1, 0, 2, 0, 0, 1});
  const AffinityReport r = slot_nearest_words(Tensor::matrix(1, 2, {1, 0}), identity_readout(R), v, 3);
  CHECK(r.slots[0].nearest[0].token == "b");
  CHECK(r.slots[0].nearest[1].token == "a");
}

TEST_CASE("vanishing read vector") {
  const Vocabulary v = vocab_of({"a"});
  const Tensor R = Tensor::matrix(2, 2, {0, 0, 1, 0});
  try {
    slot_nearest_words(Tensor::matrix(1, 2, {0, 0}), identity_readout(R), v, 1);
    FAIL("expected NearZeroNorm");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNearZeroNorm);
  }
}

TEST_CASE("report rendering") {
  const Vocabulary v = vocab_of({"garden", "took"});
  const Tensor R = Tensor::matrix(3, 2, {0, 0, 1, 0, 0.2, 1});
  const AffinityReport r =
      slot_nearest_words(Tensor::matrix(2, 2, {1, 0, 0, 1}), identity_readout(R), v, 2, {"milk", "mary"});
  const std::string table = format_report(r);
  CHECK(table.starts_with("Key"));
  CHECK(table.find("milk  garden (1.000)") != std::string::npos);
  CHECK(table.find("mary") != std::string::npos);
  const std::string json = report_json(r);
  CHECK(json.find("\"key\": \"milk\"") != std::string::npos);
}
