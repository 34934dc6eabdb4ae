#include <cmath>
#include <random>

#include "doctest.h"
#include "entnet/encoding.hpp"
#include "entnet/error.hpp"
#include "fd_oracle.hpp"

using namespace entnet;
using entnet::testing::random_tensor;

namespace {

// Independent oracle: the masked sum written as plain loops.
Tensor loop_encode(const std::vector<int>& idx, const Tensor& masks, const Tensor& table) {
  Tensor out({table.cols()});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t k = 0; k < table.cols(); ++k) {
      out[k] += masks.at(i, k) * table.at(static_cast<std::size_t>(idx[i]), k);
    }
  }
  return out;
}

Tensor random_table(std::size_t rows, std::size_t d, std::mt19937_64& rng) {
  Tensor t = random_tensor({rows, d}, rng);
  for (std::size_t k = 0; k < d; ++k) t.at(0, k) = 0.0;
  return t;
}

}  // namespace

TEST_CASE("vocabulary build and lookup") {
  const std::vector<TokenSeq> corpus{split_tokens("a b"), split_tokens("b c")};
  const Vocabulary v = Vocabulary::build(corpus);
  REQUIRE(v.size() == 4);
  CHECK(v.token(0) == kNullToken);
  CHECK(v.index("a") == 1);
  CHECK(v.index("b") == 2);
  CHECK(v.index("c") == 3);
  CHECK_FALSE(v.contains("d"));
  CHECK_THROWS_AS(v.index("d"), Error);

  const std::vector<TokenSeq> empty{TokenSeq{}};
  try {
    Vocabulary::build(empty);
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyCorpus);
  }

  const Vocabulary round = Vocabulary::deserialize(v.serialize());
  CHECK(round == v);
  CHECK(v.serialize().starts_with(std::string(kNullToken) + "\t0\n"));
}

TEST_CASE("pad_to_length") {
  const std::vector<int> two{5, 7};
  CHECK(pad_to_length(two, 4) == std::vector<int>{5, 7, kNullIndex, kNullIndex});
  CHECK(pad_to_length(two, 2) == two);
  try {
    pad_to_length(two, 1);
    FAIL("expected TooLong");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooLong);
  }
}

TEST_CASE("encode matches the loop oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> tok(0, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor table = random_table(9, 6, rng);
    const Tensor masks = random_tensor({5, 6}, rng, -2, 2);
    std::vector<int> idx(5);
    for (int& i : idx) i = tok(rng);
    const Tensor got = encode(idx, masks, table);
    const Tensor want = loop_encode(idx, masks, table);
    for (std::size_t k = 0; k < 6; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
  }
}

TEST_CASE("encode examples") {
  std::mt19937_64 rng(1);
  const Tensor table = random_table(4, 3, rng);
  const Tensor ones({3, 3}, 1.0);

  // Bag of words with unit masks.
  const std::vector<int> bow{1, 3, 0};
  const Tensor s = encode(bow, ones, table);
  for (std::size_t k = 0; k < 3; ++k) CHECK(s[k] == doctest::Approx(table.at(1, k) + table.at(3, k)));

  // Single word: f_1 (*) e_w.
  const Tensor masks = random_tensor({3, 3}, rng);
  const std::vector<int> one{2, 0, 0};
  const Tensor single = encode(one, masks, table);
  for (std::size_t k = 0; k < 3; ++k) CHECK(single[k] == doctest::Approx(masks.at(0, k) * table.at(2, k)));

  // All padding encodes to exactly zero, whatever the masks.
  const std::vector<int> null{0, 0, 0};
  CHECK(encode(null, masks, table) == Tensor({3}));

  const std::vector<int> bad{9, 0, 0};
  CHECK_THROWS_AS(encode(bad, masks, table), Error);
  const std::vector<int> short_input{1, 2};
  CHECK_THROWS_AS(encode(short_input, masks, table), Error);
}

TEST_CASE("encoding is order-sensitive only through the masks") {
  std::mt19937_64 rng(2);
  const Tensor table = random_table(6, 4, rng);
  const std::vector<int> ab{1, 2, 3};
  const std::vector<int> ba{2, 1, 3};
  const Tensor ones({3, 4}, 1.0);
  CHECK(encode(ab, ones, table) == encode(ba, ones, table));
  const Tensor masks = random_tensor({3, 4}, rng);
  const Tensor x = encode(ab, masks, table);
  const Tensor y = encode(ba, masks, table);
  double diff = 0.0;
  for (std::size_t k = 0; k < 4; ++k) diff += std::abs(x[k] - y[k]);
  CHECK(diff > 1e-6);
}

TEST_CASE("encode_dual") {
  std::mt19937_64 rng(3);
  const Tensor table = random_table(5, 4, rng);
  const Tensor m1 = random_tensor({2, 4}, rng);
  const Tensor m2 = random_tensor({2, 4}, rng);
  const std::vector<int> idx{1, 4};
  const auto [same_a, same_b] = encode_dual(idx, m1, m1, table);
  CHECK(same_a == same_b);
  const auto [g, u] = encode_dual(idx, m1, m2, table);
  CHECK(g == encode(idx, m1, table));
  CHECK(u == encode(idx, m2, table));
  const std::vector<int> null{0, 0};
  const auto [z1, z2] = encode_dual(null, m1, m2, table);
  CHECK(z1 == Tensor({4}));
  CHECK(z2 == Tensor({4}));
}

TEST_CASE("tape encode gradients") {
  std::mt19937_64 rng(4);
  const std::vector<int> idx{2, 0, 1, 2};
  const double err = testing::max_gradient_error(
      [&](Tape& t, const std::vector<Var>& in) {
        return ops::sum_all(t, ops::mul(t, encode(t, idx, in[0], in[1]), in[2]));
      },
      {random_tensor({4, 3}, rng), random_tensor({3, 3}, rng), random_tensor({3}, rng)});
  CHECK(err < 1e-6);
}
