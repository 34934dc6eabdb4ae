#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "entnet/error.hpp"
#include "entnet/memory.hpp"
#include "fd_oracle.hpp"

using namespace entnet;
using entnet::testing::random_tensor;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Independent scalar-loop oracle for one memory step.
MemoryState loop_step(const Tensor& sg, const Tensor& su, const MemoryState& st,
                      const CellWeights& w, const MemoryConfig& c) {
  const std::size_t m = st.slots.rows();
  const std::size_t d = st.slots.cols();
  MemoryState out = st;
  for (std::size_t j = 0; j < m; ++j) {
    double pre_gate = 0.0;
    for (std::size_t k = 0; k < d; ++k) pre_gate += sg[k] * (st.slots.at(j, k) + st.keys.at(j, k));
    const double g = sig(pre_gate);
    std::vector<double> cand(d);
    for (std::size_t r = 0; r < d; ++r) {
      if (c.variant == Variant::kSimplified) {
        cand[r] = su[r];
        continue;
      }
      double z = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        z += w.U.at(r, k) * st.slots.at(j, k) + w.V.at(r, k) * st.keys.at(j, k) + w.W.at(r, k) * su[k];
      }
      if (c.activation == Activation::kPrelu && z < 0) z *= w.slopes[r];
      cand[r] = z;
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      out.slots.at(j, r) = st.slots.at(j, r) + g * cand[r];
      norm += out.slots.at(j, r) * out.slots.at(j, r);
    }
    if (c.normalize) {
      for (std::size_t r = 0; r < d; ++r) out.slots.at(j, r) /= std::sqrt(norm);
    }
  }
  return out;
}

CellWeights random_cell(std::size_t d, std::mt19937_64& rng) {
  return CellWeights{random_tensor({d, d}, rng, -0.5, 0.5), random_tensor({d, d}, rng, -0.5, 0.5),
                     random_tensor({d, d}, rng, -0.5, 0.5), random_tensor({d}, rng, 0.1, 1.0)};
}

MemoryState unit_state(std::size_t m, std::size_t d, std::mt19937_64& rng) {
  Tensor keys = random_tensor({m, d}, rng);
  for (std::size_t j = 0; j < m; ++j) {
    const double n = l2_norm(keys.row(j));
    for (double& v : keys.row(j)) v /= n;
  }
  return init_state(keys);
}

}  // namespace

TEST_CASE("init_state copies keys") {
  const Tensor keys = Tensor::identity(3);
  const MemoryState s = init_state(keys);
  CHECK(s.slots == keys);
  CHECK(s.keys == keys);
  CHECK_THROWS_AS(init_state(Tensor::vector({1.0, 2.0})), Error);
}

TEST_CASE("gate examples") {
  const MemoryState s{Tensor::matrix(1, 2, {0.6, 0.8}), Tensor::matrix(1, 2, {1.0, 0.0})};
  CHECK(gate(Tensor::vector({1.0, 0.0}), s)[0] == doctest::Approx(0.832).epsilon(1e-3));
  CHECK(gate(Tensor::vector({0.0, 0.0}), s)[0] == 0.5);
  const MemoryState orth{Tensor::matrix(2, 2, {1.0, 0.0, 1.0, 0.0}), Tensor::matrix(2, 2, {1.0, 0.0, 2.0, 0.0})};
  const Tensor g = gate(Tensor::vector({0.0, 3.0}), orth);
  CHECK(g[0] == 0.5);
  CHECK(g[1] == 0.5);
  CHECK_THROWS_AS(gate(Tensor::vector({1.0, 0.0, 0.0}), s), Error);
}

TEST_CASE("candidate examples") {
  std::mt19937_64 rng(5);
  const MemoryState st = unit_state(3, 2, rng);
  const Tensor s = Tensor::vector({0.3, -0.4});

  const Tensor simple = candidate(s, st, {}, MemoryConfig::simplified(3, 2));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(simple.at(j, 0) == 0.3);
    CHECK(simple.at(j, 1) == -0.4);
  }

  const Tensor zero({2, 2});
  CellWeights zw{zero, zero, zero, Tensor::vector({0.25, 0.7})};
  CHECK(candidate(s, st, zw, MemoryConfig::general(3, 2)) == Tensor({3, 2}));

  MemoryConfig id = MemoryConfig::general(1, 2);
  id.activation = Activation::kIdentity;
  const MemoryState one = unit_state(1, 2, rng);
  const Tensor c = candidate(s, one, CellWeights{zero, zero, Tensor::identity(2), {}}, id);
  CHECK(c.at(0, 0) == 0.3);
  CHECK(c.at(0, 1) == -0.4);
}

TEST_CASE("step hand example") {
  MemoryConfig c = MemoryConfig::general(1, 2);
  c.activation = Activation::kIdentity;
  const Tensor zero({2, 2});
  const CellWeights w{zero, zero, Tensor::identity(2), {}};
  const MemoryState st{Tensor::matrix(1, 2, {1.0, 0.0}), Tensor::matrix(1, 2, {1.0, 0.0})};
  const Tensor s = Tensor::vector({1.0, 0.0});
  CHECK(gate(s, st)[0] == doctest::Approx(0.881).epsilon(1e-3));

  c.normalize = false;
  const MemoryState raw = step(s, s, st, w, c);
  CHECK(raw.slots.at(0, 0) == doctest::Approx(1.0 + sig(2.0)));
  CHECK(raw.slots.at(0, 0) == doctest::Approx(1.881).epsilon(1e-3));
  CHECK(raw.slots.at(0, 1) == 0.0);

  c.normalize = true;
  const MemoryState unit = step(s, s, st, w, c);
  CHECK(unit.slots.at(0, 0) == doctest::Approx(1.0));
  CHECK(unit.slots.at(0, 1) == 0.0);
  CHECK(unit.keys == st.keys);
}

TEST_CASE("closed gate leaves unit slots unchanged") {
  std::mt19937_64 rng(6);
  const MemoryConfig c = MemoryConfig::general(1, 2);
  const MemoryState st{Tensor::matrix(1, 2, {1.0, 0.0}), Tensor::matrix(1, 2, {1.0, 0.0})};
  const Tensor s_gate = Tensor::vector({-400.0, 0.0});  // pre-activation -800
  const MemoryState next = step(s_gate, Tensor::vector({0.5, 0.5}), st, random_cell(2, rng), c);
  CHECK(next.slots == st.slots);
}

TEST_CASE("step matches the loop oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const bool simplified = trial % 3 == 0;
    MemoryConfig c = simplified ? MemoryConfig::simplified(3, 4) : MemoryConfig::general(3, 4);
    if (!simplified && trial % 3 == 2) c.activation = Activation::kIdentity;
    const CellWeights w = simplified ? CellWeights{} : random_cell(4, rng);
    const MemoryState st = unit_state(3, 4, rng);
    const Tensor sg = random_tensor({4}, rng);
    const Tensor su = random_tensor({4}, rng);
    const MemoryState got = step(sg, su, st, w, c);
    const MemoryState want = loop_step(sg, su, st, w, c);
    for (std::size_t i = 0; i < got.slots.size(); ++i) {
      CHECK(got.slots[i] == doctest::Approx(want.slots[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("normalized slots stay on the unit sphere") {
  std::mt19937_64 rng(8);
  const MemoryConfig c = MemoryConfig::general(5, 6);
  double worst = 0.0;
  int steps = 0;
  for (int story = 0; story < 250; ++story) {
    const CellWeights w = random_cell(6, rng);
    MemoryState st = init_state(random_tensor({5, 6}, rng));
    for (int t = 0; t < 40; ++t, ++steps) {
      const Tensor s = random_tensor({6}, rng, -3, 3);
      st = step(s, s, st, w, c);
      for (std::size_t j = 0; j < 5; ++j) worst = std::max(worst, std::abs(l2_norm(st.slots.row(j)) - 1.0));
    }
  }
  CHECK(steps >= 10000);
  CHECK(worst <= 1e-5);
}

TEST_CASE("slot permutation equivariance and gate locality") {
  std::mt19937_64 rng(9);
  const MemoryConfig c = MemoryConfig::general(4, 5);
  const CellWeights w = random_cell(5, rng);
  const MemoryState st{random_tensor({4, 5}, rng), random_tensor({4, 5}, rng)};
  const Tensor s = random_tensor({5}, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  auto permute = [&](const Tensor& x) {
    Tensor y = x;
    for (std::size_t j = 0; j < 4; ++j) std::copy(x.row(perm[j]).begin(), x.row(perm[j]).end(), y.row(j).begin());
    return y;
  };
  const MemoryState base = step(s, s, st, w, c);
  const MemoryState permuted = step(s, s, MemoryState{permute(st.slots), permute(st.keys)}, w, c);
  CHECK(permuted.slots == permute(base.slots));

  // Changing slot 2 only touches slot 2.
  MemoryState edited = st;
  for (double& v : edited.keys.row(2)) v += 0.3;
  const Tensor g0 = gate(s, st);
  const Tensor g1 = gate(s, edited);
  const MemoryState after = step(s, s, edited, w, c);
  for (std::size_t j = 0; j < 4; ++j) {
    if (j == 2) {
      CHECK(g0[j] != g1[j]);
      continue;
    }
    CHECK(g0[j] == g1[j]);
    CHECK(std::equal(after.slots.row(j).begin(), after.slots.row(j).end(), base.slots.row(j).begin()));
  }
}

TEST_CASE("simplified step is h + g s exactly") {
  std::mt19937_64 rng(10);
  const MemoryConfig c = MemoryConfig::simplified(3, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const MemoryState st{random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)};
    const Tensor sg = random_tensor({4}, rng);
    const Tensor su = random_tensor({4}, rng);
    const Tensor g = gate(sg, st);
    const MemoryState next = step(sg, su, st, {}, c);
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 4; ++k) CHECK(next.slots.at(j, k) == st.slots.at(j, k) + g[j] * su[k]);
    }
  }
  MemoryConfig bad = c;
  bad.normalize = true;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("repeated input drives slots toward it") {
  MemoryConfig c = MemoryConfig::general(1, 3);
  c.activation = Activation::kIdentity;
  const Tensor zero({3, 3});
  const CellWeights w{zero, zero, Tensor::identity(3), {}};
  const Tensor s = Tensor::vector({0.0, 0.6, 0.8});
  MemoryState st = init_state(Tensor::matrix(1, 3, {1.0, 0.0, 0.0}));
  double last = dot(st.slots.row(0), s.values());
  for (int t = 0; t < 30; ++t) {
    st = step(s, s, st, w, c);
    const double cos = dot(st.slots.row(0), s.values());
    CHECK(cos > last);
    last = cos;
  }
  CHECK(last > 0.99);
}

TEST_CASE("run_story composition and determinism") {
  std::mt19937_64 rng(11);
  const MemoryConfig c = MemoryConfig::general(3, 4);
  const CellWeights w = random_cell(4, rng);
  const Tensor keys = random_tensor({3, 4}, rng);
  CHECK(run_story({}, keys, w, c).slots == keys);

  std::vector<Tensor> inputs;
  for (int t = 0; t < 6; ++t) inputs.push_back(random_tensor({4}, rng));
  std::vector<MemoryState> trace;
  const MemoryState a = run_story(inputs, keys, w, c, &trace);
  const MemoryState b = run_story(inputs, keys, w, c);
  CHECK(a.slots == b.slots);
  CHECK(trace.size() == 6);
  CHECK(trace.back().slots == a.slots);

  MemoryState manual = init_state(keys);
  for (const auto& s : inputs) manual = step(s, s, manual, w, c);
  CHECK(manual.slots == a.slots);
}

TEST_CASE("normalizing a vanishing slot fails loudly") {
  MemoryConfig c = MemoryConfig::general(1, 2);
  c.activation = Activation::kIdentity;
  const Tensor zero({2, 2});
  // Zero keys and slots with a zero input leave nothing to normalize.
  const MemoryState st{Tensor::matrix(1, 2, {0.0, 0.0}), Tensor::matrix(1, 2, {0.0, 0.0})};
  try {
    step(Tensor::vector({0.0, 0.0}), Tensor::vector({0.0, 0.0}), st, CellWeights{zero, zero, Tensor::identity(2), {}}, c);
    FAIL("expected NearZeroNorm");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNearZeroNorm);
  }
}
