#pragma once

#include <cstddef>
#include <span>

#include "entnet/random.hpp"
#include "entnet/tape.hpp"

/// Differentiable operations recorded on a Tape. Shapes are checked eagerly
/// and mismatches raise ErrorCode::kDimensionMismatch.
namespace entnet::ops {

/// Norm guard for l2 normalization. Anything at or below it is treated as
/// a degenerate memory state.
inline constexpr double kNormEpsilon = 1e-6;

// Scalar helpers shared by the tape ops and by tests.
double sigmoid(double x);

// Elementwise.
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var sigmoid(Tape& t, Var x);
/// x if x >= 0 else slope * x. `slope` has as many entries as the last
/// extent of x and is broadcast over the leading extents.
Var prelu(Tape& t, Var x, Var slope);

// Shape-changing / linear algebra.
/// A (r x c) times x (c) -> r.
Var matvec(Tape& t, Var a, Var x);
/// A^T (c x r) times x (r) -> c. With A = slots and x = attention this is
/// the weighted sum of rows.
Var matvec_t(Tape& t, Var a, Var x);
/// X (r x k) times A^T (k x c) -> r x c, i.e. A applied to every row of X.
Var matmul_nt(Tape& t, Var x, Var a);
/// Adds vector v (c) to every row of X (r x c).
Var add_row(Tape& t, Var x, Var v);
/// Stacks r copies of vector v (c) -> r x c.
Var broadcast_rows(Tape& t, Var v, std::size_t r);
/// Multiplies row i of X (r x c) by g[i].
Var scale_rows(Tape& t, Var x, Var g);
/// Sums the rows of X (r x c) -> c.
Var sum_rows(Tape& t, Var x);
Var sum_all(Tape& t, Var x);
Var dot(Tape& t, Var a, Var b);
/// Rows of `table` selected by `indices` -> |indices| x c.
Var gather_rows(Tape& t, Var table, std::span<const int> indices);

// Normalizers.
/// Stable softmax over a vector.
Var softmax(Tape& t, Var scores);
/// v / ||v||; throws NearZeroNorm when ||v|| <= kNormEpsilon.
Var l2_normalize(Tape& t, Var v);
/// l2_normalize applied to every row of a matrix.
Var normalize_rows(Tape& t, Var x);

/// Inverted dropout: kept entries are scaled by 1/(1-rate). Identity when
/// not training or rate == 0. Throws InvalidRate unless 0 <= rate < 1.
Var dropout(Tape& t, Var x, double rate, bool training, Rng& rng);

/// -log softmax(logits)[target] computed via log-sum-exp.
Var cross_entropy(Tape& t, Var logits, std::size_t target);

}  // namespace entnet::ops
