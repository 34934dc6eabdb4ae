#include "entnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "entnet/error.hpp"

namespace entnet::ops {

namespace {

void require(bool ok, const char* op, const Shape& a, const Shape& b) {
  if (!ok) {
    fail(ErrorCode::kDimensionMismatch,
         std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
             shape_string(b));
  }
}

bool is_matrix(const Tensor& x) { return x.rank() == 2; }
bool is_vector(const Tensor& x) { return x.rank() == 1; }

// Accumulates src into the adjoint of node `id` if that node wants one.
void accumulate(Tape& t, Var v, std::span<const double> src) {
  if (!t.requires_grad(v)) return;
  auto dst = t.grad_mut(v.id).values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require(va.shape() == vb.shape(), "add", va.shape(), vb.shape());
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const auto g = tp.grad_mut(self).values();
    accumulate(tp, a, g);
    accumulate(tp, b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require(va.shape() == vb.shape(), "sub", va.shape(), vb.shape());
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    accumulate(tp, a, g.values());
    if (tp.requires_grad(b)) {
      auto gb = tp.grad_mut(b.id).values();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require(va.shape() == vb.shape(), "mul", va.shape(), vb.shape());
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    if (tp.requires_grad(a)) {
      const Tensor& vb = tp.value(b);
      auto ga = tp.grad_mut(a.id).values();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (tp.requires_grad(b)) {
      const Tensor& va = tp.value(a);
      auto gb = tp.grad_mut(b.id).values();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(Tape& t, Var a, double c) {
  Tensor out = t.value(a);
  for (double& v : out.values()) v *= c;
  return t.record(std::move(out), {a}, [a, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    auto ga = tp.grad_mut(a.id).values();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += c * g[i];
  });
}

Var sigmoid(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (double& v : out.values()) v = sigmoid(v);
  return t.record(std::move(out), {x}, [x](Tape& tp, std::uint32_t self) {
    const Tensor& y = tp.value(Var{self});
    const Tensor& g = tp.grad_mut(self);
    auto gx = tp.grad_mut(x.id).values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var prelu(Tape& t, Var x, Var slope) {
  const Tensor& vx = t.value(x);
  const Tensor& vs = t.value(slope);
  require(is_vector(vs) && vs.size() == vx.cols(), "prelu", vx.shape(), vs.shape());
  const std::size_t cols = vx.cols();
  Tensor out = vx;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) out[i] *= vs[i % cols];
  }
  return t.record(std::move(out), {x, slope}, [x, slope, cols](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& vx = tp.value(x);
    const Tensor& vs = tp.value(slope);
    if (tp.requires_grad(x)) {
      auto gx = tp.grad_mut(x.id).values();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        gx[i] += vx[i] >= 0.0 ? g[i] : g[i] * vs[i % cols];
      }
    }
    if (tp.requires_grad(slope)) {
      auto gs = tp.grad_mut(slope.id).values();
      for (std::size_t i = 0; i < vx.size(); ++i) {
        if (vx[i] < 0.0) gs[i % cols] += g[i] * vx[i];
      }
    }
  });
}

Var matvec(Tape& t, Var a, Var x) {
  const Tensor& va = t.value(a);
  const Tensor& vx = t.value(x);
  require(is_matrix(va) && is_vector(vx) && va.cols() == vx.size(), "matvec", va.shape(),
          vx.shape());
  const std::size_t r = va.rows();
  const std::size_t c = va.cols();
  Tensor out({r});
  for (std::size_t i = 0; i < r; ++i) out[i] = entnet::dot(va.row(i), vx.values());
  return t.record(std::move(out), {a, x}, [a, x, r, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& va = tp.value(a);
    const Tensor& vx = tp.value(x);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_mut(a.id);
      for (std::size_t i = 0; i < r; ++i) {
        const double gi = g[i];
        double* row = ga.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) row[j] += gi * vx[j];
      }
    }
    if (tp.requires_grad(x)) {
      Tensor& gx = tp.grad_mut(x.id);
      for (std::size_t i = 0; i < r; ++i) {
        const double gi = g[i];
        const double* row = va.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) gx[j] += gi * row[j];
      }
    }
  });
}

Var matvec_t(Tape& t, Var a, Var x) {
  const Tensor& va = t.value(a);
  const Tensor& vx = t.value(x);
  require(is_matrix(va) && is_vector(vx) && va.rows() == vx.size(), "matvec_t", va.shape(),
          vx.shape());
  const std::size_t r = va.rows();
  const std::size_t c = va.cols();
  Tensor out({c});
  for (std::size_t i = 0; i < r; ++i) {
    const double xi = vx[i];
    const double* row = va.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) out[j] += xi * row[j];
  }
  return t.record(std::move(out), {a, x}, [a, x, r, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& va = tp.value(a);
    const Tensor& vx = tp.value(x);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_mut(a.id);
      for (std::size_t i = 0; i < r; ++i) {
        double* row = ga.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) row[j] += vx[i] * g[j];
      }
    }
    if (tp.requires_grad(x)) {
      Tensor& gx = tp.grad_mut(x.id);
      for (std::size_t i = 0; i < r; ++i) gx[i] += entnet::dot(va.row(i), g.values());
    }
  });
}

Var matmul_nt(Tape& t, Var x, Var a) {
  const Tensor& vx = t.value(x);
  const Tensor& va = t.value(a);
  require(is_matrix(vx) && is_matrix(va) && vx.cols() == va.cols(), "matmul_nt", vx.shape(),
          va.shape());
  const std::size_t r = vx.rows();
  const std::size_t k = vx.cols();
  const std::size_t c = va.rows();
  Tensor out({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = entnet::dot(vx.row(i), va.row(j));
  }
  return t.record(std::move(out), {x, a}, [x, a, r, k, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& vx = tp.value(x);
    const Tensor& va = tp.value(a);
    if (tp.requires_grad(x)) {
      // dX = G A
      Tensor& gx = tp.grad_mut(x.id);
      for (std::size_t i = 0; i < r; ++i) {
        double* dst = gx.data() + i * k;
        for (std::size_t j = 0; j < c; ++j) {
          const double gij = g.at(i, j);
          const double* src = va.data() + j * k;
          for (std::size_t l = 0; l < k; ++l) dst[l] += gij * src[l];
        }
      }
    }
    if (tp.requires_grad(a)) {
      // dA = G^T X
      Tensor& ga = tp.grad_mut(a.id);
      for (std::size_t i = 0; i < r; ++i) {
        const double* src = vx.data() + i * k;
        for (std::size_t j = 0; j < c; ++j) {
          const double gij = g.at(i, j);
          double* dst = ga.data() + j * k;
          for (std::size_t l = 0; l < k; ++l) dst[l] += gij * src[l];
        }
      }
    }
  });
}

Var add_row(Tape& t, Var x, Var v) {
  const Tensor& vx = t.value(x);
  const Tensor& vv = t.value(v);
  require(is_matrix(vx) && is_vector(vv) && vx.cols() == vv.size(), "add_row", vx.shape(),
          vv.shape());
  const std::size_t c = vx.cols();
  Tensor out = vx;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vv[i % c];
  return t.record(std::move(out), {x, v}, [x, v, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    accumulate(tp, x, g.values());
    if (tp.requires_grad(v)) {
      auto gv = tp.grad_mut(v.id).values();
      for (std::size_t i = 0; i < g.size(); ++i) gv[i % c] += g[i];
    }
  });
}

Var broadcast_rows(Tape& t, Var v, std::size_t r) {
  const Tensor& vv = t.value(v);
  require(is_vector(vv), "broadcast_rows", vv.shape(), vv.shape());
  const std::size_t c = vv.size();
  Tensor out({r, c});
  for (std::size_t i = 0; i < r; ++i) std::copy(vv.data(), vv.data() + c, out.data() + i * c);
  return t.record(std::move(out), {v}, [v, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    auto gv = tp.grad_mut(v.id).values();
    for (std::size_t i = 0; i < g.size(); ++i) gv[i % c] += g[i];
  });
}

Var scale_rows(Tape& t, Var x, Var gate) {
  const Tensor& vx = t.value(x);
  const Tensor& vg = t.value(gate);
  require(is_matrix(vx) && is_vector(vg) && vx.rows() == vg.size(), "scale_rows", vx.shape(),
          vg.shape());
  const std::size_t r = vx.rows();
  const std::size_t c = vx.cols();
  Tensor out = vx;
  for (std::size_t i = 0; i < r; ++i) {
    for (double& e : out.row(i)) e *= vg[i];
  }
  return t.record(std::move(out), {x, gate}, [x, gate, r, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& vx = tp.value(x);
    const Tensor& vg = tp.value(gate);
    if (tp.requires_grad(x)) {
      Tensor& gx = tp.grad_mut(x.id);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += g.at(i, j) * vg[i];
      }
    }
    if (tp.requires_grad(gate)) {
      Tensor& gg = tp.grad_mut(gate.id);
      for (std::size_t i = 0; i < r; ++i) gg[i] += entnet::dot(g.row(i), vx.row(i));
    }
  });
}

Var sum_rows(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  require(is_matrix(vx), "sum_rows", vx.shape(), vx.shape());
  const std::size_t c = vx.cols();
  Tensor out({c});
  for (std::size_t i = 0; i < vx.size(); ++i) out[i % c] += vx[i];
  return t.record(std::move(out), {x}, [x, c](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    auto gx = tp.grad_mut(x.id).values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i % c];
  });
}

Var sum_all(Tape& t, Var x) {
  double acc = 0.0;
  for (double v : t.value(x).values()) acc += v;
  return t.record(Tensor::scalar(acc), {x}, [x](Tape& tp, std::uint32_t self) {
    const double g = tp.grad_mut(self)[0];
    for (double& v : tp.grad_mut(x.id).values()) v += g;
  });
}

Var dot(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require(va.shape() == vb.shape(), "dot", va.shape(), vb.shape());
  return t.record(Tensor::scalar(entnet::dot(va.values(), vb.values())), {a, b},
                  [a, b](Tape& tp, std::uint32_t self) {
                    const double g = tp.grad_mut(self)[0];
                    if (tp.requires_grad(a)) {
                      const Tensor& vb = tp.value(b);
                      auto ga = tp.grad_mut(a.id).values();
                      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * vb[i];
                    }
                    if (tp.requires_grad(b)) {
                      const Tensor& va = tp.value(a);
                      auto gb = tp.grad_mut(b.id).values();
                      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * va[i];
                    }
                  });
}

Var gather_rows(Tape& t, Var table, std::span<const int> indices) {
  const Tensor& vt = t.value(table);
  require(is_matrix(vt), "gather_rows", vt.shape(), vt.shape());
  const std::size_t c = vt.cols();
  Tensor out({indices.size(), c});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || static_cast<std::size_t>(idx) >= vt.rows()) {
      fail(ErrorCode::kUnknownToken, "row index " + std::to_string(idx) + " outside table of " +
                                         std::to_string(vt.rows()) + " rows");
    }
    auto src = vt.row(static_cast<std::size_t>(idx));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<int> rows(indices.begin(), indices.end());
  return t.record(std::move(out), {table},
                  [table, rows = std::move(rows), c](Tape& tp, std::uint32_t self) {
                    const Tensor& g = tp.grad_mut(self);
                    Tensor& gt = tp.grad_mut(table.id);
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      double* dst = gt.data() + static_cast<std::size_t>(rows[i]) * c;
                      const double* src = g.data() + i * c;
                      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
                    }
                  });
}

Var softmax(Tape& t, Var scores) {
  const Tensor& vs = t.value(scores);
  require(is_vector(vs) && vs.size() > 0, "softmax", vs.shape(), vs.shape());
  Tensor out = vs;
  const double mx = *std::max_element(out.values().begin(), out.values().end());
  double total = 0.0;
  for (double& v : out.values()) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : out.values()) v /= total;
  return t.record(std::move(out), {scores}, [scores](Tape& tp, std::uint32_t self) {
    const Tensor& p = tp.value(Var{self});
    const Tensor& g = tp.grad_mut(self);
    const double inner = entnet::dot(p.values(), g.values());
    auto gs = tp.grad_mut(scores.id).values();
    for (std::size_t i = 0; i < gs.size(); ++i) gs[i] += p[i] * (g[i] - inner);
  });
}

namespace {

Var normalize_impl(Tape& t, Var x, const char* op) {
  const Tensor& vx = t.value(x);
  const std::size_t r = vx.rows();
  const std::size_t c = vx.cols();
  Tensor out = vx;
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    norms[i] = l2_norm(vx.row(i));
    if (!(norms[i] > kNormEpsilon)) {
      fail(ErrorCode::kNearZeroNorm, std::string(op) + ": row " + std::to_string(i) +
                                         " has norm " + std::to_string(norms[i]));
    }
    for (double& e : out.row(i)) e /= norms[i];
  }
  return t.record(std::move(out), {x},
                  [x, r, c, norms = std::move(norms)](Tape& tp, std::uint32_t self) {
                    const Tensor& y = tp.value(Var{self});
                    const Tensor& g = tp.grad_mut(self);
                    Tensor& gx = tp.grad_mut(x.id);
                    // d(v/|v|) = (g - y <y,g>) / |v|
                    for (std::size_t i = 0; i < r; ++i) {
                      const double inner = entnet::dot(y.row(i), g.row(i));
                      for (std::size_t j = 0; j < c; ++j) {
                        gx.at(i, j) += (g.at(i, j) - y.at(i, j) * inner) / norms[i];
                      }
                    }
                  });
}

}  // namespace

Var l2_normalize(Tape& t, Var v) {
  const Tensor& vv = t.value(v);
  require(is_vector(vv), "l2_normalize", vv.shape(), vv.shape());
  return normalize_impl(t, v, "l2_normalize");
}

Var normalize_rows(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  require(is_matrix(vx), "normalize_rows", vx.shape(), vx.shape());
  return normalize_impl(t, x, "normalize_rows");
}

Var dropout(Tape& t, Var x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    fail(ErrorCode::kInvalidRate, "dropout rate " + std::to_string(rate) + " not in [0,1)");
  }
  if (!training || rate == 0.0) return x;
  const Tensor& vx = t.value(x);
  Tensor mask(vx.shape());
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale_kept = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = keep(rng) ? scale_kept : 0.0;
  Tensor out = vx;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return t.record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_mut(self);
    auto gx = tp.grad_mut(x.id).values();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Var cross_entropy(Tape& t, Var logits, std::size_t target) {
  const Tensor& vy = t.value(logits);
  require(is_vector(vy) && target < vy.size(), "cross_entropy", vy.shape(), Shape{target});
  const double mx = *std::max_element(vy.values().begin(), vy.values().end());
  double total = 0.0;
  for (double v : vy.values()) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  return t.record(Tensor::scalar(lse - vy[target]), {logits},
                  [logits, target, lse](Tape& tp, std::uint32_t self) {
                    const double g = tp.grad_mut(self)[0];
                    const Tensor& vy = tp.value(logits);
                    auto gy = tp.grad_mut(logits.id).values();
                    for (std::size_t i = 0; i < gy.size(); ++i) {
                      gy[i] += g * std::exp(vy[i] - lse);
                    }
                    gy[target] -= g;
                  });
}

}  // namespace entnet::ops
