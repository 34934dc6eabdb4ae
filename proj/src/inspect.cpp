#include "entnet/inspect.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "entnet/error.hpp"
#include "entnet/ops.hpp"

namespace entnet {

AffinityReport slot_nearest_words(const Tensor& slots, const OutputWeights& weights,
                                  const Vocabulary& vocab, std::size_t k,
                                  const std::vector<std::string>& labels) {
  const Tensor& R = weights.R;
  if (slots.rank() != 2 || weights.H.rows() != slots.cols() || R.cols() != slots.cols() ||
      R.rows() != vocab.size()) {
    fail(ErrorCode::kDimensionMismatch, "slot_nearest_words: slots " + shape_string(slots.shape()) +
                                            " H " + shape_string(weights.H.shape()) + " R " +
                                            shape_string(R.shape()));
  }
  std::vector<double> row_norms(R.rows());
  for (std::size_t i = 0; i < R.rows(); ++i) row_norms[i] = l2_norm(R.row(i));

  AffinityReport report;
  for (std::size_t j = 0; j < slots.rows(); ++j) {
    Tape tape = Tape::inference();
    OutputVars vars;
    vars.H = tape.constant(weights.H);
    vars.activation = weights.activation;
    if (weights.activation == Activation::kPrelu) vars.slopes = tape.constant(weights.slopes);
    const Tensor h = Tensor::vector(std::vector<double>(slots.row(j).begin(), slots.row(j).end()));
    const Var z = output_activation(tape, ops::matvec(tape, vars.H, tape.constant(h)), vars);
    const Tensor& zv = tape.value(z);
    const double zn = zv.norm();
    if (!(zn > ops::kNormEpsilon)) {
      fail(ErrorCode::kNearZeroNorm, "phi(H h_" + std::to_string(j) + ") has norm " +
                                         std::to_string(zn));
    }

    SlotAffinity sa;
    sa.slot = j;
    sa.label = j < labels.size() ? labels[j] : "slot" + std::to_string(j);
    std::vector<WordAffinity> all;
    for (std::size_t i = 1; i < R.rows(); ++i) {
      if (!(row_norms[i] > 0.0)) continue;
      const double cos = dot(zv.values(), R.row(i)) / (zn * row_norms[i]);
      all.push_back({static_cast<int>(i), vocab.token(static_cast<int>(i)),
                     std::clamp(cos, -1.0, 1.0)});
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const WordAffinity& a, const WordAffinity& b) { return a.score > b.score; });
    if (all.size() > k) all.resize(k);
    sa.nearest = std::move(all);
    report.slots.push_back(std::move(sa));
  }
  return report;
}

std::string format_report(const AffinityReport& report) {
  std::size_t key_width = 3;
  std::size_t cell_width = 4;
  std::size_t columns = 0;
  std::vector<std::vector<std::string>> cells;
  for (const auto& s : report.slots) {
    key_width = std::max(key_width, s.label.size());
    std::vector<std::string> row;
    for (const auto& w : s.nearest) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " (%.3f)", w.score);
      row.push_back(w.token + buf);
      cell_width = std::max(cell_width, row.back().size());
    }
    columns = std::max(columns, row.size());
    cells.push_back(std::move(row));
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad("Key", key_width);
  for (std::size_t c = 0; c < columns; ++c) {
    out += "  " + pad(std::to_string(c + 1) + "-NN", cell_width);
  }
  out += '\n';
  for (std::size_t r = 0; r < report.slots.size(); ++r) {
    out += pad(report.slots[r].label, key_width);
    for (const auto& cell : cells[r]) out += "  " + pad(cell, cell_width);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

std::string report_json(const AffinityReport& report) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : report.slots) {
    nlohmann::json slot;
    slot["slot"] = s.slot;
    slot["key"] = s.label;
    slot["nearest"] = nlohmann::json::array();
    for (const auto& w : s.nearest) {
      slot["nearest"].push_back({{"token", w.token}, {"index", w.index}, {"score", w.score}});
    }
    j.push_back(std::move(slot));
  }
  return j.dump(2);
}

}  // namespace entnet
