#pragma once

// Literal equation-by-equation evaluator of the memory-augmented forward
// pass: hand-rolled loops, plain softmax, no shared kernels. Exists solely to
// cross-check forward_full from an independent code path.

#include <algorithm>
#include <cmath>
#include <vector>

#include "signxfer/model.hpp"

namespace signxfer::test {

using Grid = std::vector<std::vector<double>>;

inline Grid grid_of(const Matrix& m) {
  Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m.at(r, c);
  return g;
}

inline Grid naive_mm(const Grid& a, const Grid& b) {
  Grid out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Grid naive_softmax(const Grid& z) {
  Grid out = z;
  for (auto& row : out) {
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

struct NaiveTrace {
  Grid correlation;
  std::vector<double> descriptor;
  Grid attention;
  std::vector<double> logits;
};

inline NaiveTrace naive_forward(const FullModel& model, const Matrix& memory_matrix,
                                const Matrix& frames) {
  const AttentionParams& p = model.attention;
  const std::size_t d_in = frames.cols();
  const std::size_t d = model.encoder.w.cols();
  const std::size_t rho = model.encoder.downsample;

  // encoder: per-frame affine + tanh, then mean over rho-sized groups
  Grid hidden(frames.rows(), std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < frames.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = model.encoder.b.at(0, j);
      for (std::size_t k = 0; k < d_in; ++k)
        acc += frames.at(i, k) * model.encoder.w.at(k, j);
      hidden[i][j] = std::tanh(acc);
    }
  }
  const std::size_t t = (frames.rows() + rho - 1) / rho;
  Grid clip(t, std::vector<double>(d, 0.0));
  for (std::size_t w = 0; w < t; ++w) {
    const std::size_t begin = w * rho;
    const std::size_t end = std::min(frames.rows(), begin + rho);
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t i = begin; i < end; ++i) acc += hidden[i][j];
      clip[w][j] = acc / static_cast<double>(end - begin);
    }
  }

  const Grid memory = grid_of(memory_matrix);
  const Grid w_x = grid_of(p.to_common_clip);
  const Grid w_m = grid_of(p.to_common_memory);
  const Grid w_delta = grid_of(p.perturbation);
  const Grid w_u = grid_of(p.to_input);
  const Grid w_p = grid_of(p.query_descriptor);
  const Grid w_q = grid_of(p.query_clip);
  const Grid w_v = grid_of(p.value_down);
  const Grid w_o = grid_of(p.value_up);

  NaiveTrace trace;

  // correlation: softmax over X W_X (M W_M)^T
  const Grid clip_common = naive_mm(clip, w_x);
  const Grid memory_common = naive_mm(memory, w_m);
  Grid scores(t, std::vector<double>(memory.size(), 0.0));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < memory.size(); ++j)
      for (std::size_t k = 0; k < clip_common[0].size(); ++k)
        scores[i][j] += clip_common[i][k] * memory_common[j][k];
  trace.correlation = naive_softmax(scores);

  // reweighted memory through the perturbed projection
  Grid w_sum = w_m;
  for (std::size_t i = 0; i < w_sum.size(); ++i)
    for (std::size_t j = 0; j < w_sum[0].size(); ++j) w_sum[i][j] += w_delta[i][j];
  const Grid reweighted = naive_mm(naive_mm(trace.correlation, memory), w_sum);

  // residual to the input space, then temporal max
  Grid residual = naive_mm(reweighted, w_u);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < d; ++j) residual[i][j] += clip[i][j];
  trace.descriptor.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double best = residual[0][j];
    for (std::size_t i = 1; i < t; ++i) best = std::max(best, residual[i][j]);
    trace.descriptor[j] = best;
  }

  // attention over temporal positions
  const Grid desc_common = naive_mm({trace.descriptor}, w_p);
  const Grid clip_query = naive_mm(clip, w_q);
  Grid similarity(1, std::vector<double>(t, 0.0));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t k = 0; k < desc_common[0].size(); ++k)
      similarity[0][i] += desc_common[0][k] * clip_query[i][k];
  trace.attention = naive_softmax(similarity);

  // attended channel summary and fused classification
  const Grid lifted = naive_mm(naive_mm(clip, w_v), w_o);
  std::vector<double> attended(d, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < t; ++i)
      attended[j] += trace.attention[0][i] * lifted[i][j];

  std::vector<double> fused(d);
  for (std::size_t j = 0; j < d; ++j) fused[j] = trace.descriptor[j] + attended[j];
  const std::size_t classes = model.head.w.cols();
  trace.logits.assign(classes, 0.0);
  for (std::size_t j = 0; j < classes; ++j) {
    double acc = model.head.b.at(0, j);
    for (std::size_t k = 0; k < d; ++k) acc += fused[k] * model.head.w.at(k, j);
    trace.logits[j] = acc;
  }
  return trace;
}

inline double max_abs_diff(const ForwardTrace& got, const NaiveTrace& expected) {
  double worst = 0.0;
  for (std::size_t r = 0; r < got.correlation.rows(); ++r)
    for (std::size_t c = 0; c < got.correlation.cols(); ++c)
      worst = std::max(worst,
                       std::abs(got.correlation.at(r, c) - expected.correlation[r][c]));
  for (std::size_t c = 0; c < got.descriptor.cols(); ++c)
    worst = std::max(worst, std::abs(got.descriptor.at(0, c) - expected.descriptor[c]));
  for (std::size_t c = 0; c < got.attention.cols(); ++c)
    worst = std::max(worst, std::abs(got.attention.at(0, c) - expected.attention[0][c]));
  for (std::size_t c = 0; c < got.logits.cols(); ++c)
    worst = std::max(worst, std::abs(got.logits.at(0, c) - expected.logits[c]));
  return worst;
}

}  // namespace signxfer::test
