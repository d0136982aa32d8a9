// SPDX-License-Identifier: Apache-2.0

#include "chai/model/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"
#include "chai/common/hash.hpp"
#include "chai/common/rng.hpp"

namespace chai::model {

namespace {

std::vector<float> uniform_matrix(std::size_t rows, std::size_t cols, double stddev, std::uint64_t seed) {
  // U(-a, a) has standard deviation a / sqrt(3).
  const double a = stddev * std::sqrt(3.0);
  SplitMix64 rng(seed);
  std::vector<float> m(rows * cols);
  for (float& v : m) v = static_cast<float>(rng.uniform(-a, a));
  return m;
}

}  // namespace

AttentionParams AttentionParams::generate(std::size_t d_model, std::size_t n_heads, std::uint64_t seed,
                                          float output_gain) {
  if (d_model == 0) throw std::invalid_argument("d_model must be positive");
  const double sd = 1.0 / std::sqrt(static_cast<double>(d_model));
  return AttentionParams(d_model, n_heads, uniform_matrix(d_model, d_model, sd, derive_seed(seed, 1)),
                         uniform_matrix(d_model, d_model, sd, derive_seed(seed, 2)),
                         uniform_matrix(d_model, d_model, sd, derive_seed(seed, 3)),
                         uniform_matrix(d_model, d_model, sd * output_gain, derive_seed(seed, 4)), seed);
}

AttentionParams::AttentionParams(std::size_t d_model, std::size_t n_heads, std::vector<float> wq,
                                 std::vector<float> wk, std::vector<float> wv, std::vector<float> wo,
                                 std::uint64_t seed)
    : d_model_(d_model),
      n_heads_(n_heads),
      wq_(std::move(wq)),
      wk_(std::move(wk)),
      wv_(std::move(wv)),
      wo_(std::move(wo)),
      seed_(seed) {
  if (d_model_ == 0 || n_heads_ == 0 || d_model_ % n_heads_ != 0) {
    throw std::invalid_argument("n_heads (" + std::to_string(n_heads_) + ") must divide d_model (" +
                                std::to_string(d_model_) + ")");
  }
  for (const auto* m : {&wq_, &wk_, &wv_, &wo_}) {
    if (m->size() != d_model_ * d_model_) throw std::invalid_argument("projection must be d_model x d_model");
    for (float v : *m) {
      if (!std::isfinite(v)) throw std::invalid_argument("projection weight is not finite");
    }
  }
}

TokenGrid multi_head_attention(const TokenGrid& q_src, const TokenGrid& kv_src, const AttentionParams& p,
                               AttentionProbabilities* probabilities) {
  const std::size_t d = p.d_model();
  if (q_src.d_model() != d || kv_src.d_model() != d) {
    throw DimensionError("attention: token width " + std::to_string(q_src.d_model()) + "/" +
                         std::to_string(kv_src.d_model()) + " does not match d_model " + std::to_string(d));
  }
  const std::size_t nq = q_src.token_count();
  const std::size_t nk = kv_src.token_count();
  if (nk == 0) throw DimensionError("attention: empty key/value source");
  const std::size_t heads = p.n_heads();
  const std::size_t dh = p.d_head();
  const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));

  std::vector<float> q(nq * d), k(nk * d), v(nk * d);
  matmul(q_src.data(), nq, d, p.wq(), d, q);
  matmul(kv_src.data(), nk, d, p.wk(), d, k);
  matmul(kv_src.data(), nk, d, p.wv(), d, v);

  if (probabilities) {
    probabilities->n_heads = heads;
    probabilities->q_tokens = nq;
    probabilities->kv_tokens = nk;
    probabilities->weights.assign(heads * nq * nk, 0.0f);
  }

  std::vector<float> context(nq * d, 0.0f);
  std::vector<float> row(nk);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < nq; ++i) {
      const float* qi = q.data() + i * d + off;
      float max_logit = -INFINITY;
      for (std::size_t j = 0; j < nk; ++j) {
        const float* kj = k.data() + j * d + off;
        float dot = 0.0f;
        for (std::size_t c = 0; c < dh; ++c) dot += qi[c] * kj[c];
        row[j] = dot * inv_sqrt_dh;
        max_logit = std::max(max_logit, row[j]);
      }
      float denom = 0.0f;
      for (std::size_t j = 0; j < nk; ++j) {
        row[j] = std::exp(row[j] - max_logit);
        denom += row[j];
      }
      for (std::size_t j = 0; j < nk; ++j) row[j] /= denom;
      if (probabilities) {
        std::copy(row.begin(), row.end(), probabilities->weights.begin() + (h * nq + i) * nk);
      }
      float* ci = context.data() + i * d + off;
      for (std::size_t j = 0; j < nk; ++j) {
        const float* vj = v.data() + j * d + off;
        for (std::size_t c = 0; c < dh; ++c) ci[c] += row[j] * vj[c];
      }
    }
  }

  TokenGrid out = TokenGrid::zeros(q_src.frames(), q_src.tokens_per_frame(), d);
  matmul(context, nq, d, p.wo(), d, out.data());
  return out;
}

TokenGrid temporal_attention(const TokenGrid& x, const AttentionParams& p) {
  if (x.d_model() != p.d_model()) {
    throw DimensionError("temporal attention: token width does not match d_model");
  }
  const std::size_t frames = x.frames();
  const std::size_t spatial = x.tokens_per_frame();
  const std::size_t d = x.d_model();
  TokenGrid out = TokenGrid::zeros(frames, spatial, d);
  TokenGrid column = TokenGrid::zeros(frames, 1, d);
  for (std::size_t s = 0; s < spatial; ++s) {
    for (std::size_t f = 0; f < frames; ++f) {
      const auto src = x.token(f * spatial + s);
      std::copy(src.begin(), src.end(), column.token(f).begin());
    }
    const TokenGrid attended = self_attention(column, p);
    for (std::size_t f = 0; f < frames; ++f) {
      const auto src = attended.token(f);
      std::copy(src.begin(), src.end(), out.token(f * spatial + s).begin());
    }
  }
  return out;
}

}  // namespace chai::model
