#pragma once

// Reference implementations used as test oracles: a loop-based forward pass
// that shares no code with the library, and a central finite-difference
// gradient check.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fnd/model.hpp"
#include "fnd/random.hpp"
#include "fnd/training.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat get(const fnd::ParameterSet& p, const std::string& name) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.names[i] != name) continue;
    Mat m(p[i].rows(), std::vector<double>(p[i].cols()));
    for (Eigen::Index r = 0; r < p[i].rows(); ++r)
      for (Eigen::Index c = 0; c < p[i].cols(); ++c) m[r][c] = p[i](r, c);
    return m;
  }
  throw std::runtime_error("no tensor " + name);
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Mat affine(const Mat& x, const Mat& w, const Mat& bias) {
  auto out = matmul(x, w);
  for (auto& row : out)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[0][j];
  return out;
}

inline Mat add(Mat a, const Mat& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
  return a;
}

inline Mat norm(const Mat& x, const Mat& gain, const Mat& bias, double eps) {
  Mat out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mean = 0.0;
    for (double v : x[i]) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= n;
    for (std::size_t j = 0; j < x[i].size(); ++j)
      out[i][j] = (x[i][j] - mean) / std::sqrt(var + eps) * gain[0][j] + bias[0][j];
  }
  return out;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> e(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (e[i] = std::exp(z[i] - m));
  for (auto& v : e) v /= s;
  return e;
}

/// Eval-mode logits for one sequence of token ids (no padding).
inline std::vector<double> logits(const fnd::ParameterSet& p, const fnd::ModelConfig& cfg,
                                  const std::vector<int>& ids) {
  const std::size_t L = ids.size(), d = cfg.d_model, H = cfg.n_heads, dh = d / H;
  const auto tok = get(p, "embeddings.token");
  const auto pos = get(p, "embeddings.position");
  Mat x(L, std::vector<double>(d));
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < d; ++j) x[i][j] = tok[ids[i]][j] + pos[i][j];

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string b = "layer" + std::to_string(l) + ".";
    const auto q = affine(x, get(p, b + "attention.query.weight"), get(p, b + "attention.query.bias"));
    const auto k = affine(x, get(p, b + "attention.key.weight"), get(p, b + "attention.key.bias"));
    const auto v = affine(x, get(p, b + "attention.value.weight"), get(p, b + "attention.value.bias"));
    Mat ctx(L, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t i = 0; i < L; ++i) {
        std::vector<double> s(L);
        for (std::size_t j = 0; j < L; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += q[i][h * dh + c] * k[j][h * dh + c];
          s[j] = dot / std::sqrt(static_cast<double>(dh));
        }
        const auto a = softmax(s);
        for (std::size_t j = 0; j < L; ++j)
          for (std::size_t c = 0; c < dh; ++c) ctx[i][h * dh + c] += a[j] * v[j][h * dh + c];
      }
    }
    const auto attn = affine(ctx, get(p, b + "attention.output.weight"), get(p, b + "attention.output.bias"));
    const auto h1 = norm(add(x, attn), get(p, b + "attention.norm.gain"),
                         get(p, b + "attention.norm.bias"), cfg.layer_norm_eps);
    auto f = affine(h1, get(p, b + "ffn.in.weight"), get(p, b + "ffn.in.bias"));
    for (auto& row : f)
      for (auto& u : row) u = 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0)));
    const auto f2 = affine(f, get(p, b + "ffn.out.weight"), get(p, b + "ffn.out.bias"));
    x = norm(add(h1, f2), get(p, b + "ffn.norm.gain"), get(p, b + "ffn.norm.bias"),
             cfg.layer_norm_eps);
  }

  Mat z = {x[0]};
  for (int k = 0; k < 3; ++k) {
    const std::string b = "head.linear" + std::to_string(k) + ".";
    z = affine(z, get(p, b + "weight"), get(p, b + "bias"));
    if (k < 2)
      for (auto& u : z[0]) u = std::max(0.0, u);
  }
  return z[0];
}

/// Every tensor filled with N(0, scale^2); gains around 1.
inline fnd::ParameterSet random_params(const fnd::ModelConfig& cfg, std::uint64_t seed,
                                       double scale) {
  auto p = fnd::ParameterSet::zeros(cfg);
  fnd::rng::Generator g(seed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool gain = p.names[i].ends_with(".gain");
    for (Eigen::Index k = 0; k < p[i].size(); ++k)
      p[i].data()[k] = (gain ? 1.0 : 0.0) + scale * g.normal() * (gain ? 0.4 : 1.0);
  }
  return p;
}

inline fnd::Encoding encoding(const std::vector<int>& content, std::size_t max_len,
                              int cls = 2, int sep = 3) {
  fnd::Encoding e;
  e.ids.push_back(cls);
  for (int id : content) e.ids.push_back(id);
  e.ids.push_back(sep);
  e.attention_mask.assign(e.ids.size(), 1);
  while (e.ids.size() < max_len) {
    e.ids.push_back(0);
    e.attention_mask.push_back(0);
  }
  return e;
}

struct GroupError {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_grad = 0.0;
};

/// Relative error per element: |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// The floor keeps elements whose gradient is indistinguishable from zero
/// from dominating through finite-difference noise.
inline constexpr double kRelErrorFloor = 1e-4;

inline std::vector<GroupError> gradient_check(const fnd::ParameterSet& params,
                                              const fnd::ModelConfig& cfg,
                                              const std::vector<fnd::Encoding>& batch,
                                              const std::vector<fnd::Label>& labels,
                                              bool train_mode, std::uint64_t dropout_seed,
                                              double h = 1e-4) {
  const auto trace = fnd::forward(params, cfg, batch, train_mode, dropout_seed);
  const auto grads = fnd::backward(trace, params, cfg, labels);
  auto loss_at = [&](const fnd::ParameterSet& p) {
    return fnd::cross_entropy(fnd::forward(p, cfg, batch, train_mode, dropout_seed).probabilities,
                              labels);
  };
  std::vector<GroupError> out;
  auto probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    GroupError g;
    g.name = params.names[i];
    for (Eigen::Index k = 0; k < params[i].size(); ++k) {
      const double orig = probe[i].data()[k];
      probe[i].data()[k] = orig + h;
      const double up = loss_at(probe);
      probe[i].data()[k] = orig - h;
      const double down = loss_at(probe);
      probe[i].data()[k] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[i].data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
      g.max_rel_error = std::max(g.max_rel_error, std::abs(analytic - numeric) / denom);
      g.max_abs_grad = std::max(g.max_abs_grad, std::abs(analytic));
    }
    out.push_back(g);
  }
  return out;
}

/// Small config used by the gradient checks.
inline fnd::ModelConfig tiny_config() {
  fnd::ModelConfig c;
  c.vocab_size = 12;
  c.max_len = 7;
  c.d_model = 6;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 8;
  c.head_hidden = {5, 4};
  c.head_dropout = 0.3;
  c.encoder_dropout = 0.2;
  return c;
}

}  // namespace oracle
