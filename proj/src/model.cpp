#include "fnd/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "fnd/error.hpp"
#include "fnd/parallel.hpp"
#include "fnd/random.hpp"

namespace fnd {

namespace {

using json = nlohmann::ordered_json;

constexpr char kModelMagic[8] = {'F', 'N', 'D', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

// Dropout sites, mixed into the mask hash.
constexpr std::uint64_t kSiteEmbedding = 0;
std::uint64_t site_attention(std::size_t l) { return 1 + 2 * l; }
std::uint64_t site_ffn(std::size_t l) { return 2 + 2 * l; }
std::uint64_t site_head(std::size_t k) { return 1000 + k; }

/// Inverted-dropout scale factors (0 or 1/(1-p)); empty when inactive.
Matrix dropout_mask(std::size_t rows, std::size_t cols, double p, bool active,
                    std::uint64_t seed, std::size_t example, std::uint64_t site) {
  if (!active || p <= 0.0) return {};
  Matrix m(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    const double u = rng::to_unit(rng::mix(seed, example, site, i));
    m.data()[i] = u < p ? 0.0 : scale;
  }
  return m;
}

template <typename M>
void apply_mask(M& x, const Matrix& mask) {
  if (mask.size() == 0) return;
  x.array() *= mask.array();
}

void apply_mask(RowVector& x, const RowVector& mask) {
  if (mask.size() == 0) return;
  x.array() *= mask.array();
}

RowVector row_mask(const Matrix& m) {
  if (m.size() == 0) return {};
  return m.row(0);
}

struct NormResult {
  Matrix out;
  Matrix xhat;
  Eigen::VectorXd rstd;
};

NormResult layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps) {
  NormResult r;
  const auto d = static_cast<double>(x.cols());
  r.xhat.resize(x.rows(), x.cols());
  r.rstd.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mean).square().sum() / d;
    r.rstd(i) = 1.0 / std::sqrt(var + eps);
    r.xhat.row(i) = (x.row(i).array() - mean) * r.rstd(i);
  }
  r.out = (r.xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  return r;
}

/// Returns d(input); accumulates gain and bias gradients.
Matrix layer_norm_backward(const Matrix& dout, const Matrix& xhat, const Eigen::VectorXd& rstd,
                           const Matrix& gain, Matrix& dgain, Matrix& dbias) {
  dgain.row(0) += (dout.array() * xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dout.colwise().sum();
  const Matrix dxhat = dout.array().rowwise() * gain.row(0).array();
  Matrix dx(dout.rows(), dout.cols());
  const auto d = static_cast<double>(dout.cols());
  for (Eigen::Index i = 0; i < dout.rows(); ++i) {
    const double mean_dxhat = dxhat.row(i).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(i).dot(xhat.row(i)) / d;
    dx.row(i) =
        rstd(i) * (dxhat.row(i).array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b) {
  return (x * w).rowwise() + b.row(0);
}

RowVector linear(const RowVector& x, const Matrix& w, const Matrix& b) {
  return x * w + b.row(0);
}

void check_batch(const ModelConfig& cfg, const std::vector<Encoding>& batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& enc = batch[b];
    if (enc.ids.size() != enc.attention_mask.size())
      throw ValidationError("encoding " + std::to_string(b) + ": ids/mask length mismatch");
    const std::size_t len = enc.length();
    if (len == 0) throw ValidationError("encoding " + std::to_string(b) + " has no tokens");
    if (len > cfg.max_len)
      throw ValidationError("encoding " + std::to_string(b) + " longer than max_len " +
                            std::to_string(cfg.max_len));
    for (std::size_t i = 0; i < len; ++i) {
      if (enc.ids[i] < 0 || static_cast<std::size_t>(enc.ids[i]) >= cfg.vocab_size)
        throw ValidationError("token id " + std::to_string(enc.ids[i]) +
                              " out of range in encoding " + std::to_string(b));
    }
  }
}

struct ExampleOutput {
  ExampleCache cache;
  RowVector logits;
  std::size_t relu_count = 0;
};

ExampleOutput forward_one(const ParameterSet& p, const ModelConfig& cfg, const Encoding& enc,
                          bool train, std::uint64_t seed, std::size_t example) {
  ExampleOutput out;
  auto& c = out.cache;
  const std::size_t len = enc.length();
  const std::size_t d = cfg.d_model;
  const std::size_t dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.ids.assign(enc.ids.begin(), enc.ids.begin() + static_cast<std::ptrdiff_t>(len));

  Matrix x(len, d);
  const auto& tok = p[ParamIndex::kTokenEmbedding];
  const auto& pos = p[ParamIndex::kPositionEmbedding];
  for (std::size_t i = 0; i < len; ++i) x.row(i) = tok.row(c.ids[i]) + pos.row(i);
  c.embedding_dropout =
      dropout_mask(len, d, cfg.encoder_dropout, train, seed, example, kSiteEmbedding);
  apply_mask(x, c.embedding_dropout);

  c.layers.resize(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    auto& lc = c.layers[l];
    auto P = [&](ParamIndex::Layer which) -> const Matrix& { return p[ParamIndex::layer(l, which)]; };
    lc.input = x;
    lc.q = linear(x, P(ParamIndex::kQueryW), P(ParamIndex::kQueryB));
    lc.k = linear(x, P(ParamIndex::kKeyW), P(ParamIndex::kKeyB));
    lc.v = linear(x, P(ParamIndex::kValueW), P(ParamIndex::kValueB));
    lc.context.resize(len, d);
    lc.attention.resize(cfg.n_heads);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const auto qh = lc.q.middleCols(h * dh, dh);
      const auto kh = lc.k.middleCols(h * dh, dh);
      const auto vh = lc.v.middleCols(h * dh, dh);
      lc.attention[h] = softmax_rows((qh * kh.transpose()) * scale);
      lc.context.middleCols(h * dh, dh) = lc.attention[h] * vh;
    }
    Matrix attn_out = linear(lc.context, P(ParamIndex::kOutW), P(ParamIndex::kOutB));
    lc.attn_dropout =
        dropout_mask(len, d, cfg.encoder_dropout, train, seed, example, site_attention(l));
    apply_mask(attn_out, lc.attn_dropout);
    auto n1 = layer_norm(x + attn_out, P(ParamIndex::kAttnNormGain), P(ParamIndex::kAttnNormBias),
                         cfg.layer_norm_eps);
    lc.attn_norm_xhat = std::move(n1.xhat);
    lc.attn_norm_rstd = std::move(n1.rstd);
    lc.attn_norm_out = std::move(n1.out);

    lc.ffn_pre = linear(lc.attn_norm_out, P(ParamIndex::kFfnInW), P(ParamIndex::kFfnInB));
    lc.ffn_act = lc.ffn_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix ffn_out = linear(lc.ffn_act, P(ParamIndex::kFfnOutW), P(ParamIndex::kFfnOutB));
    lc.ffn_dropout = dropout_mask(len, d, cfg.encoder_dropout, train, seed, example, site_ffn(l));
    apply_mask(ffn_out, lc.ffn_dropout);
    auto n2 = layer_norm(lc.attn_norm_out + ffn_out, P(ParamIndex::kFfnNormGain),
                         P(ParamIndex::kFfnNormBias), cfg.layer_norm_eps);
    lc.ffn_norm_xhat = std::move(n2.xhat);
    lc.ffn_norm_rstd = std::move(n2.rstd);
    x = std::move(n2.out);
  }
  c.output = x;
  c.pooled = x.row(0);

  // Head: (Linear, Dropout, ReLU) x 2, then Linear, Dropout.
  RowVector h = c.pooled;
  for (std::size_t k = 0; k < 3; ++k) {
    c.head_pre[k] = linear(h, p[ParamIndex::head_weight(cfg.n_layers, k)],
                           p[ParamIndex::head_bias(cfg.n_layers, k)]);
    c.head_dropout[k] = row_mask(dropout_mask(1, c.head_pre[k].size(), cfg.head_dropout, train,
                                              seed, example, site_head(k)));
    h = c.head_pre[k];
    apply_mask(h, c.head_dropout[k]);
    if (k < 2) {
      h = h.cwiseMax(0.0);
      c.head_relu[k] = h;
      ++out.relu_count;
    }
  }
  out.logits = h;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

ModelConfig ModelConfig::toy(std::size_t vocab_size) {
  ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  return cfg;
}

ModelConfig ModelConfig::bert_base(std::size_t vocab_size) {
  ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.max_len = 512;
  cfg.d_model = 768;
  cfg.n_layers = 12;
  cfg.n_heads = 12;
  cfg.d_ff = 3072;
  cfg.head_hidden = {768, 256};
  return cfg;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("model config: " + m); };
  if (vocab_size < kNumSpecialTokens) fail("vocab_size too small");
  if (max_len < 3) fail("max_len must be >= 3");
  if (d_model == 0 || n_heads == 0 || n_layers == 0 || d_ff == 0) fail("zero dimension");
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (head_hidden[0] == 0 || head_hidden[1] == 0) fail("zero head width");
  if (!(head_dropout >= 0.0 && head_dropout < 1.0)) fail("head_dropout must lie in [0, 1)");
  if (!(encoder_dropout >= 0.0 && encoder_dropout < 1.0))
    fail("encoder_dropout must lie in [0, 1)");
  if (n_classes != 2) fail("n_classes must be 2");
  if (!(layer_norm_eps > 0.0)) fail("layer_norm_eps must be positive");
  if (!(init_std > 0.0)) fail("init_std must be positive");
}

std::string ModelConfig::to_json() const {
  json j;
  j["vocab_size"] = vocab_size;
  j["max_len"] = max_len;
  j["d_model"] = d_model;
  j["n_layers"] = n_layers;
  j["n_heads"] = n_heads;
  j["d_ff"] = d_ff;
  j["head_hidden"] = {head_hidden[0], head_hidden[1]};
  j["head_dropout"] = head_dropout;
  j["encoder_dropout"] = encoder_dropout;
  j["n_classes"] = n_classes;
  j["layer_norm_eps"] = layer_norm_eps;
  j["init_std"] = init_std;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    const auto j = json::parse(text);
    cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
    cfg.max_len = j.value("max_len", cfg.max_len);
    cfg.d_model = j.value("d_model", cfg.d_model);
    cfg.n_layers = j.value("n_layers", cfg.n_layers);
    cfg.n_heads = j.value("n_heads", cfg.n_heads);
    cfg.d_ff = j.value("d_ff", cfg.d_ff);
    if (j.contains("head_hidden")) {
      const auto& hh = j["head_hidden"];
      if (!hh.is_array() || hh.size() != 2)
        throw ValidationError("model config: head_hidden needs two widths");
      cfg.head_hidden = {hh[0].get<std::size_t>(), hh[1].get<std::size_t>()};
    }
    cfg.head_dropout = j.value("head_dropout", cfg.head_dropout);
    cfg.encoder_dropout = j.value("encoder_dropout", cfg.encoder_dropout);
    cfg.n_classes = j.value("n_classes", cfg.n_classes);
    cfg.layer_norm_eps = j.value("layer_norm_eps", cfg.layer_norm_eps);
    cfg.init_std = j.value("init_std", cfg.init_std);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

// ------------------------------------------------------------ parameters

ParameterSet ParameterSet::zeros(const ModelConfig& cfg) {
  cfg.validate();
  ParameterSet p;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    p.names.push_back(std::move(name));
    p.tensors.push_back(Matrix::Zero(rows, cols));
  };
  const std::size_t d = cfg.d_model;
  add("embeddings.token", cfg.vocab_size, d);
  add("embeddings.position", cfg.max_len, d);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string base = "layer" + std::to_string(l) + ".";
    for (const char* proj : {"query", "key", "value", "output"}) {
      add(base + "attention." + proj + ".weight", d, d);
      add(base + "attention." + proj + ".bias", 1, d);
    }
    add(base + "attention.norm.gain", 1, d);
    add(base + "attention.norm.bias", 1, d);
    add(base + "ffn.in.weight", d, cfg.d_ff);
    add(base + "ffn.in.bias", 1, cfg.d_ff);
    add(base + "ffn.out.weight", cfg.d_ff, d);
    add(base + "ffn.out.bias", 1, d);
    add(base + "ffn.norm.gain", 1, d);
    add(base + "ffn.norm.bias", 1, d);
  }
  const std::size_t widths[4] = {d, cfg.head_hidden[0], cfg.head_hidden[1], cfg.n_classes};
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string base = "head.linear" + std::to_string(k) + ".";
    add(base + "weight", widths[k], widths[k + 1]);
    add(base + "bias", 1, widths[k + 1]);
  }
  return p;
}

ParameterSet ParameterSet::zeros_like(const ParameterSet& other) {
  ParameterSet p;
  p.names = other.names;
  p.tensors.reserve(other.tensors.size());
  for (const auto& t : other.tensors) p.tensors.push_back(Matrix::Zero(t.rows(), t.cols()));
  return p;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

bool ParameterSet::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.allFinite()) return false;
  }
  return true;
}

bool ParameterSet::same_shape(const ParameterSet& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].rows() != other.tensors[i].rows() ||
        tensors[i].cols() != other.tensors[i].cols())
      return false;
  }
  return true;
}

bool ParameterSet::operator==(const ParameterSet& o) const {
  if (names != o.names || !same_shape(o)) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i] != o.tensors[i]) return false;
  }
  return true;
}

ParameterSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
  auto p = ParameterSet::zeros(cfg);
  rng::Generator gen(seed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& name = p.names[i];
    auto& t = p[i];
    const bool is_gain = name.ends_with(".gain");
    const bool is_bias = name.ends_with(".bias");
    if (is_gain) {
      t.setOnes();
    } else if (!is_bias) {
      for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = gen.truncated_normal(cfg.init_std);
    }
  }
  return p;
}

// --------------------------------------------------------------- forward

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

ForwardTrace forward(const ParameterSet& params, const ModelConfig& cfg,
                     const std::vector<Encoding>& batch, bool train_mode,
                     std::uint64_t dropout_seed) {
  cfg.validate();
  check_batch(cfg, batch);
  if (params.size() != ParamIndex::count(cfg.n_layers))
    throw ValidationError("parameter set does not match the model config");

  std::vector<ExampleOutput> outputs(batch.size());
  parallel_for(batch.size(), [&](std::size_t b) {
    outputs[b] = forward_one(params, cfg, batch[b], train_mode, dropout_seed, b);
  });

  ForwardTrace trace;
  trace.train_mode = train_mode;
  trace.logits.resize(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(cfg.n_classes));
  trace.examples.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    trace.logits.row(b) = outputs[b].logits;
    trace.head_relu_applications += outputs[b].relu_count;
    trace.examples.push_back(std::move(outputs[b].cache));
  }
  trace.probabilities = softmax_rows(trace.logits);
  return trace;
}

// -------------------------------------------------------------- backward

namespace {

// Adds the gradient of one example (given d loss / d logits) into `g`.
void backward_one(const ExampleCache& c, const ParameterSet& p, const ModelConfig& cfg,
                  const RowVector& dlogits, ParameterSet& g) {
  const std::size_t n_layers = cfg.n_layers;
  const std::size_t len = c.ids.size();
  const std::size_t dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Head, last layer first.
  RowVector grad = dlogits;
  for (std::size_t kk = 3; kk-- > 0;) {
    apply_mask(grad, c.head_dropout[kk]);  // grad is now d head_pre[kk]
    const RowVector& input = kk == 0 ? c.pooled : c.head_relu[kk - 1];
    const auto wi = ParamIndex::head_weight(n_layers, kk);
    g[wi].noalias() += input.transpose() * grad;
    g[ParamIndex::head_bias(n_layers, kk)].row(0) += grad;
    RowVector dinput = grad * p[wi].transpose();
    if (kk > 0) {
      // ReLU of the previous stage; its output is positive exactly where it passed.
      dinput = (c.head_relu[kk - 1].array() > 0.0).select(dinput.array(), 0.0).matrix();
    }
    grad = std::move(dinput);
  }

  Matrix dx = Matrix::Zero(len, cfg.d_model);
  dx.row(0) = grad;

  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& lc = c.layers[l];
    auto I = [&](ParamIndex::Layer which) { return ParamIndex::layer(l, which); };

    // Feed-forward sublayer: x_out = LN(y + dropout(gelu(y W1 + b1) W2 + b2)).
    Matrix dr2 = layer_norm_backward(dx, lc.ffn_norm_xhat, lc.ffn_norm_rstd,
                                     p[I(ParamIndex::kFfnNormGain)], g[I(ParamIndex::kFfnNormGain)],
                                     g[I(ParamIndex::kFfnNormBias)]);
    Matrix dffn_out = dr2;
    apply_mask(dffn_out, lc.ffn_dropout);
    g[I(ParamIndex::kFfnOutW)].noalias() += lc.ffn_act.transpose() * dffn_out;
    g[I(ParamIndex::kFfnOutB)].row(0) += dffn_out.colwise().sum();
    Matrix dpre = dffn_out * p[I(ParamIndex::kFfnOutW)].transpose();
    dpre.array() *= lc.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    g[I(ParamIndex::kFfnInW)].noalias() += lc.attn_norm_out.transpose() * dpre;
    g[I(ParamIndex::kFfnInB)].row(0) += dpre.colwise().sum();
    Matrix dy = dr2 + dpre * p[I(ParamIndex::kFfnInW)].transpose();

    // Attention sublayer: y = LN(x + dropout(attn(x) Wo + bo)).
    Matrix dr1 = layer_norm_backward(dy, lc.attn_norm_xhat, lc.attn_norm_rstd,
                                     p[I(ParamIndex::kAttnNormGain)],
                                     g[I(ParamIndex::kAttnNormGain)],
                                     g[I(ParamIndex::kAttnNormBias)]);
    Matrix dattn_out = dr1;
    apply_mask(dattn_out, lc.attn_dropout);
    g[I(ParamIndex::kOutW)].noalias() += lc.context.transpose() * dattn_out;
    g[I(ParamIndex::kOutB)].row(0) += dattn_out.colwise().sum();
    const Matrix dcontext = dattn_out * p[I(ParamIndex::kOutW)].transpose();

    Matrix dq(len, cfg.d_model), dk(len, cfg.d_model), dv(len, cfg.d_model);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const auto& a = lc.attention[h];
      const auto dctx_h = dcontext.middleCols(h * dh, dh);
      const Matrix da = dctx_h * lc.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = a.transpose() * dctx_h;
      const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      Matrix ds = a.array() * (da.array().colwise() - row_dot.array());
      ds *= scale;
      dq.middleCols(h * dh, dh) = ds * lc.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * lc.q.middleCols(h * dh, dh);
    }
    g[I(ParamIndex::kQueryW)].noalias() += lc.input.transpose() * dq;
    g[I(ParamIndex::kQueryB)].row(0) += dq.colwise().sum();
    g[I(ParamIndex::kKeyW)].noalias() += lc.input.transpose() * dk;
    g[I(ParamIndex::kKeyB)].row(0) += dk.colwise().sum();
    g[I(ParamIndex::kValueW)].noalias() += lc.input.transpose() * dv;
    g[I(ParamIndex::kValueB)].row(0) += dv.colwise().sum();
    dx = dr1;
    dx.noalias() += dq * p[I(ParamIndex::kQueryW)].transpose();
    dx.noalias() += dk * p[I(ParamIndex::kKeyW)].transpose();
    dx.noalias() += dv * p[I(ParamIndex::kValueW)].transpose();
  }

  apply_mask(dx, c.embedding_dropout);
  auto& dtok = g[ParamIndex::kTokenEmbedding];
  auto& dpos = g[ParamIndex::kPositionEmbedding];
  for (std::size_t i = 0; i < len; ++i) {
    dtok.row(c.ids[i]) += dx.row(i);
    dpos.row(i) += dx.row(i);
  }
}

// Examples per partial gradient. Partials are summed in chunk order, so the
// result does not depend on the number of worker threads.
constexpr std::size_t kBackwardChunk = 4;

}  // namespace

ParameterSet backward(const ForwardTrace& trace, const ParameterSet& params,
                      const ModelConfig& cfg, const std::vector<Label>& labels) {
  const std::size_t batch = trace.examples.size();
  if (labels.size() != batch)
    throw ValidationError("backward: " + std::to_string(labels.size()) + " labels for batch of " +
                          std::to_string(batch));
  if (batch == 0) throw ValidationError("backward: empty batch");
  if (static_cast<std::size_t>(trace.probabilities.rows()) != batch ||
      static_cast<std::size_t>(trace.probabilities.cols()) != cfg.n_classes)
    throw ValidationError("backward: trace shape does not match the batch");
  if (params.size() != ParamIndex::count(cfg.n_layers))
    throw ValidationError("backward: parameter set does not match the model config");

  // d mean CE / d logits = (p - onehot) / batch.
  Matrix dlogits = trace.probabilities;
  for (std::size_t b = 0; b < batch; ++b) dlogits(b, to_int(labels[b])) -= 1.0;
  dlogits /= static_cast<double>(batch);

  const std::size_t n_chunks = (batch + kBackwardChunk - 1) / kBackwardChunk;
  std::vector<ParameterSet> partial(n_chunks);
  parallel_for(n_chunks, [&](std::size_t chunk) {
    partial[chunk] = ParameterSet::zeros_like(params);
    const std::size_t end = std::min(batch, (chunk + 1) * kBackwardChunk);
    for (std::size_t b = chunk * kBackwardChunk; b < end; ++b)
      backward_one(trace.examples[b], params, cfg, dlogits.row(b), partial[chunk]);
  });
  ParameterSet grads = std::move(partial[0]);
  for (std::size_t chunk = 1; chunk < n_chunks; ++chunk) {
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += partial[chunk][i];
  }
  return grads;
}

// --------------------------------------------------------------- predict

Prediction prediction_from_probabilities(double p_real, double p_fake) {
  if (p_fake > p_real) return {Label::Fake, p_fake};
  return {Label::Real, p_real};
}

std::vector<Prediction> predict(const ParameterSet& params, const ModelConfig& cfg,
                                const std::vector<Encoding>& batch) {
  const auto trace = forward(params, cfg, batch, false, 0);
  std::vector<Prediction> out;
  out.reserve(batch.size());
  for (Eigen::Index b = 0; b < trace.probabilities.rows(); ++b)
    out.push_back(prediction_from_probabilities(trace.probabilities(b, 0),
                                                trace.probabilities(b, 1)));
  return out;
}

// --------------------------------------------------------- serialization

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw IoError("unexpected end of model data");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_tensors_f32(std::ostream& out, const ParameterSet& params) {
  for (const auto& t : params.tensors) {
    for (Eigen::Index k = 0; k < t.size(); ++k) write_le(out, static_cast<float>(t.data()[k]));
  }
}

void read_tensors_f32(std::istream& in, ParameterSet& params) {
  for (auto& t : params.tensors) {
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = read_le<float>(in);
  }
}

void write_model(std::ostream& out, const ModelConfig& cfg, const ParameterSet& params) {
  json header;
  header["config"] = json::parse(cfg.to_json());
  auto manifest = json::array();
  for (std::size_t i = 0; i < params.size(); ++i)
    manifest.push_back({{"name", params.names[i]},
                        {"shape", {params[i].rows(), params[i].cols()}}});
  header["tensors"] = std::move(manifest);
  header["dtype"] = "float32";
  const auto text = header.dump();
  out.write(kModelMagic, sizeof(kModelMagic));
  write_le<std::uint32_t>(out, kModelVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_tensors_f32(out, params);
}

void read_model(std::istream& in, ModelConfig& cfg, ParameterSet& params) {
  char magic[sizeof(kModelMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
    throw ValidationError("not a model file (bad magic)");
  const auto version = read_le<std::uint32_t>(in);
  if (version != kModelVersion)
    throw ValidationError("unsupported model file version " + std::to_string(version));
  const auto length = read_le<std::uint64_t>(in);
  if (length > (1u << 26)) throw ValidationError("model header too large");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw IoError("truncated model header");
  json header;
  try {
    header = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model header: ") + e.what());
  }
  cfg = ModelConfig::from_json(header.at("config").dump());
  params = ParameterSet::zeros(cfg);
  const auto& manifest = header.at("tensors");
  if (manifest.size() != params.size())
    throw ValidationError("model file tensor count does not match its config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = manifest[i];
    if (entry.at("name").get<std::string>() != params.names[i] ||
        entry.at("shape")[0].get<Eigen::Index>() != params[i].rows() ||
        entry.at("shape")[1].get<Eigen::Index>() != params[i].cols())
      throw ValidationError("model file tensor " + std::to_string(i) + " does not match config");
  }
  read_tensors_f32(in, params);
}

void save_model(const std::filesystem::path& path, const ModelConfig& cfg,
                const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_model(out, cfg, params);
  if (!out) throw IoError("write failed for " + path.string());
}

void load_model(const std::filesystem::path& path, ModelConfig& cfg, ParameterSet& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  read_model(in, cfg, params);
}

}  // namespace fnd
