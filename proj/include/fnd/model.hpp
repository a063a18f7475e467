#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fnd/corpus.hpp"
#include "fnd/tokenizer.hpp"

namespace fnd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct ModelConfig {
  std::size_t vocab_size = 2000;
  std::size_t max_len = 128;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  /// Output widths of the first two head linear layers; the third maps to
  /// n_classes.
  std::array<std::size_t, 2> head_hidden = {64, 32};
  double head_dropout = 0.1;
  double encoder_dropout = 0.0;
  std::size_t n_classes = 2;
  double layer_norm_eps = 1e-12;
  double init_std = 0.02;

  /// Desk-scale default.
  static ModelConfig toy(std::size_t vocab_size);
  /// BERT-base dimensions: 12 layers, 12 heads, 768 hidden.
  static ModelConfig bert_base(std::size_t vocab_size);

  /// Throws ValidationError on inconsistent dimensions or probabilities.
  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& json);

  bool operator==(const ModelConfig&) const = default;
};

/// Position of each tensor in the flat enumeration:
///   0 embeddings.token [vocab x d], 1 embeddings.position [max_len x d],
///   then per layer 16 tensors (query/key/value/output weight+bias,
///   attention layer-norm gain+bias, ffn in/out weight+bias, ffn layer-norm
///   gain+bias), then head.linear{0,1,2}.{weight,bias}.
/// Linear weights are [in x out] and act on row vectors: y = x W + b.
struct ParamIndex {
  enum Layer : std::size_t {
    kQueryW, kQueryB, kKeyW, kKeyB, kValueW, kValueB, kOutW, kOutB,
    kAttnNormGain, kAttnNormBias, kFfnInW, kFfnInB, kFfnOutW, kFfnOutB,
    kFfnNormGain, kFfnNormBias, kPerLayer
  };
  static constexpr std::size_t kTokenEmbedding = 0;
  static constexpr std::size_t kPositionEmbedding = 1;

  static std::size_t layer(std::size_t l, Layer which) { return 2 + l * kPerLayer + which; }
  static std::size_t head_weight(std::size_t n_layers, std::size_t k) {
    return 2 + n_layers * kPerLayer + 2 * k;
  }
  static std::size_t head_bias(std::size_t n_layers, std::size_t k) {
    return head_weight(n_layers, k) + 1;
  }
  static std::size_t count(std::size_t n_layers) { return 2 + n_layers * kPerLayer + 6; }
};

/// All trainable tensors in enumeration order. Gradients use the same type.
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Matrix> tensors;

  /// Same names and shapes, all zeros.
  static ParameterSet zeros_like(const ParameterSet& other);
  /// Names and shapes implied by the config, all zeros.
  static ParameterSet zeros(const ModelConfig& cfg);

  std::size_t size() const { return tensors.size(); }
  std::size_t scalar_count() const;
  Matrix& operator[](std::size_t i) { return tensors[i]; }
  const Matrix& operator[](std::size_t i) const { return tensors[i]; }
  bool all_finite() const;
  bool same_shape(const ParameterSet& other) const;

  bool operator==(const ParameterSet& o) const;
};

/// Truncated normal (std cfg.init_std, cut at 2 std) weights and embeddings,
/// zero biases, unit layer-norm gains. Deterministic per seed.
ParameterSet init_params(const ModelConfig& cfg, std::uint64_t seed);

struct LayerCache {
  Matrix input;                 // L x d
  Matrix q, k, v;               // L x d
  std::vector<Matrix> attention;  // per head, L x L softmax weights
  Matrix context;               // L x d
  Matrix attn_dropout;          // L x d scale factors, empty = identity
  Matrix attn_norm_xhat;        // L x d
  Eigen::VectorXd attn_norm_rstd;  // L
  Matrix attn_norm_out;         // L x d
  Matrix ffn_pre;               // L x d_ff, before GELU
  Matrix ffn_act;               // L x d_ff
  Matrix ffn_dropout;
  Matrix ffn_norm_xhat;
  Eigen::VectorXd ffn_norm_rstd;
};

struct ExampleCache {
  std::vector<TokenId> ids;  // non-pad prefix
  Matrix embedding_dropout;
  std::vector<LayerCache> layers;
  Matrix output;  // L x d, final hidden states
  RowVector pooled;
  std::array<RowVector, 3> head_pre;      // linear outputs
  std::array<RowVector, 3> head_dropout;  // scale factors, empty = identity
  std::array<RowVector, 2> head_relu;     // relu outputs
};

struct ForwardTrace {
  Matrix logits;         // batch x 2 (after the last dropout)
  Matrix probabilities;  // batch x 2
  std::vector<ExampleCache> examples;
  bool train_mode = false;
  std::size_t head_relu_applications = 0;
};

/// Runs the encoder over the non-pad prefix of every encoding and the head
/// Linear-Dropout-ReLU-Linear-Dropout-ReLU-Linear-Dropout-Softmax on the
/// first position. Dropout is active only in train mode and its masks are a
/// pure function of (dropout_seed, example index, site, element).
/// Throws ValidationError on an empty batch, out-of-range ids or a non-pad
/// prefix longer than cfg.max_len.
ForwardTrace forward(const ParameterSet& params, const ModelConfig& cfg,
                     const std::vector<Encoding>& batch, bool train_mode = false,
                     std::uint64_t dropout_seed = 0);

/// Exact gradients of the mean cross-entropy of `trace` against `labels`.
ParameterSet backward(const ForwardTrace& trace, const ParameterSet& params,
                      const ModelConfig& cfg, const std::vector<Label>& labels);

struct Prediction {
  Label label = Label::Real;
  double confidence = 0.0;
};

/// argmax of probabilities (ties to Real) with dropout disabled.
std::vector<Prediction> predict(const ParameterSet& params, const ModelConfig& cfg,
                                const std::vector<Encoding>& batch);
Prediction prediction_from_probabilities(double p_real, double p_fake);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// "FNDMODEL" + u32 version + u64 header length + JSON header (config and
/// tensor manifest) + every tensor as little-endian float32 in enumeration
/// order, row-major.
void write_model(std::ostream& out, const ModelConfig& cfg, const ParameterSet& params);
void read_model(std::istream& in, ModelConfig& cfg, ParameterSet& params);
void save_model(const std::filesystem::path& path, const ModelConfig& cfg,
                const ParameterSet& params);
void load_model(const std::filesystem::path& path, ModelConfig& cfg, ParameterSet& params);

/// Writes/reads tensors as little-endian float32 (shapes known to the reader).
void write_tensors_f32(std::ostream& out, const ParameterSet& params);
void read_tensors_f32(std::istream& in, ParameterSet& params);

}  // namespace fnd
