#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fnd/corpus.hpp"
#include "fnd/model.hpp"
#include "fnd/tokenizer.hpp"

namespace fnd {

enum class OptimizerKind { Sgd, Adam, AdamW };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 10;
  std::size_t batch_size = 32;
  double dropout = 0.1;  // copied into ModelConfig::head_dropout
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t early_stop_patience = 2;
  std::uint64_t seed = 42;
  double grad_clip_norm = 0.0;  // 0 disables clipping

  /// Throws ValidationError on out-of-range values.
  void validate() const;

  /// Desk-scale defaults (lr 1e-3).
  static TrainConfig toy();
  /// Translated-corpus runs: 25 epochs, lr 1e-5.
  static TrainConfig translated_preset();
  /// Collected-corpus runs: AdamW without dropout, 10 epochs, lr 1e-5.
  static TrainConfig collected_preset();

  std::string to_json() const;
  /// Missing keys keep the values already in `base`.
  static TrainConfig from_json(const std::string& json, TrainConfig base);
  static TrainConfig from_json(const std::string& json);
};

struct OptimizerState {
  std::size_t step = 0;
  ParameterSet m;  // first moments (adam family)
  ParameterSet v;  // second moments
};

/// Mean of -log(max(p[label], 1e-12)). Throws ValidationError on shape mismatch.
double cross_entropy(const Matrix& probabilities, const std::vector<Label>& labels);

/// Each step validates shapes and throws NumericalError naming the first
/// tensor whose gradient is not finite.
void sgd_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
              const TrainConfig& cfg);
/// AdamW with weight_decay forced to zero.
void adam_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
               const TrainConfig& cfg);
/// Decoupled weight decay: p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps).
void adamw_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
                const TrainConfig& cfg);
void optimizer_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
                    const TrainConfig& cfg);

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradients(ParameterSet& grads, double max_norm);

/// Patience-based stopping on validation accuracy. An epoch improves only
/// when its accuracy is strictly above the best so far.
class EarlyStopping {
public:
  explicit EarlyStopping(std::size_t patience);

  /// Returns true when this epoch is the new best.
  bool observe(std::size_t epoch, double accuracy);
  bool should_stop() const { return epochs_since_improvement_ >= patience_; }

  std::size_t best_epoch() const { return best_epoch_; }
  double best_accuracy() const { return best_accuracy_; }
  std::size_t epochs_since_improvement() const { return epochs_since_improvement_; }

private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_accuracy_ = -1.0;
  std::size_t epochs_since_improvement_ = 0;
};

struct LossRecord {
  std::size_t step = 0;   // 1-based optimizer step
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double val_accuracy = 0.0;
  double mean_train_loss = 0.0;
};

struct TrainState {
  std::size_t epochs_run = 0;
  std::vector<LossRecord> loss_log;
  double best_val_accuracy = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_since_improvement = 0;
  OptimizerState optimizer;
};

struct TrainResult {
  ModelConfig model_config;     // with the dropout actually used
  ParameterSet params;          // best-validation snapshot
  ParameterSet final_params;    // parameters after the last epoch
  TrainState state;
  std::vector<EpochMetrics> epochs;
};

struct EncodedSet {
  std::vector<Encoding> encodings;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
};

EncodedSet encode_dataset(const Dataset& d, const Vocabulary& v, std::size_t max_len);

struct TrainHooks {
  /// Replaces the built-in validation accuracy when set.
  std::function<double(std::size_t epoch, const ParameterSet& params)> validation;
  /// Called after every epoch with the current parameters.
  std::function<void(std::size_t epoch, const ParameterSet& params)> on_epoch_end;
};

/// Accuracy of predict() against the labels.
double accuracy(const ParameterSet& params, const ModelConfig& cfg, const EncodedSet& set);

/// Shuffled mini-batches (permutation seeded per epoch), one optimizer step
/// per batch, validation after each epoch, early stopping, best snapshot.
/// Throws ValidationError on an empty split and NumericalError on a
/// non-finite loss.
TrainResult train_encoded(const ModelConfig& model_cfg, const EncodedSet& train_set,
                          const EncodedSet& validation_set, const TrainConfig& cfg,
                          const TrainHooks& hooks = {});

/// Splits the dataset, encodes both parts and trains. The test part doubles
/// as the validation set for early stopping.
TrainResult train(const ModelConfig& model_cfg, const Dataset& dataset, const SplitSpec& split,
                  const TrainConfig& cfg, const Vocabulary& vocab,
                  const TrainHooks& hooks = {});

/// "step,epoch,loss" and "epoch,val_accuracy" CSV logs.
std::string loss_log_csv(const std::vector<LossRecord>& log);
std::string epoch_log_csv(const std::vector<EpochMetrics>& epochs);

/// Model file followed by "FNDOPTIM", u32 version, u64 header length, JSON
/// header (optimizer, step, train config) and the m then v tensors as float32.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& model_cfg,
                     const ParameterSet& params, const OptimizerState& opt,
                     const TrainConfig& cfg);
void load_checkpoint(const std::filesystem::path& path, ModelConfig& model_cfg,
                     ParameterSet& params, OptimizerState& opt, TrainConfig& cfg);

}  // namespace fnd
