#include "fnd/training.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fnd/error.hpp"
#include "fnd/parallel.hpp"
#include "fnd/random.hpp"

namespace fnd {

namespace {

using json = nlohmann::ordered_json;

constexpr char kOptimMagic[8] = {'F', 'N', 'D', 'O', 'P', 'T', 'I', 'M'};
constexpr std::uint32_t kOptimVersion = 1;

void check_step_inputs(const ParameterSet& params, const ParameterSet& grads) {
  if (!params.same_shape(grads)) throw ValidationError("optimizer: gradient shapes do not match");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].allFinite()) {
      const auto& name = i < grads.names.size() ? grads.names[i] : std::to_string(i);
      throw NumericalError("non-finite gradient in " + name);
    }
  }
}

void adam_family_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
                      const TrainConfig& cfg, double weight_decay) {
  check_step_inputs(params, grads);
  if (!state.m.same_shape(params)) state.m = ParameterSet::zeros_like(params);
  if (!state.v.same_shape(params)) state.v = ParameterSet::zeros_like(params);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - cfg.learning_rate * weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].array();
    const auto g = grads[i].array();
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    if (weight_decay != 0.0) p *= decay;
    p -= cfg.learning_rate * (m / bias1) / ((v / bias2).sqrt() + cfg.eps);
  }
}

json config_json(const TrainConfig& c) {
  json j;
  j["optimizer"] = to_string(c.optimizer);
  j["learning_rate"] = c.learning_rate;
  j["max_epochs"] = c.max_epochs;
  j["batch_size"] = c.batch_size;
  j["dropout"] = c.dropout;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["early_stop_patience"] = c.early_stop_patience;
  j["seed"] = c.seed;
  j["grad_clip_norm"] = c.grad_clip_norm;
  return j;
}

}  // namespace

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::AdamW: return "adamw";
  }
  return "adamw";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "adamw") return OptimizerKind::AdamW;
  throw ValidationError("unknown optimizer '" + name + "' (expected sgd, adam or adamw)");
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("train config: " + m); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (early_stop_patience < 1) fail("patience must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    fail("betas must lie in [0, 1)");
  if (!(eps > 0.0)) fail("eps must be > 0");
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (grad_clip_norm < 0.0) fail("grad_clip_norm must be >= 0");
}

TrainConfig TrainConfig::toy() { return TrainConfig{}; }

TrainConfig TrainConfig::translated_preset() {
  TrainConfig c;
  c.learning_rate = 1e-5;
  c.max_epochs = 25;
  return c;
}

TrainConfig TrainConfig::collected_preset() {
  TrainConfig c;
  c.learning_rate = 1e-5;
  c.max_epochs = 10;
  c.dropout = 0.0;
  return c;
}

std::string TrainConfig::to_json() const { return config_json(*this).dump(2); }

TrainConfig TrainConfig::from_json(const std::string& text) { return from_json(text, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const std::string& text, TrainConfig c) {
  try {
    const auto j = json::parse(text);
    if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j["optimizer"].get<std::string>());
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.dropout = j.value("dropout", c.dropout);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.seed = j.value("seed", c.seed);
    c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

// ------------------------------------------------------ loss & optimizers

double cross_entropy(const Matrix& probabilities, const std::vector<Label>& labels) {
  if (static_cast<std::size_t>(probabilities.rows()) != labels.size() || probabilities.cols() != 2)
    throw ValidationError("cross_entropy: expected " + std::to_string(labels.size()) +
                          " x 2 probabilities");
  if (labels.empty()) throw ValidationError("cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b)
    total -= std::log(std::max(probabilities(b, to_int(labels[b])), 1e-12));
  return total / static_cast<double>(labels.size());
}

void sgd_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
              const TrainConfig& cfg) {
  check_step_inputs(params, grads);
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grads[i];
}

void adam_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
               const TrainConfig& cfg) {
  adam_family_step(params, grads, state, cfg, 0.0);
}

void adamw_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
                const TrainConfig& cfg) {
  adam_family_step(params, grads, state, cfg, cfg.weight_decay);
}

void optimizer_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& state,
                    const TrainConfig& cfg) {
  switch (cfg.optimizer) {
    case OptimizerKind::Sgd: return sgd_step(params, grads, state, cfg);
    case OptimizerKind::Adam: return adam_step(params, grads, state, cfg);
    case OptimizerKind::AdamW: return adamw_step(params, grads, state, cfg);
  }
}

double clip_gradients(ParameterSet& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads.tensors) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads.tensors) g *= scale;
  }
  return norm;
}

// -------------------------------------------------------- early stopping

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw ValidationError("patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double accuracy) {
  if (accuracy > best_accuracy_) {
    best_accuracy_ = accuracy;
    best_epoch_ = epoch;
    epochs_since_improvement_ = 0;
    return true;
  }
  ++epochs_since_improvement_;
  return false;
}

// ------------------------------------------------------------ train loop

EncodedSet encode_dataset(const Dataset& d, const Vocabulary& v, std::size_t max_len) {
  EncodedSet out;
  out.encodings.resize(d.size());
  out.labels.reserve(d.size());
  parallel_for(d.size(), [&](std::size_t i) {
    out.encodings[i] = encode(d.documents[i].text, v, max_len);
  });
  for (const auto& doc : d.documents) out.labels.push_back(doc.label);
  return out;
}

double accuracy(const ParameterSet& params, const ModelConfig& cfg, const EncodedSet& set) {
  if (set.size() == 0) throw ValidationError("accuracy of an empty set is undefined");
  constexpr std::size_t kEvalBatch = 256;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < set.size(); begin += kEvalBatch) {
    const std::size_t end = std::min(set.size(), begin + kEvalBatch);
    const std::vector<Encoding> batch(set.encodings.begin() + static_cast<std::ptrdiff_t>(begin),
                                      set.encodings.begin() + static_cast<std::ptrdiff_t>(end));
    const auto preds = predict(params, cfg, batch);
    for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].label == set.labels[begin + i];
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

TrainResult train_encoded(const ModelConfig& model_cfg, const EncodedSet& train_set,
                          const EncodedSet& validation_set, const TrainConfig& cfg,
                          const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.size() == 0) throw ValidationError("training split is empty");
  if (validation_set.size() == 0 && !hooks.validation)
    throw ValidationError("validation split is empty");

  TrainResult result;
  result.model_config = model_cfg;
  result.model_config.head_dropout = cfg.dropout;
  const auto& mcfg = result.model_config;
  mcfg.validate();

  ParameterSet params = init_params(mcfg, cfg.seed);
  auto& state = result.state;
  EarlyStopping stopper(cfg.early_stop_patience);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng::Generator shuffler(rng::mix(cfg.seed, 0x5348554646ULL, epoch));
    shuffler.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<Encoding> batch;
      std::vector<Label> labels;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(train_set.encodings[order[i]]);
        labels.push_back(train_set.labels[order[i]]);
      }
      const std::size_t step = state.loss_log.size() + 1;
      const auto trace = forward(params, mcfg, batch, true, rng::mix(cfg.seed, step));
      const double loss = cross_entropy(trace.probabilities, labels);
      if (!std::isfinite(loss))
        throw NumericalError("non-finite loss at step " + std::to_string(step));
      auto grads = backward(trace, params, mcfg, labels);
      if (cfg.grad_clip_norm > 0.0) clip_gradients(grads, cfg.grad_clip_norm);
      optimizer_step(params, grads, state.optimizer, cfg);
      if (!params.all_finite())
        throw NumericalError("non-finite parameters after step " + std::to_string(step));
      state.loss_log.push_back({step, epoch, loss});
      epoch_loss += loss;
      ++epoch_steps;
    }

    const double val = hooks.validation ? hooks.validation(epoch, params)
                                        : accuracy(params, mcfg, validation_set);
    state.epochs_run = epoch;
    result.epochs.push_back({epoch, val, epoch_loss / static_cast<double>(epoch_steps)});
    if (stopper.observe(epoch, val)) result.params = params;
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, params);
    if (stopper.should_stop()) break;
  }
  state.best_val_accuracy = stopper.best_accuracy();
  state.best_epoch = stopper.best_epoch();
  state.epochs_since_improvement = stopper.epochs_since_improvement();
  result.final_params = std::move(params);
  return result;
}

TrainResult train(const ModelConfig& model_cfg, const Dataset& dataset, const SplitSpec& split,
                  const TrainConfig& cfg, const Vocabulary& vocab, const TrainHooks& hooks) {
  if (vocab.size() != model_cfg.vocab_size)
    throw ValidationError("model vocab_size " + std::to_string(model_cfg.vocab_size) +
                          " does not match vocabulary size " + std::to_string(vocab.size()));
  const auto parts = split_train_test(dataset, split);
  const auto train_set = encode_dataset(parts.train, vocab, model_cfg.max_len);
  const auto test_set = encode_dataset(parts.test, vocab, model_cfg.max_len);
  return train_encoded(model_cfg, train_set, test_set, cfg, hooks);
}

// ------------------------------------------------------------------ logs

std::string loss_log_csv(const std::vector<LossRecord>& log) {
  std::string out = "step,epoch,loss\n";
  char buf[96];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g\n", r.step, r.epoch, r.loss);
    out += buf;
  }
  return out;
}

std::string epoch_log_csv(const std::vector<EpochMetrics>& epochs) {
  std::string out = "epoch,val_accuracy\n";
  char buf[64];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", e.epoch, e.val_accuracy);
    out += buf;
  }
  return out;
}

// ----------------------------------------------------------- checkpoints

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void write_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint64_t read_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw IoError("truncated checkpoint");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& model_cfg,
                     const ParameterSet& params, const OptimizerState& opt,
                     const TrainConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_model(out, model_cfg, params);
  json header;
  header["optimizer"] = to_string(cfg.optimizer);
  header["step"] = opt.step;
  header["has_moments"] = opt.m.same_shape(params) && opt.v.same_shape(params);
  header["train_config"] = config_json(cfg);
  const auto text = header.dump();
  out.write(kOptimMagic, sizeof(kOptimMagic));
  write_u32(out, kOptimVersion);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (header["has_moments"].get<bool>()) {
    write_tensors_f32(out, opt.m);
    write_tensors_f32(out, opt.v);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ModelConfig& model_cfg,
                     ParameterSet& params, OptimizerState& opt, TrainConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  read_model(in, model_cfg, params);
  char magic[sizeof(kOptimMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kOptimMagic, sizeof(magic)) != 0)
    throw ValidationError(path.string() + ": missing optimizer state");
  if (read_uint(in, 4) != kOptimVersion)
    throw ValidationError(path.string() + ": unsupported optimizer state version");
  const auto length = read_uint(in, 8);
  if (length > (1u << 24)) throw ValidationError(path.string() + ": optimizer header too large");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw IoError("truncated checkpoint " + path.string());
  const auto header = json::parse(text);
  cfg = TrainConfig::from_json(header.at("train_config").dump());
  opt = OptimizerState{};
  opt.step = header.at("step").get<std::size_t>();
  if (header.at("has_moments").get<bool>()) {
    opt.m = ParameterSet::zeros_like(params);
    opt.v = ParameterSet::zeros_like(params);
    read_tensors_f32(in, opt.m);
    read_tensors_f32(in, opt.v);
  }
}

}  // namespace fnd
