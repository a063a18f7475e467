#include <doctest.h>

#include <cmath>

#include "fnd/error.hpp"
#include "fnd/random.hpp"
#include "fnd/synth.hpp"
#include "fnd/training.hpp"
#include "model_oracle.hpp"
#include "test_util.hpp"

using namespace fnd;

namespace {

ParameterSet scalar(double value) {
  ParameterSet p;
  p.names = {"w"};
  p.tensors = {Matrix::Constant(1, 1, value)};
  return p;
}

TrainConfig opt_config(OptimizerKind kind, double lr, double wd) {
  TrainConfig c;
  c.optimizer = kind;
  c.learning_rate = lr;
  c.weight_decay = wd;
  return c;
}

// Tokens 5..7 only ever occur in real documents, 8..10 in fake ones.
EncodedSet separable_set(std::size_t n, std::size_t max_len, std::uint64_t seed) {
  rng::Generator g(seed);
  EncodedSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = i % 2 ? Label::Fake : Label::Real;
    std::vector<int> content;
    const auto len = 1 + g.below(max_len - 2);
    for (std::size_t k = 0; k < len; ++k)
      content.push_back(static_cast<int>((label == Label::Fake ? 8 : 5) + g.below(3)));
    s.encodings.push_back(oracle::encoding(content, max_len));
    s.labels.push_back(label);
  }
  return s;
}

ModelConfig separable_model() {
  ModelConfig c;
  c.vocab_size = 11;
  c.max_len = 8;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 16;
  c.head_hidden = {8, 8};
  return c;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("cross entropy") {
  Matrix perfect(2, 2);
  perfect << 1.0, 0.0, 0.0, 1.0;
  CHECK(cross_entropy(perfect, {Label::Real, Label::Fake}) == 0.0);
  Matrix uniform = Matrix::Constant(3, 2, 0.5);
  CHECK(cross_entropy(uniform, {Label::Real, Label::Fake, Label::Fake}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));

  rng::Generator g(1);
  Matrix p(50, 2);
  std::vector<Label> labels;
  double expected = 0.0;
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double a = 0.01 + 0.98 * g.uniform();
    p(i, 0) = a;
    p(i, 1) = 1.0 - a;
    labels.push_back(g.below(2) ? Label::Fake : Label::Real);
    expected -= std::log(labels.back() == Label::Fake ? 1.0 - a : a);
  }
  expected /= 50.0;
  CHECK(std::abs(cross_entropy(p, labels) - expected) < 1e-12);
  CHECK(std::isfinite(cross_entropy(perfect, {Label::Fake, Label::Real})));
  CHECK_THROWS_AS(cross_entropy(p, {Label::Real}), ValidationError);
}

TEST_CASE("sgd") {
  auto p = scalar(2.0);
  OptimizerState st;
  sgd_step(p, scalar(1.0), st, opt_config(OptimizerKind::Sgd, 0.5, 0.0));
  CHECK(p[0](0, 0) == 1.5);

  auto w = scalar(1.0);
  OptimizerState s2;
  const auto cfg = opt_config(OptimizerKind::Sgd, 0.1, 0.0);
  for (int i = 0; i < 10; ++i) sgd_step(w, scalar(w[0](0, 0)), s2, cfg);
  CHECK(std::abs(w[0](0, 0) - std::pow(0.9, 10)) < 1e-12);
}

TEST_CASE("adamw single step") {
  // m_hat = g and v_hat = g^2 after one step, so the Adam part moves by lr.
  // Closed form: 1 - 0.1 * (1 / (1 + 1e-8) + 0.01 * 1), with decay applied to
  // the pre-step value.
  auto p = scalar(1.0);
  OptimizerState st;
  adamw_step(p, scalar(1.0), st, opt_config(OptimizerKind::AdamW, 0.1, 0.01));
  const double expected = 1.0 - 0.1 * (1.0 / (1.0 + 1e-8) + 0.01);
  CHECK(std::abs(p[0](0, 0) - expected) < 1e-12);
  CHECK(std::abs(p[0](0, 0) - 0.899000001) < 1e-10);
  CHECK(st.step == 1);

  auto q = scalar(1.0);
  OptimizerState sq;
  adamw_step(q, scalar(1.0), sq, opt_config(OptimizerKind::AdamW, 0.1, 0.0));
  CHECK(std::abs(q[0](0, 0) - 0.900000001) < 1e-10);
  CHECK(std::round(q[0](0, 0) * 1e7) / 1e7 == 0.9);
}

TEST_CASE("decoupled weight decay with zero gradient") {
  auto p = scalar(3.0);
  OptimizerState st;
  adamw_step(p, scalar(0.0), st, opt_config(OptimizerKind::AdamW, 0.1, 0.01));
  CHECK(p[0](0, 0) == doctest::Approx(3.0 * (1.0 - 0.1 * 0.01)).epsilon(1e-15));

  auto q = scalar(3.0);
  OptimizerState sq;
  adamw_step(q, scalar(0.0), sq, opt_config(OptimizerKind::AdamW, 0.1, 0.0));
  CHECK(q[0](0, 0) == 3.0);
  adam_step(q, scalar(0.0), sq, opt_config(OptimizerKind::Adam, 0.1, 0.0));
  CHECK(q[0](0, 0) == 3.0);
}

TEST_CASE("adam equals adamw without weight decay") {
  const auto cfg = oracle::tiny_config();
  auto a = oracle::random_params(cfg, 3, 1.0);
  auto b = a;
  OptimizerState sa, sb;
  rng::Generator g(4);
  for (int step = 0; step < 5; ++step) {
    auto grad = ParameterSet::zeros_like(a);
    for (auto& t : grad.tensors)
      for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = g.normal();
    adam_step(a, grad, sa, opt_config(OptimizerKind::Adam, 1e-2, 0.0));
    adamw_step(b, grad, sb, opt_config(OptimizerKind::AdamW, 1e-2, 0.0));
  }
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("optimizers reject non-finite gradients and name the tensor") {
  auto p = scalar(1.0);
  OptimizerState st;
  auto g = scalar(std::nan(""));
  for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::AdamW}) {
    try {
      optimizer_step(p, g, st, opt_config(kind, 0.1, 0.0));
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("w") != std::string::npos);
    }
  }
  CHECK(p[0](0, 0) == 1.0);
}

TEST_CASE("gradient clipping") {
  ParameterSet g;
  g.names = {"a", "b"};
  g.tensors = {Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 4.0)};
  CHECK(clip_gradients(g, 10.0) == doctest::Approx(5.0));
  CHECK(g[0](0, 0) == 3.0);
  clip_gradients(g, 1.0);
  CHECK(g[0](0, 0) == doctest::Approx(0.6));
  CHECK(g[1](0, 0) == doctest::Approx(0.8));
}

TEST_CASE("optimizer names") {
  CHECK(optimizer_from_string("adamw") == OptimizerKind::AdamW);
  CHECK(optimizer_from_string("sgd") == OptimizerKind::Sgd);
  CHECK(to_string(OptimizerKind::Adam) == "adam");
  CHECK_THROWS_AS(optimizer_from_string("rmsprop"), ValidationError);
}

TEST_CASE("early stopping bookkeeping") {
  EarlyStopping es(3);
  CHECK(es.observe(1, 0.5));
  CHECK(es.observe(2, 0.6));
  CHECK(es.observe(3, 0.7));
  CHECK(es.observe(4, 0.8));
  CHECK_FALSE(es.observe(5, 0.8));
  CHECK_FALSE(es.should_stop());
  CHECK_FALSE(es.observe(6, 0.7));
  CHECK_FALSE(es.observe(7, 0.79));
  CHECK(es.should_stop());
  CHECK(es.best_epoch() == 4);
  CHECK(es.best_accuracy() == 0.8);
}

TEST_CASE("training stops on a plateau and returns the best snapshot") {
  const auto model = separable_model();
  const auto data = separable_set(40, model.max_len, 1);
  auto cfg = TrainConfig::toy();
  cfg.max_epochs = 20;
  cfg.batch_size = 8;
  cfg.early_stop_patience = 3;
  const std::vector<double> script = {0.5, 0.6, 0.7, 0.8, 0.8, 0.75, 0.8, 0.9, 0.9};
  std::vector<ParameterSet> seen;
  TrainHooks hooks;
  hooks.validation = [&](std::size_t epoch, const ParameterSet&) { return script.at(epoch - 1); };
  hooks.on_epoch_end = [&](std::size_t, const ParameterSet& p) { seen.push_back(p); };
  const auto r = train_encoded(model, data, data, cfg, hooks);
  CHECK(r.state.epochs_run == 7);
  CHECK(r.state.best_epoch == 4);
  CHECK(r.state.best_val_accuracy == 0.8);
  REQUIRE(seen.size() == 7);
  CHECK(r.params == seen[3]);
  CHECK(r.final_params == seen[6]);
  REQUIRE(r.epochs.size() == 7);
  CHECK(r.epochs[4].val_accuracy == 0.8);
}

TEST_CASE("loss log length and determinism") {
  const auto model = separable_model();
  const auto data = separable_set(37, model.max_len, 2);
  auto cfg = TrainConfig::toy();
  cfg.max_epochs = 3;
  cfg.batch_size = 8;
  cfg.early_stop_patience = 100;
  const auto a = train_encoded(model, data, data, cfg);
  const auto b = train_encoded(model, data, data, cfg);
  CHECK(a.state.loss_log.size() == 3 * 5);
  CHECK(a.state.loss_log.back().step == 15);
  CHECK(a.state.loss_log.back().epoch == 3);
  CHECK(loss_log_csv(a.state.loss_log) == loss_log_csv(b.state.loss_log));
  CHECK(a.final_params == b.final_params);
  CHECK(loss_log_csv(a.state.loss_log).rfind("step,epoch,loss\n", 0) == 0);
  CHECK(epoch_log_csv(a.epochs).rfind("epoch,val_accuracy\n", 0) == 0);

  auto other = cfg;
  other.seed = 43;
  CHECK_FALSE(train_encoded(model, data, data, other).final_params == a.final_params);
}

TEST_CASE("separable data is learned") {
  const auto model = separable_model();
  const auto train_set = separable_set(64, model.max_len, 3);
  auto cfg = TrainConfig::toy();
  cfg.max_epochs = 30;
  cfg.batch_size = 16;
  cfg.early_stop_patience = 30;
  const auto r = train_encoded(model, train_set, train_set, cfg);
  CHECK(accuracy(r.params, r.model_config, train_set) == 1.0);
  CHECK(r.state.loss_log.back().loss < r.state.loss_log.front().loss);
}

TEST_CASE("checkpoint round trip") {
  test::TempDir tmp;
  const auto model = separable_model();
  const auto data = separable_set(16, model.max_len, 4);
  auto cfg = TrainConfig::toy();
  cfg.max_epochs = 1;
  cfg.batch_size = 8;
  const auto r = train_encoded(model, data, data, cfg);
  save_checkpoint(tmp.path / "c.fnd", r.model_config, r.final_params, r.state.optimizer, cfg);
  ModelConfig m2;
  ParameterSet p2;
  OptimizerState o2;
  TrainConfig c2;
  load_checkpoint(tmp.path / "c.fnd", m2, p2, o2, c2);
  CHECK(m2 == r.model_config);
  CHECK(o2.step == r.state.optimizer.step);
  CHECK(c2.to_json() == cfg.to_json());
  REQUIRE(p2.same_shape(r.final_params));
  REQUIRE(o2.m.same_shape(r.final_params));
  for (std::size_t i = 0; i < p2.size(); ++i) {
    CHECK((p2[i] - r.final_params[i]).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((o2.v[i] - r.state.optimizer.v[i]).cwiseAbs().maxCoeff() <=
          1e-6 * (1.0 + r.state.optimizer.v[i].cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  c.validate();
  auto bad = c;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = c;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = c;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
  const auto partial = TrainConfig::from_json(R"({"learning_rate": 0.5})");
  CHECK(partial.learning_rate == 0.5);
  CHECK(partial.batch_size == c.batch_size);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"optimizer": "nope"})"), ValidationError);

  CHECK(TrainConfig::translated_preset().max_epochs == 25);
  CHECK(TrainConfig::translated_preset().learning_rate == 1e-5);
  CHECK(TrainConfig::collected_preset().max_epochs == 10);
  CHECK(TrainConfig::collected_preset().dropout == 0.0);
  CHECK(TrainConfig::toy().batch_size == 32);
}

TEST_CASE("encode_dataset and train through a dataset") {
  SynthOptions so;
  so.n_documents = 60;
  const auto d = generate_synthetic_corpus(so);
  const auto v = train_vocab([&] {
    std::vector<std::string> t;
    for (const auto& doc : d.documents) t.push_back(doc.text);
    return t;
  }(), {120, 1});
  const auto enc = encode_dataset(d, v, 16);
  CHECK(enc.size() == 60);
  CHECK(enc.encodings[0].ids.size() == 16);
  auto model = ModelConfig::toy(v.size());
  model.max_len = 16;
  model.d_model = 8;
  model.n_heads = 2;
  model.d_ff = 16;
  model.n_layers = 1;
  model.head_hidden = {8, 4};
  auto cfg = TrainConfig::toy();
  cfg.max_epochs = 1;
  const auto r = train(model, d, SplitSpec{}, cfg, v);
  CHECK(r.state.epochs_run == 1);
  CHECK(r.state.loss_log.size() == 2);
  CHECK(r.model_config.head_dropout == cfg.dropout);
}

}  // TEST_SUITE
