#include "fnd/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fnd/corpus.hpp"
#include "fnd/error.hpp"
#include "fnd/evaluation.hpp"
#include "fnd/manifest.hpp"
#include "fnd/model.hpp"
#include "fnd/preprocess.hpp"
#include "fnd/synth.hpp"
#include "fnd/text.hpp"
#include "fnd/tokenizer.hpp"
#include "fnd/training.hpp"

namespace fnd {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw ValidationError("missing input: " + p.string());
}

std::string read_file(const fs::path& p) {
  require_file(p);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
  if (!out) throw IoError("write failed for " + p.string());
}

fs::path parent_dir(const fs::path& p) {
  auto dir = p.parent_path();
  return dir.empty() ? fs::path(".") : dir;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

Dataset load_any(const fs::path& p) {
  require_file(p);
  return load_dataset(p, format_from_path(p));
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

json frequency_json(const Dataset& d) {
  if (d.empty()) return json{{"n_total", 0}};
  const auto f = class_frequency(d);
  return {{"n_total", f.n_total}, {"n_real", f.n_real}, {"n_fake", f.n_fake},
          {"fake_fraction", f.fake_fraction}};
}

Label parse_positive(const std::string& s) {
  if (s == "real") return Label::Real;
  if (s == "fake") return Label::Fake;
  throw ValidationError("--positive-class must be real or fake");
}

RunManifest start_manifest(const std::string& command) {
  RunManifest m;
  m.command = command;
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(const fs::path& dir, RunManifest& m) {
  m.finished_at = utc_timestamp();
  write_manifest(dir, m);
}

// ------------------------------------------------------------------ ingest

struct IngestArgs {
  std::string csv, jsonl, urls, selector, translate, out;
  int label = 1;
  bool dedup = false;
  std::size_t concurrency = 4;
  int timeout = 10;
  int delay_ms = 0;
};

void cmd_ingest(const IngestArgs& a, std::ostream& out) {
  const int sources = !a.csv.empty() + !a.jsonl.empty() + !a.urls.empty();
  if (sources != 1) throw ValidationError("ingest needs exactly one of --csv, --jsonl or --urls");
  auto m = start_manifest("ingest");
  json log;
  Dataset d;
  if (!a.urls.empty()) {
    if (a.selector.empty()) throw ValidationError("--urls requires --selector");
    const fs::path list(a.urls);
    std::vector<std::string> urls;
    std::istringstream lines(read_file(list));
    for (std::string line; std::getline(lines, line);) {
      const auto trimmed = text::collapse_whitespace(line);
      if (!trimmed.empty() && trimmed[0] != '#') urls.push_back(trimmed);
    }
    if (urls.empty()) throw ValidationError(list.string() + " lists no URLs");
    m.add_input(list);
    FetchOptions opts;
    opts.label = label_from_int(a.label);
    opts.max_concurrency = a.concurrency;
    opts.timeout_seconds = a.timeout;
    opts.delay_ms = a.delay_ms;
    auto fetched = fetch_articles(urls, a.selector, opts);
    json errors = json::array();
    for (const auto& e : fetched.errors) errors.push_back({{"url", e.url}, {"reason", e.reason}});
    log["fetch_errors"] = errors;
    if (fetched.documents.empty())
      throw NetworkError("no article could be fetched (first failure: " +
                         fetched.errors.front().url + ": " + fetched.errors.front().reason + ")");
    d.name = list.stem().string();
    d.documents = std::move(fetched.documents);
    log["source"] = "urls";
  } else {
    const fs::path in(!a.csv.empty() ? a.csv : a.jsonl);
    require_file(in);
    d = load_dataset(in, !a.csv.empty() ? DatasetFormat::Csv : DatasetFormat::Jsonl);
    m.add_input(in);
    log["source"] = in.string();
  }
  log["n_loaded"] = d.size();

  if (!a.translate.empty()) {
    if (a.translate != "mock") throw ValidationError("--translate supports only 'mock'");
    MockTranslationClient client;
    auto outcome = translate_dataset(d, client);
    json dropped = json::array();
    for (const auto& x : outcome.dropped)
      dropped.push_back({{"id", x.id}, {"code", x.code}, {"message", x.message}});
    log["translation_dropped"] = dropped;
    d = std::move(outcome.dataset);
  }
  if (a.dedup) {
    const auto before = d.size();
    d = deduplicate(d);
    log["duplicates_removed"] = before - d.size();
  }
  log["class_frequency"] = frequency_json(d);

  const fs::path out_path(a.out);
  ensure_dir(parent_dir(out_path));
  save_dataset(d, out_path, format_from_path(out_path));
  const fs::path log_path = out_path.string() + ".log.json";
  write_file(log_path, log.dump(2) + "\n");
  m.config = {{"selector", a.selector}, {"label", a.label}, {"translate", a.translate},
              {"dedup", a.dedup}, {"max_concurrency", a.concurrency},
              {"timeout_seconds", a.timeout}};
  m.add_output(out_path);
  m.add_output(log_path);
  finish_manifest(parent_dir(out_path), m);
  out << "ingested " << d.size() << " documents -> " << out_path.string() << "\n";
}

// ------------------------------------------------------------------- synth

struct SynthArgs {
  SynthOptions options;
  std::string out;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  auto m = start_manifest("synth");
  const auto d = generate_synthetic_corpus(a.options);
  const fs::path out_path(a.out);
  ensure_dir(parent_dir(out_path));
  save_dataset(d, out_path, format_from_path(out_path));
  m.seed = a.options.seed;
  m.config = {{"n_documents", a.options.n_documents}, {"fake_fraction", a.options.fake_fraction},
              {"seed", a.options.seed}};
  m.add_output(out_path);
  finish_manifest(parent_dir(out_path), m);
  out << "generated " << d.size() << " documents -> " << out_path.string() << "\n";
}

// -------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string in, out, config, stopwords;
  bool remove_stopwords = false;
  bool dedup = false;
};

void cmd_preprocess(const PreprocessArgs& a, std::ostream& out) {
  auto m = start_manifest("preprocess");
  const fs::path in_path(a.in);
  const auto d = load_any(in_path);
  m.add_input(in_path);

  CleaningConfig cfg;
  if (!a.config.empty()) {
    require_file(a.config);
    cfg = load_cleaning_config(a.config);
    m.add_input(a.config);
  }
  if (!a.stopwords.empty()) {
    require_file(a.stopwords);
    cfg.stopwords = std::make_shared<StopwordList>(StopwordList::load(a.stopwords));
    cfg.stopword_path = a.stopwords;
    m.add_input(a.stopwords);
  }
  if (a.remove_stopwords) cfg.remove_stopwords = true;
  cfg.validate();

  Dataset cleaned;
  cleaned.name = d.name;
  CleaningReport total;
  std::size_t emptied = 0;
  for (const auto& doc : d.documents) {
    auto r = clean_text(doc.text, cfg);
    total += r.report;
    if (r.cleaned.empty()) {
      ++emptied;
      continue;
    }
    auto copy = doc;
    copy.text = std::move(r.cleaned);
    cleaned.documents.push_back(std::move(copy));
  }
  std::size_t duplicates = 0;
  if (a.dedup) {
    const auto before = cleaned.size();
    cleaned = deduplicate(cleaned);
    duplicates = before - cleaned.size();
  }
  if (cleaned.empty()) throw ValidationError("every document is empty after cleaning");

  const fs::path out_path(a.out);
  ensure_dir(parent_dir(out_path));
  save_dataset(cleaned, out_path, format_from_path(out_path));
  json report = {{"n_input", d.size()},
                 {"n_output", cleaned.size()},
                 {"n_emptied", emptied},
                 {"n_duplicates_removed", duplicates},
                 {"emoji_removed", total.n_emoji_removed},
                 {"punctuation_removed", total.n_punct_removed},
                 {"digits_removed", total.n_digits_removed},
                 {"non_arabic_tokens_dropped", total.n_tokens_dropped},
                 {"stopwords_removed", total.n_stopwords_removed},
                 {"diacritics_removed", total.n_diacritics_removed},
                 {"class_frequency", frequency_json(cleaned)}};
  const fs::path report_path = out_path.string() + ".report.json";
  write_file(report_path, report.dump(2) + "\n");
  m.config = parse_json(cleaning_config_to_json(cfg), "cleaning config");
  m.config["dedup"] = a.dedup;
  m.add_output(out_path);
  m.add_output(report_path);
  finish_manifest(parent_dir(out_path), m);
  out << "cleaned " << cleaned.size() << " of " << d.size() << " documents -> "
      << out_path.string() << "\n";
}

// ------------------------------------------------------------- train-vocab

struct VocabArgs {
  std::vector<std::string> inputs;
  std::string out, coverage, coverage_corpus;
  VocabTrainingOptions options;
};

void cmd_train_vocab(const VocabArgs& a, std::ostream& out) {
  auto m = start_manifest("train-vocab");
  std::vector<std::string> corpus;
  for (const auto& in : a.inputs) {
    const auto d = load_any(in);
    m.add_input(in);
    for (const auto& doc : d.documents) corpus.push_back(doc.text);
  }
  const auto vocab = train_vocab(corpus, a.options);
  const fs::path out_path(a.out);
  ensure_dir(parent_dir(out_path));
  vocab.save(out_path);

  std::vector<std::string> measured = corpus;
  if (!a.coverage_corpus.empty()) {
    measured.clear();
    const auto d = load_any(a.coverage_corpus);
    m.add_input(a.coverage_corpus);
    for (const auto& doc : d.documents) measured.push_back(doc.text);
  }
  const auto coverage = coverage_report(measured, vocab);
  const fs::path cov_path =
      a.coverage.empty() ? parent_dir(out_path) / "coverage.json" : fs::path(a.coverage);
  write_file(cov_path, coverage.to_json() + "\n");

  m.config = {{"vocab_size", a.options.vocab_size}, {"min_frequency", a.options.min_frequency}};
  m.add_output(out_path);
  m.add_output(cov_path);
  finish_manifest(parent_dir(out_path), m);
  char rate[32];
  std::snprintf(rate, sizeof(rate), "%.3f", coverage.oov_rate);
  out << "vocabulary of " << vocab.size() << " tokens -> " << out_path.string()
      << " (oov rate " << rate << ")\n";
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string data, vocab, out_dir, config, preset = "toy", optimizer;
  double lr = 0, dropout = 0, split = 0.8, weight_decay = 0, grad_clip = 0;
  std::size_t epochs = 0, batch_size = 0, patience = 0, max_len = 0;
  std::uint64_t seed = 0;
  bool stratified = false;
  CLI::App* app = nullptr;

  bool given(const std::string& flag) const { return app->count(flag) > 0; }
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
  auto m = start_manifest("train");
  const fs::path data_path(a.data), vocab_path(a.vocab), dir(a.out_dir);
  const auto dataset = load_any(data_path);
  require_file(vocab_path);
  const auto vocab = Vocabulary::load(vocab_path);
  m.add_input(data_path);
  m.add_input(vocab_path);

  TrainConfig tc;
  if (a.preset == "toy") tc = TrainConfig::toy();
  else if (a.preset == "translated") tc = TrainConfig::translated_preset();
  else if (a.preset == "collected") tc = TrainConfig::collected_preset();
  else throw ValidationError("--preset must be toy, translated or collected");

  ModelConfig mc = ModelConfig::toy(vocab.size());
  SplitSpec split;
  split.seed = tc.seed;
  bool split_seed_set = false;
  if (!a.config.empty()) {
    const auto j = parse_json(read_file(a.config), a.config);
    m.add_input(a.config);
    if (j.contains("model")) mc = ModelConfig::from_json(j["model"].dump());
    if (j.contains("train")) tc = TrainConfig::from_json(j["train"].dump(), tc);
    if (j.contains("split")) {
      const auto& s = j["split"];
      split.train_fraction = s.value("train_fraction", split.train_fraction);
      split.stratified = s.value("stratified", split.stratified);
      if (s.contains("seed")) {
        split.seed = s["seed"].get<std::uint64_t>();
        split_seed_set = true;
      }
    }
  }
  if (a.given("--lr")) tc.learning_rate = a.lr;
  if (a.given("--epochs")) tc.max_epochs = a.epochs;
  if (a.given("--batch-size")) tc.batch_size = a.batch_size;
  if (a.given("--dropout")) tc.dropout = a.dropout;
  if (a.given("--optimizer")) tc.optimizer = optimizer_from_string(a.optimizer);
  if (a.given("--patience")) tc.early_stop_patience = a.patience;
  if (a.given("--weight-decay")) tc.weight_decay = a.weight_decay;
  if (a.given("--grad-clip")) tc.grad_clip_norm = a.grad_clip;
  if (a.given("--seed")) tc.seed = a.seed;
  if (a.given("--split")) split.train_fraction = a.split;
  if (a.given("--stratified")) split.stratified = true;
  if (a.given("--max-len")) mc.max_len = a.max_len;
  if (!split_seed_set) split.seed = tc.seed;
  mc.vocab_size = vocab.size();
  mc.head_dropout = tc.dropout;
  tc.validate();
  mc.validate();

  ensure_dir(dir);
  const auto parts = split_train_test(dataset, split);
  const auto train_set = encode_dataset(parts.train, vocab, mc.max_len);
  const auto test_set = encode_dataset(parts.test, vocab, mc.max_len);
  const auto result = train_encoded(mc, train_set, test_set, tc);

  const auto model_path = dir / "model.fnd";
  const auto ckpt_path = dir / "checkpoint.fnd";
  const auto loss_path = dir / "loss.csv";
  const auto epochs_path = dir / "epochs.csv";
  const auto test_path = dir / "test.jsonl";
  const auto config_path = dir / "config.json";
  save_model(model_path, result.model_config, result.params);
  save_checkpoint(ckpt_path, result.model_config, result.final_params, result.state.optimizer, tc);
  write_file(loss_path, loss_log_csv(result.state.loss_log));
  write_file(epochs_path, epoch_log_csv(result.epochs));
  save_dataset(parts.test, test_path, DatasetFormat::Jsonl);

  json resolved;
  resolved["model"] = parse_json(result.model_config.to_json(), "model config");
  resolved["train"] = parse_json(tc.to_json(), "train config");
  resolved["split"] = {{"train_fraction", split.train_fraction},
                       {"stratified", split.stratified},
                       {"seed", split.seed}};
  write_file(config_path, resolved.dump(2) + "\n");

  m.seed = tc.seed;
  m.config = resolved;
  for (const auto& p : {model_path, ckpt_path, loss_path, epochs_path, test_path, config_path})
    m.add_output(p);
  finish_manifest(dir, m);

  const auto& log = result.state.loss_log;
  char line[160];
  std::snprintf(line, sizeof(line),
                "trained %zu epochs (%zu steps), best val accuracy %.4f at epoch %zu, loss %.4f -> %.4f\n",
                result.state.epochs_run, log.size(), result.state.best_val_accuracy,
                result.state.best_epoch, log.front().loss, log.back().loss);
  out << line;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string model, vocab, data, out_dir, name, positive_class = "real";
};

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  auto m = start_manifest("evaluate");
  const fs::path model_path(a.model), vocab_path(a.vocab), data_path(a.data), dir(a.out_dir);
  require_file(model_path);
  require_file(vocab_path);
  const auto dataset = load_any(data_path);
  if (dataset.empty()) throw ValidationError(data_path.string() + " has no documents");
  ModelConfig mc;
  ParameterSet params;
  load_model(model_path, mc, params);
  const auto vocab = Vocabulary::load(vocab_path);
  if (vocab.size() != mc.vocab_size)
    throw ValidationError("vocabulary size " + std::to_string(vocab.size()) +
                          " does not match the model's " + std::to_string(mc.vocab_size));
  m.add_input(model_path);
  m.add_input(vocab_path);
  m.add_input(data_path);

  const auto encoded = encode_dataset(dataset, vocab, mc.max_len);
  std::vector<Label> predicted;
  std::vector<double> confidence;
  constexpr std::size_t kBatch = 256;
  for (std::size_t begin = 0; begin < encoded.size(); begin += kBatch) {
    const std::size_t end = std::min(encoded.size(), begin + kBatch);
    const std::vector<Encoding> batch(encoded.encodings.begin() + static_cast<std::ptrdiff_t>(begin),
                                      encoded.encodings.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& p : predict(params, mc, batch)) {
      predicted.push_back(p.label);
      confidence.push_back(p.confidence);
    }
  }
  const Label positive = parse_positive(a.positive_class);
  const auto cm = confusion(predicted, encoded.labels, positive);
  const auto report = metrics(cm);
  ensure_dir(dir);
  const auto audit = export_audit(dataset, predicted, confidence, dir, positive);

  const std::string name = a.name.empty() ? model_path.parent_path().filename().string() : a.name;
  json j;
  j["model"] = name.empty() ? model_path.stem().string() : name;
  const auto metrics_json = parse_json(report.to_json(), "metrics");
  for (const auto& [k, v] : metrics_json.items()) j[k] = v;
  const auto metrics_path = dir / "metrics.json";
  write_file(metrics_path, j.dump(2) + "\n");

  m.config = {{"positive_class", a.positive_class}, {"model_name", j["model"]}};
  m.add_output(metrics_path);
  for (const auto& p : {audit.tp_path, audit.tn_path, audit.fp_path, audit.fn_path})
    m.add_output(p);
  finish_manifest(dir, m);
  out << "accuracy " << format_percent(report.accuracy) << ", precision "
      << format_percent(report.precision) << ", recall " << format_percent(report.recall)
      << ", f1 " << format_percent(report.f1) << " (tp=" << cm.tp << " tn=" << cm.tn
      << " fp=" << cm.fp << " fn=" << cm.fn << ")\n";
}

// ---------------------------------------------------------------- keywords

struct KeywordArgs {
  std::string audit_dir, stopwords, out;
  std::size_t top_k = 10;
  double smoothing = 0.5;
};

std::vector<std::string> audit_texts(const fs::path& p) {
  std::vector<std::string> texts;
  std::istringstream lines(read_file(p));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) {
    ++n;
    if (line.empty()) continue;
    const auto j = parse_json(line, p.string() + " line " + std::to_string(n));
    texts.push_back(j.at("text").get<std::string>());
  }
  return texts;
}

void cmd_keywords(const KeywordArgs& a, std::ostream& out) {
  auto m = start_manifest("keywords");
  const fs::path dir(a.audit_dir);
  const auto tp_path = dir / "tp.jsonl", tn_path = dir / "tn.jsonl";
  const auto tp = audit_texts(tp_path);
  const auto tn = audit_texts(tn_path);
  m.add_input(tp_path);
  m.add_input(tn_path);
  std::optional<StopwordList> stop;
  if (!a.stopwords.empty()) {
    require_file(a.stopwords);
    stop = StopwordList::load(a.stopwords);
    m.add_input(a.stopwords);
  }
  const auto report = extract_keywords(tp, tn, a.top_k, a.smoothing, stop ? &*stop : nullptr);
  const fs::path out_path = a.out.empty() ? dir / "keywords.json" : fs::path(a.out);
  ensure_dir(parent_dir(out_path));
  write_file(out_path, report.to_json() + "\n");
  m.config = {{"top_k", a.top_k}, {"smoothing", a.smoothing}};
  m.add_output(out_path);
  finish_manifest(parent_dir(out_path), m);
  out << "| TP | TN |\n|---|---|\n";
  for (std::size_t i = 0; i < std::max(report.tp.size(), report.tn.size()); ++i)
    out << "| " << (i < report.tp.size() ? report.tp[i].token : "") << " | "
        << (i < report.tn.size() ? report.tn[i].token : "") << " |\n";
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out_md, out_csv;
};

void cmd_report(const ReportArgs& a, std::ostream& out) {
  auto m = start_manifest("report");
  std::vector<RunMetrics> runs;
  for (const auto& in : a.inputs) {
    const fs::path p(in);
    const auto text = read_file(p);
    const auto j = parse_json(text, p.string());
    RunMetrics r;
    r.model = j.contains("model") ? j["model"].get<std::string>() : p.stem().string();
    r.report = MetricsReport::from_json(text);
    runs.push_back(std::move(r));
    m.add_input(p);
  }
  const auto md = comparison_markdown(runs);
  out << md;
  std::optional<fs::path> manifest_dir;
  if (!a.out_md.empty()) {
    ensure_dir(parent_dir(a.out_md));
    write_file(a.out_md, md);
    m.add_output(a.out_md);
    manifest_dir = parent_dir(a.out_md);
  }
  if (!a.out_csv.empty()) {
    ensure_dir(parent_dir(a.out_csv));
    write_file(a.out_csv, comparison_csv(runs));
    m.add_output(a.out_csv);
    if (!manifest_dir) manifest_dir = parent_dir(a.out_csv);
  }
  if (manifest_dir) finish_manifest(*manifest_dir, m);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Arabic fake news detection pipeline", "fnd"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Cap worker threads (same as FND_THREADS)");
  app.set_version_flag("--version", kToolVersion);

  IngestArgs ingest;
  auto* ing = app.add_subcommand("ingest", "Load, scrape or translate a corpus into JSONL");
  ing->add_option("--csv", ingest.csv, "Input CSV (id,text,label[,source])");
  ing->add_option("--jsonl", ingest.jsonl, "Input JSONL");
  ing->add_option("--urls", ingest.urls, "File with one article URL per line");
  ing->add_option("--selector", ingest.selector, "CSS selector for article text, e.g. \"article p\"");
  ing->add_option("--label", ingest.label, "Label for scraped articles (0 real, 1 fake)")
      ->check(CLI::Range(0, 1));
  ing->add_option("--translate", ingest.translate, "Translation client (mock)");
  ing->add_flag("--dedup", ingest.dedup, "Drop documents with duplicate text");
  ing->add_option("--concurrency", ingest.concurrency, "Parallel fetches")->check(CLI::PositiveNumber);
  ing->add_option("--timeout", ingest.timeout, "Per-request timeout in seconds");
  ing->add_option("--delay-ms", ingest.delay_ms, "Pause before each request");
  ing->add_option("--out", ingest.out, "Output corpus (.jsonl or .csv)")->required();

  SynthArgs synth;
  auto* syn = app.add_subcommand("synth", "Generate the synthetic toy corpus");
  syn->add_option("--n", synth.options.n_documents, "Number of documents");
  syn->add_option("--fake-fraction", synth.options.fake_fraction, "Share of fake documents");
  syn->add_option("--seed", synth.options.seed, "Generator seed");
  syn->add_option("--out", synth.out, "Output corpus")->required();

  PreprocessArgs pre;
  auto* prep = app.add_subcommand("preprocess", "Clean every document of a corpus");
  prep->add_option("--in", pre.in, "Input corpus")->required();
  prep->add_option("--out", pre.out, "Output corpus")->required();
  prep->add_option("--config", pre.config, "Cleaning config JSON");
  prep->add_option("--stopwords", pre.stopwords, "Stopword list, one word per line");
  prep->add_flag("--remove-stopwords", pre.remove_stopwords, "Enable stopword removal");
  prep->add_flag("--dedup", pre.dedup, "Drop duplicates after cleaning");

  VocabArgs voc;
  auto* tv = app.add_subcommand("train-vocab", "Train a WordPiece vocabulary");
  tv->add_option("--in", voc.inputs, "Training corpora")->required();
  tv->add_option("--out", voc.out, "Output vocab.txt")->required();
  tv->add_option("--vocab-size", voc.options.vocab_size, "Target vocabulary size");
  tv->add_option("--min-frequency", voc.options.min_frequency, "Minimum pair/char frequency");
  tv->add_option("--coverage", voc.coverage, "Coverage report path (default coverage.json)");
  tv->add_option("--coverage-corpus", voc.coverage_corpus, "Corpus to measure OOV on");

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "Train the classifier");
  tr.app = trn;
  trn->add_option("--data", tr.data, "Preprocessed corpus")->required();
  trn->add_option("--vocab", tr.vocab, "vocab.txt")->required();
  trn->add_option("--out-dir", tr.out_dir, "Run directory")->required();
  trn->add_option("--config", tr.config, "JSON with model/train/split sections");
  trn->add_option("--preset", tr.preset, "toy, translated or collected");
  trn->add_option("--lr", tr.lr, "Learning rate");
  trn->add_option("--epochs", tr.epochs, "Maximum epochs");
  trn->add_option("--batch-size", tr.batch_size, "Mini-batch size");
  trn->add_option("--dropout", tr.dropout, "Head dropout probability");
  trn->add_option("--optimizer", tr.optimizer, "sgd, adam or adamw");
  trn->add_option("--split", tr.split, "Train fraction");
  trn->add_flag("--stratified", tr.stratified, "Stratify the split by label");
  trn->add_option("--patience", tr.patience, "Early-stopping patience in epochs");
  trn->add_option("--seed", tr.seed, "Seed for init, shuffling, dropout and split");
  trn->add_option("--weight-decay", tr.weight_decay, "AdamW weight decay");
  trn->add_option("--grad-clip", tr.grad_clip, "Global gradient norm cap (0 = off)");
  trn->add_option("--max-len", tr.max_len, "Maximum sequence length");

  EvaluateArgs ev;
  auto* evl = app.add_subcommand("evaluate", "Score a model and write audit files");
  evl->add_option("--model", ev.model, "model.fnd")->required();
  evl->add_option("--vocab", ev.vocab, "vocab.txt")->required();
  evl->add_option("--data", ev.data, "Evaluation corpus")->required();
  evl->add_option("--out-dir", ev.out_dir, "Output directory")->required();
  evl->add_option("--name", ev.name, "Model name for reports");
  evl->add_option("--positive-class", ev.positive_class, "real (default) or fake");

  KeywordArgs kw;
  auto* kwd = app.add_subcommand("keywords", "Contrast TP and TN audit texts");
  kwd->add_option("--audit-dir", kw.audit_dir, "Directory with tp.jsonl and tn.jsonl")->required();
  kwd->add_option("--top-k", kw.top_k, "Keywords per side");
  kwd->add_option("--smoothing", kw.smoothing, "Additive smoothing");
  kwd->add_option("--stopwords", kw.stopwords, "Stopwords to exclude");
  kwd->add_option("--out", kw.out, "Output JSON (default <audit-dir>/keywords.json)");

  ReportArgs rep;
  auto* rpt = app.add_subcommand("report", "Tabulate metrics files");
  rpt->add_option("metrics", rep.inputs, "metrics.json files")->required();
  rpt->add_option("--out-md", rep.out_md, "Markdown table path");
  rpt->add_option("--out-csv", rep.out_csv, "CSV table path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (threads > 0) setenv("FND_THREADS", std::to_string(threads).c_str(), 1);
  try {
    auto& out = std::cout;
    if (*ing) cmd_ingest(ingest, out);
    else if (*syn) cmd_synth(synth, out);
    else if (*prep) cmd_preprocess(pre, out);
    else if (*tv) cmd_train_vocab(voc, out);
    else if (*trn) cmd_train(tr, out);
    else if (*evl) cmd_evaluate(ev, out);
    else if (*kwd) cmd_keywords(kw, out);
    else if (*rpt) cmd_report(rep, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace fnd
