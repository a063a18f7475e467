#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fnd/cli.hpp"
#include "fnd/corpus.hpp"
#include "fnd/error.hpp"
#include "fnd/evaluation.hpp"
#include "fnd/manifest.hpp"
#include "fnd/model.hpp"
#include "fnd/preprocess.hpp"
#include "fnd/synth.hpp"
#include "fnd/tokenizer.hpp"

namespace py = pybind11;
using namespace fnd;

namespace {

py::dict document_dict(const LabeledDocument& d) {
  py::dict out;
  out["id"] = d.id;
  out["text"] = d.text;
  out["label"] = to_int(d.label);
  out["source"] = d.source;
  return out;
}

py::list documents_list(const Dataset& d) {
  py::list out;
  for (const auto& doc : d.documents) out.append(document_dict(doc));
  return out;
}

Dataset dataset_from(const py::iterable& docs) {
  Dataset d;
  for (const auto& item : docs) {
    const auto m = item.cast<py::dict>();
    LabeledDocument doc;
    doc.id = m["id"].cast<std::string>();
    doc.text = m["text"].cast<std::string>();
    doc.label = label_from_int(m["label"].cast<long long>());
    if (m.contains("source")) doc.source = m["source"].cast<std::string>();
    d.documents.push_back(std::move(doc));
  }
  return d;
}

std::vector<Label> labels_from(const std::vector<int>& v) {
  std::vector<Label> out;
  for (int x : v) out.push_back(label_from_int(x));
  return out;
}

py::dict report_dict(const MetricsReport& m) {
  py::dict out;
  auto opt = [](const std::optional<double>& v) -> py::object {
    return v ? py::object(py::float_(*v)) : py::object(py::none());
  };
  out["accuracy"] = m.accuracy;
  out["precision"] = opt(m.precision);
  out["recall"] = opt(m.recall);
  out["f1"] = opt(m.f1);
  out["tp"] = m.confusion.tp;
  out["tn"] = m.confusion.tn;
  out["fp"] = m.confusion.fp;
  out["fn"] = m.confusion.fn;
  return out;
}

}  // namespace

PYBIND11_MODULE(_fnd, m) {
  m.doc() = "Arabic fake news detection core";
  m.attr("__version__") = kToolVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<NetworkError>(m, "NetworkError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def(
      "clean_text",
      [](const std::string& text, bool remove_emoji, bool remove_punctuation, bool remove_digits,
         bool remove_non_arabic_tokens, bool squeeze_repeats, std::size_t repeat_threshold,
         bool strip_diacritics, std::optional<std::vector<std::string>> stopwords) {
        CleaningConfig cfg;
        cfg.remove_emoji = remove_emoji;
        cfg.remove_punctuation = remove_punctuation;
        cfg.remove_digits = remove_digits;
        cfg.remove_non_arabic_tokens = remove_non_arabic_tokens;
        cfg.squeeze_repeats = squeeze_repeats;
        cfg.repeat_threshold = repeat_threshold;
        cfg.strip_diacritics = strip_diacritics;
        if (stopwords) {
          cfg.remove_stopwords = true;
          cfg.stopwords = std::make_shared<StopwordList>(*stopwords);
        }
        const auto r = clean_text(text, cfg);
        py::dict report;
        report["emoji"] = r.report.n_emoji_removed;
        report["punctuation"] = r.report.n_punct_removed;
        report["digits"] = r.report.n_digits_removed;
        report["non_arabic_tokens"] = r.report.n_tokens_dropped;
        report["stopwords"] = r.report.n_stopwords_removed;
        report["diacritics"] = r.report.n_diacritics_removed;
        return py::make_tuple(r.cleaned, report);
      },
      py::arg("text"), py::kw_only(), py::arg("remove_emoji") = true,
      py::arg("remove_punctuation") = true, py::arg("remove_digits") = true,
      py::arg("remove_non_arabic_tokens") = true, py::arg("squeeze_repeats") = true,
      py::arg("repeat_threshold") = 3, py::arg("strip_diacritics") = true,
      py::arg("stopwords") = py::none(),
      "Clean one document; returns (cleaned_text, removal_counts).");

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<std::vector<std::string>>(), py::arg("tokens"))
      .def_static("load", &Vocabulary::load)
      .def("save", &Vocabulary::save)
      .def("__len__", &Vocabulary::size)
      .def_property_readonly("tokens", &Vocabulary::tokens)
      .def("find", &Vocabulary::find)
      .def("token", &Vocabulary::token)
      .def(
          "encode",
          [](const Vocabulary& v, const std::string& text, std::size_t max_len) {
            const auto e = encode(text, v, max_len);
            return py::make_tuple(e.ids, std::vector<int>(e.attention_mask.begin(),
                                                          e.attention_mask.end()));
          },
          py::arg("text"), py::arg("max_len"))
      .def(
          "segment",
          [](const Vocabulary& v, const std::string& word) { return segment_word(word, v); },
          py::arg("word"));

  m.def(
      "train_vocab",
      [](const std::vector<std::string>& corpus, std::size_t vocab_size,
         std::size_t min_frequency) { return train_vocab(corpus, {vocab_size, min_frequency}); },
      py::arg("corpus"), py::arg("vocab_size") = 2000, py::arg("min_frequency") = 2);

  m.def(
      "oov_rate",
      [](const std::vector<std::string>& corpus, const Vocabulary& v) {
        return coverage_report(corpus, v).oov_rate;
      },
      py::arg("corpus"), py::arg("vocab"));

  m.def(
      "synthetic_corpus",
      [](std::size_t n, double fake_fraction, std::uint64_t seed) {
        SynthOptions o;
        o.n_documents = n;
        o.fake_fraction = fake_fraction;
        o.seed = seed;
        return documents_list(generate_synthetic_corpus(o));
      },
      py::arg("n") = 2000, py::arg("fake_fraction") = 0.5, py::arg("seed") = 7);

  m.def(
      "split_train_test",
      [](const py::iterable& docs, double train_fraction, std::uint64_t seed, bool stratified) {
        SplitSpec s;
        s.train_fraction = train_fraction;
        s.seed = seed;
        s.stratified = stratified;
        const auto parts = split_train_test(dataset_from(docs), s);
        return py::make_tuple(documents_list(parts.train), documents_list(parts.test));
      },
      py::arg("documents"), py::arg("train_fraction") = 0.8, py::arg("seed") = 42,
      py::arg("stratified") = false);

  m.def(
      "metrics",
      [](const std::vector<int>& predicted, const std::vector<int>& truth, int positive) {
        return report_dict(
            metrics(confusion(labels_from(predicted), labels_from(truth), label_from_int(positive))));
      },
      py::arg("predicted"), py::arg("truth"), py::arg("positive_class") = 0,
      "Labels are 0 (real) and 1 (fake); real is the positive class by default.");

  m.def("f1_score", &f1_score, py::arg("precision"), py::arg("recall"));

  m.def(
      "softmax",
      [](const std::vector<std::vector<double>>& rows) {
        Matrix logits(static_cast<Eigen::Index>(rows.size()), 2);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != 2) throw ValidationError("softmax expects rows of two logits");
          logits(i, 0) = rows[i][0];
          logits(i, 1) = rows[i][1];
        }
        const auto p = softmax_rows(logits);
        std::vector<std::vector<double>> out(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) out[i] = {p(i, 0), p(i, 1)};
        return out;
      },
      py::arg("logits"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "fnd");
        py::gil_scoped_release release;
        return run_cli(args);
      },
      py::arg("args"), "Run an `fnd` subcommand in process; returns its exit code.");
}
