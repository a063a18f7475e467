#include "fnd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "fnd/error.hpp"
#include "fnd/text.hpp"

namespace fnd {

namespace {

using json = nlohmann::ordered_json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string label_name(Label l) { return l == Label::Real ? "real" : "fake"; }

void sort_scores(std::vector<KeywordScore>& v) {
  std::sort(v.begin(), v.end(), [](const KeywordScore& a, const KeywordScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.token < b.token;
  });
}

json scores_json(const std::vector<KeywordScore>& v) {
  json arr = json::array();
  for (const auto& s : v) arr.push_back({{"token", s.token}, {"score", s.score}});
  return arr;
}

}  // namespace

ConfusionMatrix ConfusionMatrix::swapped() const {
  ConfusionMatrix s;
  s.tp = tn;
  s.tn = tp;
  s.fp = fn;
  s.fn = fp;
  s.positive_class = positive_class == Label::Real ? Label::Fake : Label::Real;
  return s;
}

std::string to_string(Bucket b) {
  switch (b) {
    case Bucket::TP: return "TP";
    case Bucket::TN: return "TN";
    case Bucket::FP: return "FP";
    case Bucket::FN: return "FN";
  }
  return "TP";
}

Bucket bucket_of(Label truth, Label predicted, Label positive_class) {
  const bool actual_pos = truth == positive_class;
  const bool predicted_pos = predicted == positive_class;
  if (actual_pos) return predicted_pos ? Bucket::TP : Bucket::FN;
  return predicted_pos ? Bucket::FP : Bucket::TN;
}

ConfusionMatrix confusion(const std::vector<Label>& predicted, const std::vector<Label>& truth,
                          Label positive_class) {
  if (predicted.size() != truth.size())
    throw ValidationError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw ValidationError("confusion: no examples");
  ConfusionMatrix cm;
  cm.positive_class = positive_class;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    switch (bucket_of(truth[i], predicted[i], positive_class)) {
      case Bucket::TP: ++cm.tp; break;
      case Bucket::TN: ++cm.tn; break;
      case Bucket::FP: ++cm.fp; break;
      case Bucket::FN: ++cm.fn; break;
    }
  }
  return cm;
}

std::optional<double> f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return std::nullopt;
  return 2.0 * precision * recall / (precision + recall);
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("metrics: empty confusion matrix");
  MetricsReport r;
  r.confusion = cm;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  r.precision = ratio(cm.tp, cm.tp + cm.fp);
  r.recall = ratio(cm.tp, cm.tp + cm.fn);
  if (r.precision && r.recall) r.f1 = f1_score(*r.precision, *r.recall);
  return r;
}

std::string MetricsReport::to_json() const {
  json j;
  j["accuracy"] = accuracy;
  j["precision"] = optional_json(precision);
  j["recall"] = optional_json(recall);
  j["f1"] = optional_json(f1);
  j["confusion"] = {{"tp", confusion.tp},
                    {"tn", confusion.tn},
                    {"fp", confusion.fp},
                    {"fn", confusion.fn},
                    {"positive_class", label_name(confusion.positive_class)}};
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    MetricsReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = optional_from(j, "precision");
    r.recall = optional_from(j, "recall");
    r.f1 = optional_from(j, "f1");
    if (j.contains("confusion")) {
      const auto& c = j["confusion"];
      r.confusion.tp = c.value("tp", std::size_t{0});
      r.confusion.tn = c.value("tn", std::size_t{0});
      r.confusion.fp = c.value("fp", std::size_t{0});
      r.confusion.fn = c.value("fn", std::size_t{0});
      r.confusion.positive_class =
          c.value("positive_class", std::string("real")) == "fake" ? Label::Fake : Label::Real;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("metrics file: ") + e.what());
  }
}

// ------------------------------------------------------------------ audit

std::string AuditRecord::to_json() const {
  json j;
  j["id"] = id;
  j["text"] = text;
  j["true_label"] = to_int(true_label);
  j["predicted_label"] = to_int(predicted_label);
  j["confidence"] = confidence;
  j["bucket"] = to_string(bucket);
  return j.dump();
}

std::vector<AuditRecord> audit_records(const Dataset& d, const std::vector<Label>& predicted,
                                       const std::vector<double>& confidences,
                                       Label positive_class) {
  if (predicted.size() != d.size() || confidences.size() != d.size())
    throw ValidationError("audit: predictions and confidences must align with the dataset");
  std::vector<AuditRecord> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& doc = d.documents[i];
    out.push_back({doc.id, doc.text, doc.label, predicted[i], confidences[i],
                   bucket_of(doc.label, predicted[i], positive_class)});
  }
  return out;
}

AuditSummary export_audit(const Dataset& d, const std::vector<Label>& predicted,
                          const std::vector<double>& confidences,
                          const std::filesystem::path& out_dir, Label positive_class) {
  const auto records = audit_records(d, predicted, confidences, positive_class);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  AuditSummary s;
  s.confusion.positive_class = positive_class;
  s.tp_path = out_dir / "tp.jsonl";
  s.tn_path = out_dir / "tn.jsonl";
  s.fp_path = out_dir / "fp.jsonl";
  s.fn_path = out_dir / "fn.jsonl";
  std::ofstream tp(s.tp_path, std::ios::binary | std::ios::trunc);
  std::ofstream tn(s.tn_path, std::ios::binary | std::ios::trunc);
  std::ofstream fp(s.fp_path, std::ios::binary | std::ios::trunc);
  std::ofstream fn(s.fn_path, std::ios::binary | std::ios::trunc);
  if (!tp || !tn || !fp || !fn) throw IoError("cannot write audit files in " + out_dir.string());
  for (const auto& r : records) {
    const auto line = r.to_json() + "\n";
    switch (r.bucket) {
      case Bucket::TP: tp << line; ++s.confusion.tp; break;
      case Bucket::TN: tn << line; ++s.confusion.tn; break;
      case Bucket::FP: fp << line; ++s.confusion.fp; break;
      case Bucket::FN: fn << line; ++s.confusion.fn; break;
    }
  }
  if (!tp || !tn || !fp || !fn) throw IoError("write failed in " + out_dir.string());
  return s;
}

// --------------------------------------------------------------- keywords

std::string KeywordReport::to_json() const {
  json j;
  j["smoothing"] = smoothing;
  j["tp"] = scores_json(tp);
  j["tn"] = scores_json(tn);
  return j.dump(2);
}

KeywordReport extract_keywords(const std::vector<std::string>& tp_texts,
                               const std::vector<std::string>& tn_texts, std::size_t top_k,
                               double smoothing, const StopwordList* stopwords) {
  if (tp_texts.empty() || tn_texts.empty())
    throw ValidationError("extract_keywords: both text sets must be non-empty");
  if (!(smoothing > 0.0)) throw ValidationError("extract_keywords: smoothing must be > 0");

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  std::size_t n1 = 0, n2 = 0;
  auto tally = [&](const std::vector<std::string>& texts, bool first, std::size_t& total) {
    for (const auto& t : texts) {
      for (auto& tok : text::split_whitespace(t)) {
        if (stopwords && stopwords->contains(tok)) continue;
        auto& c = counts[tok];
        (first ? c.first : c.second) += 1;
        ++total;
      }
    }
  };
  tally(tp_texts, true, n1);
  tally(tn_texts, false, n2);

  KeywordReport r;
  r.smoothing = smoothing;
  const double a = smoothing;
  for (const auto& [tok, c] : counts) {
    const double c1 = static_cast<double>(c.first), c2 = static_cast<double>(c.second);
    const double s = std::log((c1 + a) / (static_cast<double>(n1) - c1 + a)) -
                     std::log((c2 + a) / (static_cast<double>(n2) - c2 + a));
    r.all.push_back({tok, s});
    if (s > 0.0) r.tp.push_back({tok, s});
    if (s < 0.0) r.tn.push_back({tok, -s});
  }
  sort_scores(r.all);
  sort_scores(r.tp);
  sort_scores(r.tn);
  if (r.tp.size() > top_k) r.tp.resize(top_k);
  if (r.tn.size() > top_k) r.tn.resize(top_k);
  return r;
}

// ---------------------------------------------------------------- reports

std::string format_percent(const std::optional<double>& v) {
  if (!v) return "\u2014";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", *v * 100.0);
  return buf;
}

std::string comparison_markdown(const std::vector<RunMetrics>& runs) {
  std::string out = "| Model | Accuracy | Precision | Recall | F-score |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& run : runs) {
    const auto& m = run.report;
    out += "| " + run.model + " | " + format_percent(m.accuracy) + " | " +
           format_percent(m.precision) + " | " + format_percent(m.recall) + " | " +
           format_percent(m.f1) + " |\n";
  }
  return out;
}

std::string comparison_csv(const std::vector<RunMetrics>& runs) {
  std::string out = "Model,Accuracy,Precision,Recall,F-score\n";
  for (const auto& run : runs) {
    const auto& m = run.report;
    std::string name = run.model;
    if (name.find_first_of(",\"\r\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : name) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      name = quoted + "\"";
    }
    out += name + "," + format_percent(m.accuracy) + "," + format_percent(m.precision) + "," +
           format_percent(m.recall) + "," + format_percent(m.f1) + "\n";
  }
  return out;
}

}  // namespace fnd
