#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fnd/corpus.hpp"
#include "fnd/preprocess.hpp"

namespace fnd {

/// Counts under a positive-class convention. With the default (Real), a TP
/// is a real document predicted real.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  Label positive_class = Label::Real;

  std::size_t total() const { return tp + tn + fp + fn; }
  /// Same evaluation viewed with the other class as positive.
  ConfusionMatrix swapped() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

enum class Bucket { TP, TN, FP, FN };

std::string to_string(Bucket b);
Bucket bucket_of(Label truth, Label predicted, Label positive_class = Label::Real);

/// Throws ValidationError on empty or mismatched sequences.
ConfusionMatrix confusion(const std::vector<Label>& predicted, const std::vector<Label>& truth,
                          Label positive_class = Label::Real);

/// Ratios; nullopt marks a zero denominator.
struct MetricsReport {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  ConfusionMatrix confusion;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& json);
};

/// Throws ValidationError when the matrix is empty.
MetricsReport metrics(const ConfusionMatrix& cm);
/// Harmonic mean; nullopt when p + r = 0.
std::optional<double> f1_score(double precision, double recall);

struct AuditRecord {
  std::string id;
  std::string text;
  Label true_label = Label::Real;
  Label predicted_label = Label::Real;
  double confidence = 0.0;
  Bucket bucket = Bucket::TP;

  std::string to_json() const;
};

struct AuditSummary {
  ConfusionMatrix confusion;
  std::filesystem::path tp_path, tn_path, fp_path, fn_path;
};

std::vector<AuditRecord> audit_records(const Dataset& d, const std::vector<Label>& predicted,
                                       const std::vector<double>& confidences,
                                       Label positive_class = Label::Real);

/// Writes tp.jsonl, tn.jsonl, fp.jsonl and fn.jsonl (all four, possibly
/// empty) into out_dir, creating it if needed.
AuditSummary export_audit(const Dataset& d, const std::vector<Label>& predicted,
                          const std::vector<double>& confidences,
                          const std::filesystem::path& out_dir,
                          Label positive_class = Label::Real);

struct KeywordScore {
  std::string token;
  double score = 0.0;
};

struct KeywordReport {
  std::vector<KeywordScore> tp;  // tokens characteristic of the TP texts
  std::vector<KeywordScore> tn;  // tokens characteristic of the TN texts
  std::vector<KeywordScore> all;  // every scored token, by TP-side score
  double smoothing = 0.5;

  std::string to_json() const;
};

/// Smoothed log-odds on whitespace tokens, counted once per occurrence:
///   log((c1 + a) / (N1 - c1 + a)) - log((c2 + a) / (N2 - c2 + a))
/// where N is the token total on each side. Ties break lexicographically.
KeywordReport extract_keywords(const std::vector<std::string>& tp_texts,
                               const std::vector<std::string>& tn_texts, std::size_t top_k,
                               double smoothing = 0.5, const StopwordList* stopwords = nullptr);

struct RunMetrics {
  std::string model;
  MetricsReport report;
};

/// Percentages to one decimal, a dash (U+2014) for undefined values, rows in input order.
std::string comparison_markdown(const std::vector<RunMetrics>& runs);
std::string comparison_csv(const std::vector<RunMetrics>& runs);
/// "98.8%" style cell.
std::string format_percent(const std::optional<double>& ratio);

}  // namespace fnd
