#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fnd {

/// Class label. 1 = fake/unreliable, 0 = real/reliable.
enum class Label : int { Real = 0, Fake = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }
Label label_from_int(long long v);

struct LabeledDocument {
  std::string id;
  std::string text;
  Label label = Label::Real;
  std::string source;  // empty when unknown

  bool operator==(const LabeledDocument&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<LabeledDocument> documents;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
  bool operator==(const Dataset&) const = default;
};

struct ClassFrequencyReport {
  std::size_t n_total = 0;
  std::size_t n_fake = 0;
  std::size_t n_real = 0;
  double fake_fraction = 0.0;
  double real_fraction = 0.0;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  bool stratified = false;
};

enum class DatasetFormat { Csv, Jsonl };

/// Picks the format from the file extension (.csv / .jsonl / .json).
DatasetFormat format_from_path(const std::filesystem::path& path);

/// Throws ValidationError mentioning the line number on malformed rows,
/// labels outside {0,1}, empty text or duplicate ids; IoError when the file
/// cannot be read.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const Dataset& d, const std::filesystem::path& path,
                  DatasetFormat format);

/// In-memory variants of the above, used by the file functions and tests.
Dataset parse_csv(std::string_view content, std::string name = {});
Dataset parse_jsonl(std::string_view content, std::string name = {});
std::string to_csv(const Dataset& d);
std::string to_jsonl(const Dataset& d);

/// Collapses documents whose whitespace-normalized text is byte-identical,
/// keeping the first occurrence.
Dataset deduplicate(const Dataset& d);

ClassFrequencyReport class_frequency(const Dataset& d);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// |train| = round-half-up(train_fraction * n). Both parts keep the original
/// document order. Stratified splits allocate per-class train counts by
/// largest remainder so each class lands within one document of the global
/// fraction.
TrainTestSplit split_train_test(const Dataset& d, const SplitSpec& spec);

// ---------------------------------------------------------------- scraping

struct FetchError {
  std::string url;
  std::string reason;
};

struct FetchResult {
  std::vector<LabeledDocument> documents;  // input order, successes only
  std::vector<FetchError> errors;          // input order
};

struct FetchOptions {
  Label label = Label::Fake;
  std::size_t max_concurrency = 4;
  int timeout_seconds = 10;
  int delay_ms = 0;  // pause before each request
  std::string id_prefix = "web-";
};

/// Fetches every URL and extracts the text of the nodes matching `selector`
/// (descendant chains of tag / .class / #id compounds, e.g. "article p").
/// Failures are reported per URL and never abort the batch.
FetchResult fetch_articles(const std::vector<std::string>& urls,
                           const std::string& selector,
                           const FetchOptions& options = {});

// ------------------------------------------------------------- translation

struct TranslationRequest {
  std::string text;
  std::string source_lang = "en";
  std::string target_lang = "ar";
};

struct TranslationFailure {
  std::string code;  // e.g. "untranslatable_script", "transport"
  std::string message;
};

using TranslationResponse = std::variant<std::string, TranslationFailure>;

class TranslationClient {
public:
  virtual ~TranslationClient() = default;
  virtual TranslationResponse translate(const TranslationRequest& request) = 0;
};

/// Deterministic offline client: returns the text unchanged except for the
/// replacements in `dictionary`, and fails with "untranslatable_script" on
/// any text that contains Cyrillic letters.
class MockTranslationClient : public TranslationClient {
public:
  MockTranslationClient() = default;
  explicit MockTranslationClient(
      std::vector<std::pair<std::string, std::string>> dictionary)
      : dictionary_(std::move(dictionary)) {}

  TranslationResponse translate(const TranslationRequest& request) override;

private:
  std::vector<std::pair<std::string, std::string>> dictionary_;
};

bool contains_cyrillic(std::string_view utf8);

struct DroppedDocument {
  std::string id;
  std::string code;
  std::string message;
};

struct TranslationOutcome {
  Dataset dataset;
  std::vector<DroppedDocument> dropped;
};

/// Translates every document; failing items are dropped and reported.
/// Throws ValidationError if every item of a non-empty dataset fails.
TranslationOutcome translate_dataset(const Dataset& d, TranslationClient& client,
                                     const std::string& source_lang = "en");

}  // namespace fnd
