#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace fnd {

class StopwordList {
public:
  StopwordList() = default;
  explicit StopwordList(const std::vector<std::string>& words);

  /// One word per line; blank lines and lines starting with '#' are skipped.
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  /// Matches against the entries with their diacritics removed.
  bool contains_undiacritized(std::string_view word) const;

private:
  std::unordered_set<std::string> words_;
  std::unordered_set<std::string> undiacritized_;
};

struct CleaningConfig {
  bool remove_emoji = true;
  bool remove_punctuation = true;
  bool remove_digits = true;
  bool remove_non_arabic_tokens = true;
  bool squeeze_repeats = true;
  std::size_t repeat_threshold = 3;
  bool remove_stopwords = false;
  std::shared_ptr<const StopwordList> stopwords;
  std::string stopword_path;  // informational; where `stopwords` came from
  bool strip_diacritics = true;

  /// Throws ValidationError if repeat_threshold < 2 or stopword removal is
  /// enabled without a non-empty list.
  void validate() const;
};

/// Reads the JSON cleaning config (flags plus `repeat_threshold` and
/// `stopword_path`, resolved relative to the config file). Missing keys keep
/// their defaults.
CleaningConfig load_cleaning_config(const std::filesystem::path& path);
std::string cleaning_config_to_json(const CleaningConfig& cfg);

struct CleaningReport {
  std::size_t n_emoji_removed = 0;
  std::size_t n_punct_removed = 0;
  std::size_t n_digits_removed = 0;
  std::size_t n_tokens_dropped = 0;
  std::size_t n_stopwords_removed = 0;
  std::size_t n_diacritics_removed = 0;

  CleaningReport& operator+=(const CleaningReport& o);
};

struct CleaningResult {
  std::string cleaned;
  CleaningReport report;
};

bool is_emoji(char32_t cp);
/// Unicode P* except the bracket categories Ps/Pe.
bool is_removable_punctuation(char32_t cp);
bool is_digit(char32_t cp);
bool is_arabic_letter(char32_t cp);
bool is_arabic_diacritic(char32_t cp);

/// Runs the enabled steps in order: emoji, punctuation, digits, diacritics,
/// repeat squeeze, non-Arabic token drop, stopwords, whitespace collapse.
CleaningResult clean_text(std::string_view text, const CleaningConfig& cfg);

// Individual steps. Each only deletes codepoints or whole tokens.
std::string strip_emoji(std::string_view text, std::size_t* removed = nullptr);
std::string remove_punctuation(std::string_view text, std::size_t* removed = nullptr);
std::string remove_digits(std::string_view text, std::size_t* removed = nullptr);
std::string strip_diacritics(std::string_view text, std::size_t* removed = nullptr);
/// Replaces every maximal run of one codepoint of length >= threshold by a
/// single occurrence. Throws ValidationError when threshold < 2.
std::string squeeze_repeats(std::string_view text, std::size_t threshold);
/// Drops whitespace-delimited tokens without any Arabic letter.
std::string drop_non_arabic_tokens(std::string_view text, std::size_t* dropped = nullptr);
/// With `ignore_diacritics`, tokens are compared to the stopwords after
/// stripping diacritics from the list entries.
std::string remove_stopwords(std::string_view text, const StopwordList& stopwords,
                             std::size_t* removed = nullptr, bool ignore_diacritics = false);

}  // namespace fnd
