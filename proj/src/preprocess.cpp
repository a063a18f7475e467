#include "fnd/preprocess.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>
#include <unicode/uchar.h>

#include "fnd/error.hpp"
#include "fnd/text.hpp"

namespace fnd {

namespace {

struct Range {
  char32_t first;
  char32_t last;
};

constexpr Range kEmojiRanges[] = {
    {0x2600, 0x26FF},    // Miscellaneous Symbols
    {0x2700, 0x27BF},    // Dingbats
    {0xFE00, 0xFE0F},    // variation selectors
    {0x1F1E6, 0x1F1FF},  // regional indicators (flags)
    {0x1F300, 0x1F5FF},  // Miscellaneous Symbols and Pictographs
    {0x1F600, 0x1F64F},  // Emoticons
    {0x1F680, 0x1F6FF},  // Transport and Map
    {0x1F900, 0x1F9FF},  // Supplemental Symbols and Pictographs
    {0x1FA70, 0x1FAFF},  // Symbols and Pictographs Extended-A
    {0xE0020, 0xE007F},  // tag characters (subdivision flags)
};

template <typename Pred>
std::string filter(std::string_view text, Pred&& remove, std::size_t* removed) {
  std::string out;
  out.reserve(text.size());
  std::size_t n = 0;
  for (char32_t cp : text::decode(text)) {
    if (remove(cp)) {
      ++n;
    } else {
      text::append_utf8(out, cp);
    }
  }
  if (removed) *removed = n;
  return out;
}

}  // namespace

// ------------------------------------------------------------- stopwords

StopwordList::StopwordList(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    if (w.empty()) continue;
    words_.insert(w);
    undiacritized_.insert(strip_diacritics(w));
  }
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword list " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto word = text::collapse_whitespace(line);
    if (word.empty() || word[0] == '#') continue;
    words.push_back(std::move(word));
  }
  return StopwordList(words);
}

bool StopwordList::contains(std::string_view word) const {
  return words_.count(std::string(word)) != 0;
}

bool StopwordList::contains_undiacritized(std::string_view word) const {
  return undiacritized_.count(std::string(word)) != 0;
}

// ---------------------------------------------------------------- config

void CleaningConfig::validate() const {
  if (repeat_threshold < 2) throw ValidationError("repeat_threshold must be >= 2");
  if (remove_stopwords && (!stopwords || stopwords->empty()))
    throw ValidationError("remove_stopwords requires a non-empty stopword list");
}

CleaningConfig load_cleaning_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cleaning config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  CleaningConfig cfg;
  try {
    cfg.remove_emoji = j.value("remove_emoji", cfg.remove_emoji);
    cfg.remove_punctuation = j.value("remove_punctuation", cfg.remove_punctuation);
    cfg.remove_digits = j.value("remove_digits", cfg.remove_digits);
    cfg.remove_non_arabic_tokens = j.value("remove_non_arabic_tokens", cfg.remove_non_arabic_tokens);
    cfg.squeeze_repeats = j.value("squeeze_repeats", cfg.squeeze_repeats);
    cfg.repeat_threshold = j.value("repeat_threshold", cfg.repeat_threshold);
    cfg.remove_stopwords = j.value("remove_stopwords", cfg.remove_stopwords);
    cfg.strip_diacritics = j.value("strip_diacritics", cfg.strip_diacritics);
    cfg.stopword_path = j.value("stopword_path", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!cfg.stopword_path.empty()) {
    std::filesystem::path sw = cfg.stopword_path;
    if (sw.is_relative()) sw = path.parent_path() / sw;
    cfg.stopwords = std::make_shared<StopwordList>(StopwordList::load(sw));
  }
  cfg.validate();
  return cfg;
}

std::string cleaning_config_to_json(const CleaningConfig& cfg) {
  nlohmann::ordered_json j;
  j["remove_emoji"] = cfg.remove_emoji;
  j["remove_punctuation"] = cfg.remove_punctuation;
  j["remove_digits"] = cfg.remove_digits;
  j["remove_non_arabic_tokens"] = cfg.remove_non_arabic_tokens;
  j["squeeze_repeats"] = cfg.squeeze_repeats;
  j["repeat_threshold"] = cfg.repeat_threshold;
  j["remove_stopwords"] = cfg.remove_stopwords;
  j["stopword_path"] = cfg.stopword_path;
  j["strip_diacritics"] = cfg.strip_diacritics;
  return j.dump(2);
}

CleaningReport& CleaningReport::operator+=(const CleaningReport& o) {
  n_emoji_removed += o.n_emoji_removed;
  n_punct_removed += o.n_punct_removed;
  n_digits_removed += o.n_digits_removed;
  n_tokens_dropped += o.n_tokens_dropped;
  n_stopwords_removed += o.n_stopwords_removed;
  n_diacritics_removed += o.n_diacritics_removed;
  return *this;
}

// ------------------------------------------------------------ predicates

bool is_emoji(char32_t cp) {
  for (const auto& r : kEmojiRanges) {
    if (cp >= r.first && cp <= r.last) return true;
  }
  return false;
}

bool is_removable_punctuation(char32_t cp) {
  switch (u_charType(static_cast<UChar32>(cp))) {
    case U_CONNECTOR_PUNCTUATION:
    case U_DASH_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
      return true;
    default:
      return false;
  }
}

bool is_digit(char32_t cp) {
  return (cp >= U'0' && cp <= U'9') || (cp >= 0x0660 && cp <= 0x0669) ||
         (cp >= 0x06F0 && cp <= 0x06F9);
}

bool is_arabic_letter(char32_t cp) {
  return (cp >= 0x0621 && cp <= 0x064A) || (cp >= 0x0671 && cp <= 0x06D3);
}

bool is_arabic_diacritic(char32_t cp) { return cp >= 0x064B && cp <= 0x0652; }

// ----------------------------------------------------------------- steps

std::string strip_emoji(std::string_view text, std::size_t* removed) {
  return filter(text, is_emoji, removed);
}

std::string remove_punctuation(std::string_view text, std::size_t* removed) {
  return filter(text, is_removable_punctuation, removed);
}

std::string remove_digits(std::string_view text, std::size_t* removed) {
  return filter(text, is_digit, removed);
}

std::string strip_diacritics(std::string_view text, std::size_t* removed) {
  return filter(text, is_arabic_diacritic, removed);
}

std::string squeeze_repeats(std::string_view text, std::size_t threshold) {
  if (threshold < 2) throw ValidationError("repeat threshold must be >= 2");
  const auto cps = text::decode(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t j = i;
    while (j < cps.size() && cps[j] == cps[i]) ++j;
    const std::size_t run = j - i;
    const std::size_t keep = run >= threshold ? 1 : run;
    for (std::size_t k = 0; k < keep; ++k) text::append_utf8(out, cps[i]);
    i = j;
  }
  return out;
}

std::string drop_non_arabic_tokens(std::string_view text, std::size_t* dropped) {
  std::vector<std::string> kept;
  std::size_t n = 0;
  for (auto& token : text::split_whitespace(text)) {
    bool arabic = false;
    for (char32_t cp : text::decode(token)) {
      if (is_arabic_letter(cp)) {
        arabic = true;
        break;
      }
    }
    if (arabic) {
      kept.push_back(std::move(token));
    } else {
      ++n;
    }
  }
  if (dropped) *dropped = n;
  return text::join(kept, " ");
}

std::string remove_stopwords(std::string_view text, const StopwordList& stopwords,
                             std::size_t* removed, bool ignore_diacritics) {
  std::vector<std::string> kept;
  std::size_t n = 0;
  for (auto& token : text::split_whitespace(text)) {
    const bool hit = ignore_diacritics ? stopwords.contains_undiacritized(token)
                                       : stopwords.contains(token);
    if (hit) {
      ++n;
    } else {
      kept.push_back(std::move(token));
    }
  }
  if (removed) *removed = n;
  return text::join(kept, " ");
}

CleaningResult clean_text(std::string_view input, const CleaningConfig& cfg) {
  cfg.validate();
  CleaningResult result;
  auto& report = result.report;
  std::string s(input);
  if (cfg.remove_emoji) s = strip_emoji(s, &report.n_emoji_removed);
  if (cfg.remove_punctuation) s = remove_punctuation(s, &report.n_punct_removed);
  if (cfg.remove_digits) s = remove_digits(s, &report.n_digits_removed);
  // Diacritics go before the squeeze so that stripping cannot expose new runs.
  if (cfg.strip_diacritics) s = strip_diacritics(s, &report.n_diacritics_removed);
  if (cfg.squeeze_repeats) s = squeeze_repeats(s, cfg.repeat_threshold);
  if (cfg.remove_non_arabic_tokens) s = drop_non_arabic_tokens(s, &report.n_tokens_dropped);
  if (cfg.remove_stopwords)
    s = remove_stopwords(s, *cfg.stopwords, &report.n_stopwords_removed, cfg.strip_diacritics);
  result.cleaned = text::collapse_whitespace(s);
  return result;
}

}  // namespace fnd
