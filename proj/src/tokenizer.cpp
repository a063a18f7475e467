#include "fnd/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "fnd/error.hpp"
#include "fnd/text.hpp"

namespace fnd {

namespace {

using Count = std::uint64_t;

std::string strip_prefix(const std::string& token) {
  return token.rfind(kContinuationPrefix, 0) == 0 ? token.substr(kContinuationPrefix.size())
                                                    : token;
}

}  // namespace

// ------------------------------------------------------------ vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw ValidationError("empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw ValidationError("duplicate token '" + tokens_[i] + "' in vocabulary");
  }
  auto require = [&](std::string_view name) {
    auto id = find(name);
    if (!id) throw ValidationError("vocabulary lacks special token " + std::string(name));
    return *id;
  };
  pad_ = require(kPadToken);
  unk_ = require(kUnkToken);
  cls_ = require(kClsToken);
  sep_ = require(kSepToken);
  mask_ = require(kMaskToken);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return Vocabulary(std::move(tokens));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::is_special(TokenId id) const {
  return id == pad_ || id == unk_ || id == cls_ || id == sep_ || id == mask_;
}

std::size_t Encoding::length() const {
  std::size_t n = 0;
  while (n < attention_mask.size() && attention_mask[n]) ++n;
  return n;
}

// -------------------------------------------------------------- training

Vocabulary train_vocab(const std::vector<std::string>& corpus,
                       const VocabTrainingOptions& options) {
  if (corpus.empty()) throw ValidationError("cannot train a vocabulary on an empty corpus");
  const std::size_t min_freq = std::max<std::size_t>(1, options.min_frequency);

  std::map<std::string, Count> word_counts;
  for (const auto& doc : corpus) {
    for (auto& w : text::split_whitespace(doc)) ++word_counts[std::move(w)];
  }
  if (word_counts.empty()) throw ValidationError("corpus contains no words");

  // Words as sequences of initial / continuation units.
  std::vector<std::vector<std::string>> word_units;
  std::vector<Count> freqs;
  std::map<std::string, Count> unit_counts;
  for (const auto& [word, count] : word_counts) {
    const auto cps = text::decode(word);
    if (cps.size() > kMaxWordChars) continue;
    std::vector<std::string> units;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      std::string u = i == 0 ? std::string{} : std::string(kContinuationPrefix);
      text::append_utf8(u, cps[i]);
      unit_counts[u] += count;
      units.push_back(std::move(u));
    }
    word_units.push_back(std::move(units));
    freqs.push_back(count);
  }

  std::vector<std::string> tokens = {std::string(kPadToken), std::string(kUnkToken),
                                     std::string(kClsToken), std::string(kSepToken),
                                     std::string(kMaskToken)};
  std::map<std::string, TokenId> ids;
  for (std::size_t i = 0; i < tokens.size(); ++i) ids[tokens[i]] = static_cast<TokenId>(i);
  for (const auto& [unit, count] : unit_counts) {
    if (count >= min_freq && !ids.count(unit)) {
      ids[unit] = static_cast<TokenId>(tokens.size());
      tokens.push_back(unit);
    }
  }
  if (options.vocab_size <= tokens.size())
    throw ValidationError("vocab_size " + std::to_string(options.vocab_size) +
                          " too small: need more than " + std::to_string(tokens.size()) +
                          " (special tokens + alphabet)");

  // Only words fully covered by the alphabet take part in merging.
  std::vector<std::vector<TokenId>> splits;
  std::vector<Count> split_freqs;
  for (std::size_t w = 0; w < word_units.size(); ++w) {
    std::vector<TokenId> s;
    bool covered = true;
    for (const auto& u : word_units[w]) {
      const auto it = ids.find(u);
      if (it == ids.end()) {
        covered = false;
        break;
      }
      s.push_back(it->second);
    }
    if (covered) {
      splits.push_back(std::move(s));
      split_freqs.push_back(freqs[w]);
    }
  }

  while (tokens.size() < options.vocab_size) {
    std::map<TokenId, Count> token_counts;
    std::map<std::pair<TokenId, TokenId>, Count> pair_counts;
    for (std::size_t w = 0; w < splits.size(); ++w) {
      const auto& s = splits[w];
      for (std::size_t i = 0; i < s.size(); ++i) {
        token_counts[s[i]] += split_freqs[w];
        if (i + 1 < s.size()) pair_counts[{s[i], s[i + 1]}] += split_freqs[w];
      }
    }

    const std::pair<TokenId, TokenId>* best = nullptr;
    Count best_pair = 0;
    unsigned __int128 best_denominator = 1;
    for (const auto& [pair, count] : pair_counts) {
      if (count < min_freq) continue;
      const unsigned __int128 denominator =
          static_cast<unsigned __int128>(token_counts[pair.first]) * token_counts[pair.second];
      bool better = false;
      if (!best) {
        better = true;
      } else {
        // count / denominator vs best_pair / best_denominator, exactly.
        const auto lhs = static_cast<unsigned __int128>(count) * best_denominator;
        const auto rhs = static_cast<unsigned __int128>(best_pair) * denominator;
        if (lhs > rhs) {
          better = true;
        } else if (lhs == rhs) {
          const auto& a = tokens[pair.first];
          const auto& b = tokens[pair.second];
          const auto& ba = tokens[best->first];
          const auto& bb = tokens[best->second];
          better = std::tie(a, b) < std::tie(ba, bb);
        }
      }
      if (better) {
        best = &pair;
        best_pair = count;
        best_denominator = denominator;
      }
    }
    if (!best) break;

    const auto [left, right] = *best;
    const std::string merged = tokens[left] + strip_prefix(tokens[right]);
    TokenId merged_id;
    if (const auto it = ids.find(merged); it != ids.end()) {
      merged_id = it->second;
    } else {
      merged_id = static_cast<TokenId>(tokens.size());
      ids[merged] = merged_id;
      tokens.push_back(merged);
    }
    for (auto& s : splits) {
      std::vector<TokenId> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(s[i]);
        }
      }
      s = std::move(next);
    }
  }
  return Vocabulary(std::move(tokens));
}

// -------------------------------------------------------------- encoding

std::optional<std::vector<TokenId>> segment_word(std::string_view word, const Vocabulary& v) {
  const auto cps = text::decode(word);
  if (cps.empty() || cps.size() > kMaxWordChars) return std::nullopt;
  std::vector<TokenId> out;
  std::size_t start = 0;
  while (start < cps.size()) {
    std::optional<TokenId> match;
    std::size_t end = cps.size();
    for (; end > start; --end) {
      std::string piece = start > 0 ? std::string(kContinuationPrefix) : std::string{};
      piece += text::encode(std::u32string_view(cps).substr(start, end - start));
      if ((match = v.find(piece))) break;
    }
    if (!match) return std::nullopt;
    out.push_back(*match);
    start = end;
  }
  return out;
}

Encoding encode(std::string_view text, const Vocabulary& v, std::size_t max_len) {
  if (max_len < 3) throw ValidationError("max_len must be at least 3");
  const std::size_t budget = max_len - 2;
  Encoding enc;
  enc.ids.reserve(max_len);
  enc.ids.push_back(v.cls_id());
  for (const auto& word : text::split_whitespace(text)) {
    if (enc.ids.size() - 1 >= budget) break;
    auto pieces = segment_word(word, v);
    if (!pieces) pieces = std::vector<TokenId>{v.unk_id()};
    for (TokenId id : *pieces) {
      if (enc.ids.size() - 1 >= budget) break;
      enc.ids.push_back(id);
      if (id == v.unk_id()) ++enc.n_oov;
    }
  }
  enc.ids.push_back(v.sep_id());
  enc.attention_mask.assign(enc.ids.size(), 1);
  enc.ids.resize(max_len, v.pad_id());
  enc.attention_mask.resize(max_len, 0);
  return enc;
}

// -------------------------------------------------------------- coverage

CoverageReport coverage_report(const std::vector<std::string>& corpus, const Vocabulary& v,
                               std::size_t top_n) {
  if (corpus.empty()) throw ValidationError("coverage of an empty corpus is undefined");
  CoverageReport r;
  std::map<std::string, std::size_t> word_counts;
  for (const auto& doc : corpus) {
    for (auto& w : text::split_whitespace(doc)) ++word_counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> oov;
  for (const auto& [word, count] : word_counts) {
    r.n_words += count;
    const auto pieces = segment_word(word, v);
    const bool unknown = !pieces || std::find(pieces->begin(), pieces->end(), v.unk_id()) !=
                                        pieces->end();
    if (unknown) {
      r.n_oov_words += count;
      oov.emplace_back(word, count);
    }
  }
  if (r.n_words == 0) throw ValidationError("corpus contains no words");
  r.oov_rate = static_cast<double>(r.n_oov_words) / static_cast<double>(r.n_words);
  std::stable_sort(oov.begin(), oov.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (oov.size() > top_n) oov.resize(top_n);
  r.top_oov = std::move(oov);
  return r;
}

std::string CoverageReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_words"] = n_words;
  j["n_oov_words"] = n_oov_words;
  j["oov_rate"] = oov_rate;
  auto top = nlohmann::ordered_json::array();
  for (const auto& [word, count] : top_oov) top.push_back({{"word", word}, {"count", count}});
  j["top_oov"] = std::move(top);
  return j.dump(2);
}

}  // namespace fnd
