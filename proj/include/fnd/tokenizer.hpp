#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fnd {

using TokenId = std::int32_t;

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kContinuationPrefix = "##";
inline constexpr std::size_t kNumSpecialTokens = 5;
/// Longer words are encoded as a single [UNK].
inline constexpr std::size_t kMaxWordChars = 100;

/// Immutable subword vocabulary; a token's id is its index.
class Vocabulary {
public:
  /// Throws ValidationError on duplicate tokens or missing special tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  /// vocab.txt convention: one token per line, line number = id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(std::string_view token) const;
  bool is_special(TokenId id) const;

  TokenId pad_id() const { return pad_; }
  TokenId unk_id() const { return unk_; }
  TokenId cls_id() const { return cls_; }
  TokenId sep_id() const { return sep_; }
  TokenId mask_id() const { return mask_; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId pad_ = 0, unk_ = 0, cls_ = 0, sep_ = 0, mask_ = 0;
};

struct Encoding {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> attention_mask;
  std::size_t n_oov = 0;  // [UNK] substitutions among the emitted ids

  /// Number of leading non-pad positions.
  std::size_t length() const;
  bool operator==(const Encoding&) const = default;
};

struct CoverageReport {
  std::size_t n_words = 0;      // word occurrences
  std::size_t n_oov_words = 0;  // occurrences whose segmentation needs [UNK]
  double oov_rate = 0.0;
  std::vector<std::pair<std::string, std::size_t>> top_oov;

  std::string to_json() const;
};

struct VocabTrainingOptions {
  std::size_t vocab_size = 2000;
  std::size_t min_frequency = 2;
};

/// WordPiece vocabulary: special tokens, then the character alphabet (word
/// initial and "##" continuation forms seen at least min_frequency times,
/// sorted), then merges in the order chosen. The merge with the largest
/// count(ab) / (count(a) * count(b)) wins, ties going to the lexicographically
/// smallest pair.
Vocabulary train_vocab(const std::vector<std::string>& corpus,
                       const VocabTrainingOptions& options = {});

/// Greedy longest-match-first segmentation of one word; nullopt when some
/// suffix has no match (or the word exceeds kMaxWordChars).
std::optional<std::vector<TokenId>> segment_word(std::string_view word, const Vocabulary& v);

/// [CLS] subwords... [SEP] [PAD]...; content truncated to max_len - 2 tokens.
/// Throws ValidationError if max_len < 3.
Encoding encode(std::string_view text, const Vocabulary& v, std::size_t max_len);

/// Throws ValidationError on an empty corpus or one without any word.
CoverageReport coverage_report(const std::vector<std::string>& corpus, const Vocabulary& v,
                               std::size_t top_n = 20);

}  // namespace fnd
