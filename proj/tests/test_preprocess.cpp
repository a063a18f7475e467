#include <doctest.h>

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "fnd/error.hpp"
#include "fnd/preprocess.hpp"
#include "fnd/random.hpp"
#include "fnd/text.hpp"
#include "test_util.hpp"

using namespace fnd;

namespace {

struct GoldenRow {
  std::string before, after;
};

std::vector<GoldenRow> golden_rows() {
  std::ifstream in(std::string(FND_SOURCE_DIR) + "/tests/fixtures/cleaning_golden.tsv");
  std::vector<GoldenRow> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    rows.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return rows;
}

// Run-length oracle: encode as (codepoint, count) runs, shrink long runs,
// decode again.
std::u32string squeeze_oracle(const std::u32string& s, std::size_t r) {
  std::vector<std::pair<char32_t, std::size_t>> runs;
  for (char32_t c : s) {
    if (!runs.empty() && runs.back().first == c) ++runs.back().second;
    else runs.push_back({c, 1});
  }
  std::u32string out;
  for (auto [c, n] : runs) out.append(n >= r ? 1 : n, c);
  return out;
}

const std::vector<char32_t> kAlphabet = {
    U'ا', U'ب', U'ت', U'ح', U'س', U'ل', U'م', U'ه', U'ي', U'ة', U'ء', U'َ', U'ُ', U'ّ', U'ْ',
    U' ', U' ', U'\t', U'1', U'٣', U'۵', U'?', U'!', U'،', U'؟', U'.', U'(', U')', U'-',
    U'a', U'Z', U'x', U'é', U'🙌', U'❤', U'️', U'🚁', U'📰', U'😀', U' ', U'ـ'};

std::string random_text(rng::Generator& g, std::size_t max_len) {
  std::u32string s;
  const auto n = g.below(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const char32_t c = kAlphabet[g.below(kAlphabet.size())];
    const auto repeat = g.below(5) == 0 ? 1 + g.below(6) : 1;
    s.append(repeat, c);
  }
  return text::encode(s);
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("golden rows reproduce the reference cleaning bit-exactly") {
  const auto rows = golden_rows();
  REQUIRE(rows.size() == 5);
  const CleaningConfig cfg;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CAPTURE(i);
    CHECK(clean_text(rows[i].before, cfg).cleaned == rows[i].after);
  }
}

TEST_CASE("golden row reports") {
  const auto rows = golden_rows();
  const auto r1 = clean_text(rows[0].before, CleaningConfig{}).report;
  CHECK(r1.n_emoji_removed == 3);
  const auto r3 = clean_text(rows[2].before, CleaningConfig{}).report;
  CHECK(r3.n_digits_removed == 1);
  CHECK(r3.n_emoji_removed == 1);
  CHECK(r3.n_punct_removed == 6);
  const auto r4 = clean_text(rows[3].before, CleaningConfig{}).report;
  CHECK(r4.n_tokens_dropped == 1);
}

TEST_CASE("empty input") {
  CHECK(clean_text("", CleaningConfig{}).cleaned.empty());
  CHECK(clean_text("   \t ", CleaningConfig{}).cleaned.empty());
}

TEST_CASE("strip_emoji matches a per-codepoint predicate filter") {
  CHECK(strip_emoji("نص 🙌") == "نص ");
  CHECK(strip_emoji("بدون رموز") == "بدون رموز");
  rng::Generator g(11);
  for (int t = 0; t < 200; ++t) {
    const auto in = random_text(g, 40);
    std::u32string expected;
    for (char32_t c : text::decode(in))
      if (!is_emoji(c)) expected.push_back(c);
    CHECK(strip_emoji(in) == text::encode(expected));
  }
}

TEST_CASE("character classes") {
  CHECK(is_emoji(U'🙌'));
  CHECK(is_emoji(U'️'));
  CHECK_FALSE(is_emoji(U'ا'));
  CHECK(is_removable_punctuation(U'?'));
  CHECK(is_removable_punctuation(U'،'));
  CHECK(is_removable_punctuation(U'؛'));
  CHECK(is_removable_punctuation(U'؟'));
  CHECK_FALSE(is_removable_punctuation(U'('));
  CHECK_FALSE(is_removable_punctuation(U')'));
  CHECK(is_digit(U'7'));
  CHECK(is_digit(U'٣'));
  CHECK(is_digit(U'۵'));
  CHECK_FALSE(is_digit(U'ا'));
  CHECK(is_arabic_diacritic(U'ً'));
  CHECK(is_arabic_diacritic(U'ْ'));
  CHECK_FALSE(is_arabic_diacritic(U'ٓ'));
  for (char32_t c = 0x0621; c <= 0x064A; ++c) {
    CHECK(is_arabic_letter(c));
    CHECK_FALSE(is_emoji(c));
    CHECK_FALSE(is_removable_punctuation(c));
    CHECK_FALSE(is_digit(c));
  }
}

TEST_CASE("digits and punctuation") {
  CHECK(remove_digits("كوفيد19 و ٢٠٢٠") == "كوفيد و ");
  std::size_t n = 0;
  CHECK(remove_punctuation("لماذا؟! (نعم)، لا.", &n) == "لماذا (نعم) لا");
  CHECK(n == 4);
  CHECK(clean_text("كوفيد19", CleaningConfig{}).cleaned == "كوفيد");
}

TEST_CASE("non-Arabic token drop") {
  std::size_t dropped = 0;
  CHECK(drop_non_arabic_tokens("خبر eXtranews اليوم abc", &dropped) == "خبر اليوم");
  CHECK(dropped == 2);
  CleaningConfig keep;
  keep.remove_non_arabic_tokens = false;
  CHECK(clean_text("خبر eXtranews", keep).cleaned == "خبر eXtranews");
}

TEST_CASE("squeeze_repeats") {
  CHECK(squeeze_repeats("حصريااااا", 3) == "حصريا");
  CHECK(squeeze_repeats("الله", 3) == "الله");
  CHECK(squeeze_repeats("ههه", 3) == "ه");
  CHECK(squeeze_repeats("هه", 2) == "ه");
  CHECK_THROWS_AS(squeeze_repeats("x", 1), ValidationError);
  rng::Generator g(5);
  for (int t = 0; t < 500; ++t) {
    const auto in = random_text(g, 30);
    const std::size_t r = 2 + g.below(4);
    CHECK(squeeze_repeats(in, r) == text::encode(squeeze_oracle(text::decode(in), r)));
  }
}

TEST_CASE("diacritics") {
  std::size_t n = 0;
  CHECK(strip_diacritics("مُحَمَّد", &n) == "محمد");
  CHECK(n == 4);
  CHECK(clean_text("بَبَبَ", CleaningConfig{}).cleaned == "ب");
  CleaningConfig keep;
  keep.strip_diacritics = false;
  CHECK(clean_text("مُحَمَّد", keep).cleaned == "مُحَمَّد");
}

TEST_CASE("stopwords") {
  const StopwordList list({"في", "من"});
  CHECK(remove_stopwords("ذهب في البيت", list) == "ذهب البيت");
  CHECK(remove_stopwords("ذهب البيت", list) == "ذهب البيت");

  const StopwordList marked({"فِي"});
  CHECK(remove_stopwords("ذهب في البيت", marked, nullptr, true) == "ذهب البيت");
  CHECK(remove_stopwords("ذهب في البيت", marked, nullptr, false) == "ذهب في البيت");

  rng::Generator g(3);
  const std::vector<std::string> vocab = {"في", "من", "على", "البيت", "ذهب", "الولد", "كتب", "و"};
  const StopwordList sw({"في", "من", "و"});
  const std::set<std::string> oracle_set = {"في", "من", "و"};
  for (int t = 0; t < 50; ++t) {
    std::vector<std::string> tokens;
    for (int i = 0; i < 50; ++i) tokens.push_back(vocab[g.below(vocab.size())]);
    std::vector<std::string> kept;
    for (const auto& tok : tokens)
      if (!oracle_set.count(tok)) kept.push_back(tok);
    std::size_t removed = 0;
    CHECK(remove_stopwords(text::join(tokens, " "), sw, &removed) == text::join(kept, " "));
    CHECK(removed == tokens.size() - kept.size());
  }
}

TEST_CASE("stopword removal through clean_text") {
  CleaningConfig cfg;
  cfg.remove_stopwords = true;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.stopwords = std::make_shared<StopwordList>(std::vector<std::string>{"في"});
  const auto r = clean_text("ذهب في البيت!!", cfg);
  CHECK(r.cleaned == "ذهب البيت");
  CHECK(r.report.n_stopwords_removed == 1);
}

TEST_CASE("config validation and JSON loading") {
  CleaningConfig bad;
  bad.repeat_threshold = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  test::TempDir tmp;
  test::spit(tmp.path / "sw.txt", "# comment\nفي\n\nمن\n");
  test::spit(tmp.path / "cfg.json",
             R"({"remove_digits": false, "repeat_threshold": 4, "remove_stopwords": true,
                 "stopword_path": "sw.txt"})");
  const auto cfg = load_cleaning_config(tmp.path / "cfg.json");
  CHECK_FALSE(cfg.remove_digits);
  CHECK(cfg.repeat_threshold == 4);
  REQUIRE(cfg.stopwords);
  CHECK(cfg.stopwords->size() == 2);
  CHECK(clean_text("في 2020 ههه", cfg).cleaned == "ههه");
  CHECK(clean_text("ههههه", cfg).cleaned == "ه");

  test::spit(tmp.path / "broken.json", "{");
  CHECK_THROWS_AS(load_cleaning_config(tmp.path / "broken.json"), ValidationError);
  CHECK_THROWS_AS(load_cleaning_config(tmp.path / "absent.json"), IoError);

  const auto shipped = load_cleaning_config(std::string(FND_SOURCE_DIR) + "/resources/cleaning_default.json");
  REQUIRE(shipped.stopwords);
  CHECK(shipped.stopwords->contains("في"));
  CHECK_FALSE(shipped.remove_stopwords);
}

TEST_CASE("idempotence and monotonicity over random strings") {
  std::vector<CleaningConfig> configs(4);
  configs[1].remove_non_arabic_tokens = false;
  configs[2].strip_diacritics = false;
  configs[2].repeat_threshold = 2;
  configs[3].remove_stopwords = true;
  configs[3].stopwords = std::make_shared<StopwordList>(std::vector<std::string>{"ب", "ا", "مَ"});
  rng::Generator g(2024);
  for (int t = 0; t < 1000; ++t) {
    const auto in = random_text(g, 60);
    for (const auto& cfg : configs) {
      const auto once = clean_text(in, cfg).cleaned;
      CHECK(clean_text(once, cfg).cleaned == once);
      CHECK(text::codepoint_count(once) <= text::codepoint_count(in));
      CHECK(once.find("  ") == std::string::npos);
    }
  }
}

TEST_CASE("arabic letters survive character-level steps") {
  std::u32string letters;
  for (char32_t c = 0x0621; c <= 0x064A; ++c) letters.push_back(c);
  const auto s = text::encode(letters);
  CHECK(strip_emoji(s) == s);
  CHECK(remove_punctuation(s) == s);
  CHECK(remove_digits(s) == s);
}

}  // TEST_SUITE
