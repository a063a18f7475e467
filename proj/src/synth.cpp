#include "fnd/synth.hpp"

#include <cmath>
#include <cstdio>

#include "fnd/error.hpp"
#include "fnd/random.hpp"

namespace fnd {

const std::vector<std::string>& synth_real_keywords() {
  static const std::vector<std::string> words = {"أكدت", "سوريا", "داعش"};
  return words;
}

const std::vector<std::string>& synth_fake_keywords() {
  static const std::vector<std::string> words = {"انفجار", "هام", "عاجل", "اربع", "جوائز"};
  return words;
}

const std::vector<std::string>& synth_filler_words() {
  static const std::vector<std::string> words = {
      "اليوم", "المدينة", "الناس", "الحكومة", "الشارع", "العالم", "الخبر", "الصور",
      "الفيديو", "مصدر", "قال", "حيث", "بعد", "قبل", "خلال", "مساء", "صباح", "الاسبوع",
      "الماضي", "المقبل", "الرئيس", "المجلس", "الشعب", "البلاد", "العاصمة", "الشرطة",
      "المستشفى", "الطريق", "السوق", "المدرسة", "الجامعة", "الطلاب", "العمال", "الاسعار",
      "الكهرباء", "الماء", "المطر", "الجو", "الرياضة", "الفريق", "المباراة", "الجمهور",
      "الاعلام", "الصحيفة", "القناة", "التقرير", "المواطنين", "السكان", "المنطقة", "الحدود",
      "الاقتصاد", "البنك", "الشركة", "المشروع", "الخطة", "القرار", "اللجنة", "الاجتماع",
      "الزيارة", "الوفد", "كبير", "جديد", "قديم", "كثير", "قليل", "مهم", "عام", "خاص"};
  return words;
}

Dataset generate_synthetic_corpus(const SynthOptions& o) {
  if (o.n_documents == 0) throw ValidationError("synth: n_documents must be > 0");
  if (o.min_words == 0 || o.min_words > o.max_words)
    throw ValidationError("synth: need 0 < min_words <= max_words");
  if (!(o.fake_fraction >= 0.0 && o.fake_fraction <= 1.0))
    throw ValidationError("synth: fake_fraction must lie in [0, 1]");

  static const std::vector<std::string> emoji = {"🔥", "😱", "📰", "👍", "❤️"};
  static const std::vector<std::string> punct = {"!!", "؟", "...", "،", ":", "-"};

  rng::Generator g(o.seed);
  const auto& filler = synth_filler_words();
  const auto n_fake =
      static_cast<std::size_t>(std::floor(o.fake_fraction * static_cast<double>(o.n_documents) + 0.5));

  std::vector<Label> labels(o.n_documents, Label::Real);
  for (std::size_t i = 0; i < n_fake; ++i) labels[i] = Label::Fake;
  g.shuffle(labels);

  Dataset d;
  d.name = "synthetic";
  d.documents.reserve(o.n_documents);
  for (std::size_t i = 0; i < o.n_documents; ++i) {
    const Label label = labels[i];
    const auto& own = label == Label::Fake ? synth_fake_keywords() : synth_real_keywords();
    const auto& other = label == Label::Fake ? synth_real_keywords() : synth_fake_keywords();

    const std::size_t n_words = o.min_words + g.below(o.max_words - o.min_words + 1);
    std::vector<std::string> words;
    for (std::size_t w = 0; w < n_words; ++w) words.push_back(filler[g.below(filler.size())]);
    auto plant = [&](const std::string& word) {
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(g.below(words.size() + 1)), word);
    };
    for (std::size_t k = 0; k < o.planted_per_document; ++k) plant(own[g.below(own.size())]);
    if (g.uniform() < o.distractor_rate) plant(other[g.below(other.size())]);

    if (g.uniform() < o.noise_rate) {
      words.push_back(emoji[g.below(emoji.size())]);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(g.below(words.size() + 1)),
                   std::to_string(1 + g.below(2025)));
      auto& target = words[g.below(words.size())];
      target += punct[g.below(punct.size())];
    }

    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text += ' ';
      text += w;
    }
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%05zu", i);
    d.documents.push_back({id, std::move(text), label, ""});
  }
  return d;
}

}  // namespace fnd
