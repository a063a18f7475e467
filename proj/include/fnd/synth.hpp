#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fnd/corpus.hpp"

namespace fnd {

/// Generated Arabic corpus with class-indicative planted words, for offline
/// end-to-end runs.
struct SynthOptions {
  std::size_t n_documents = 2000;
  double fake_fraction = 0.5;
  std::size_t min_words = 10;
  std::size_t max_words = 24;
  std::size_t planted_per_document = 2;
  /// Chance of one extra keyword from the other class.
  double distractor_rate = 0.1;
  /// Chance per document of emoji, digits and punctuation noise.
  double noise_rate = 0.5;
  std::uint64_t seed = 7;
};

const std::vector<std::string>& synth_real_keywords();
const std::vector<std::string>& synth_fake_keywords();
const std::vector<std::string>& synth_filler_words();

/// Documents are shuffled; ids are "synth-00000", ... Fails validation when
/// n_documents is 0 or the word bounds are inverted.
Dataset generate_synthetic_corpus(const SynthOptions& options = {});

}  // namespace fnd
