#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "narrisk/corpus.hpp"
#include "narrisk/features.hpp"

namespace narrisk {

/// A vocabulary word whose per-record count depends on the RI label.
struct KeywordEffect {
    std::size_t rank = 0;  ///< 0-based position in the frequency-ranked vocabulary
    double mean_count_ri = 0.0;
    double mean_count_non_ri = 0.0;
};

/// Generator settings. Effect sizes are class mean shifts (RI minus
/// non-RI) in units of the pooled within-class standard deviation of the
/// targeted quantity.
struct SynthConfig {
    std::vector<Language> languages{Language::afrikaans};
    std::size_t n_train = 200;  ///< records per language
    std::size_t n_dev = 40;
    std::size_t n_test = 0;
    double ri_rate = 0.36;

    double tokens_mean = 150.0;
    double tokens_sd = 35.0;
    /// Expected types = type_scale * tokens^type_exponent + budget shift.
    double type_scale = 1.4;
    double type_exponent = 0.75;
    double type_noise_sd = 5.0;
    double unique_word_effect = 0.0;

    double duration_mean = 2.2;  ///< seconds per utterance
    double duration_sd = 0.7;
    double utterance_length_effect = 0.0;

    double artic_mean = 9.0;  ///< characters per second
    double artic_sd = 1.2;
    double articulation_effect = 0.0;

    std::size_t vocabulary_size = 600;
    double zipf_exponent = 1.0;
    std::vector<KeywordEffect> keyword_effects;

    std::uint64_t seed = 0;

    /// Throws std::invalid_argument for infeasible settings.
    void check() const;
};

inline constexpr double kMinUtteranceSeconds = 0.2;

/// Frequency-ranked synthetic vocabulary for a language; deterministic.
std::vector<std::string> synthetic_vocabulary(Language language, std::size_t size);

/// Word -> tag lexicon covering the synthetic vocabulary.
PosLexicon synthetic_lexicon(Language language, std::size_t size);

/// Lexicon file text ("word<TAB>TAG" lines) for the same vocabulary.
std::string synthetic_lexicon_text(const SynthConfig& config);

/// Pooled within-class standard deviation of the unique-word count implied
/// by the token and budget distributions (delta method).
double unique_word_pooled_sd(const SynthConfig& config);

Corpus generate_corpus(const SynthConfig& config);

}  // namespace narrisk
