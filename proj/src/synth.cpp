#include "narrisk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "narrisk/random.hpp"

namespace narrisk {

void SynthConfig::check() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (languages.empty()) throw std::invalid_argument("synth: at least one language is required");
    if (!(ri_rate > 0.0 && ri_rate < 1.0)) throw std::invalid_argument("synth: ri_rate must lie in (0, 1)");
    if (vocabulary_size < 20) throw std::invalid_argument("synth: vocabulary size must be at least 20");
    for (double v : {unique_word_effect, utterance_length_effect, articulation_effect, tokens_mean, tokens_sd,
                     type_scale, type_exponent, type_noise_sd, duration_mean, duration_sd, artic_mean, artic_sd,
                     zipf_exponent}) {
        if (!finite(v)) throw std::invalid_argument("synth: settings must be finite");
    }
    if (!(tokens_mean >= 10.0) || tokens_sd < 0.0) throw std::invalid_argument("synth: tokens_mean must be >= 10");
    if (!(type_scale > 0.0) || !(type_exponent > 0.0 && type_exponent <= 1.0) || type_noise_sd < 0.0) {
        throw std::invalid_argument("synth: invalid type-growth settings");
    }
    if (!(duration_sd > 0.0)) throw std::invalid_argument("synth: duration_sd must be positive");
    const double shift = std::abs(utterance_length_effect) * duration_sd;
    if (duration_mean - shift <= kMinUtteranceSeconds) {
        throw std::invalid_argument(
            "synth: utterance duration mean must exceed the 0.2 s truncation point for both classes");
    }
    if (!(artic_sd >= 0.0) || artic_mean - std::abs(articulation_effect) * artic_sd - 3.0 * artic_sd <= 0.0) {
        throw std::invalid_argument("synth: articulation rate distribution admits non-positive rates");
    }
    for (const auto& k : keyword_effects) {
        if (k.rank >= vocabulary_size) throw std::invalid_argument("synth: keyword rank outside the vocabulary");
        if (!(k.mean_count_ri >= 0.0) || !(k.mean_count_non_ri >= 0.0) || k.mean_count_ri > 50.0 ||
            k.mean_count_non_ri > 50.0) {
            throw std::invalid_argument("synth: keyword mean counts must lie in [0, 50]");
        }
    }
}

std::vector<std::string> synthetic_vocabulary(Language language, std::size_t size) {
    static const std::vector<std::string> af_onsets{"b", "d", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w",
                                                    "g", "h", "sk", "st", "kl", "br", "sl", "dr"};
    static const std::vector<std::string> af_vowels{"a", "e", "i", "o", "u", "ie", "oe", "aa", "ee", "y"};
    static const std::vector<std::string> xh_onsets{"b", "d", "k", "l", "m", "n", "ph", "th", "s", "z", "ng",
                                                    "nd", "mb", "hl", "kh", "y", "w", "bh", "tsh", "gq"};
    static const std::vector<std::string> xh_vowels{"a", "e", "i", "o", "u"};
    const bool xhosa = language == Language::isixhosa;
    const auto& onsets = xhosa ? xh_onsets : af_onsets;
    const auto& vowels = xhosa ? xh_vowels : af_vowels;

    random::Generator gen(random::derive_seed(0x5EED, static_cast<std::uint64_t>(language), 0));
    std::set<std::string> seen;
    std::vector<std::string> words;
    while (words.size() < size) {
        // Frequent words are short, as in natural text.
        const std::size_t rank = words.size();
        const std::size_t max_syll = rank < 30 ? 2 : (xhosa ? 5 : 3);
        const std::size_t syllables = 1 + gen.below(max_syll);
        std::string w = xhosa ? std::string(1, "aieu"[gen.below(4)]) : std::string();
        for (std::size_t s = 0; s < syllables; ++s) {
            w += onsets[gen.below(onsets.size())];
            w += vowels[gen.below(vowels.size())];
        }
        if (!xhosa && gen.bernoulli(0.4)) w += onsets[gen.below(12)];
        if (w == "unk" || !seen.insert(w).second) continue;
        words.push_back(std::move(w));
    }
    return words;
}

namespace {

PosTag synthetic_tag(std::size_t rank) {
    return kPosTags[random::splitmix64(rank * 7919 + 17) % kPosTags.size()];
}

}  // namespace

PosLexicon synthetic_lexicon(Language language, std::size_t size) {
    PosLexicon lex;
    const auto vocab = synthetic_vocabulary(language, size);
    for (std::size_t i = 0; i < vocab.size(); ++i) lex.set(vocab[i], synthetic_tag(i));
    return lex;
}

std::string synthetic_lexicon_text(const SynthConfig& config) {
    std::string out;
    for (Language lang : config.languages) {
        const auto vocab = synthetic_vocabulary(lang, config.vocabulary_size);
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            out += vocab[i] + "\t" + std::string(to_string(synthetic_tag(i))) + "\n";
        }
    }
    return out;
}

double unique_word_pooled_sd(const SynthConfig& c) {
    const double slope = c.type_scale * c.type_exponent * std::pow(c.tokens_mean, c.type_exponent - 1.0);
    const double from_tokens = slope * c.tokens_sd;
    return std::sqrt(from_tokens * from_tokens + c.type_noise_sd * c.type_noise_sd);
}

namespace {

class RecordBuilder {
public:
    RecordBuilder(const SynthConfig& config, Language language, random::Generator& gen)
        : c_(config), gen_(gen), vocab_(synthetic_vocabulary(language, config.vocabulary_size)) {
        weights_.resize(vocab_.size());
        for (std::size_t i = 0; i < vocab_.size(); ++i) {
            weights_[i] = 1.0 / std::pow(static_cast<double>(i + 1), c_.zipf_exponent);
        }
        for (const auto& k : c_.keyword_effects) is_keyword_.insert(k.rank);
    }

    std::vector<Utterance> utterances(bool ri) {
        const std::vector<std::string> tokens = token_stream(ri);
        const double sign = ri ? 1.0 : 0.0;

        double rate = 0.0;
        do {
            rate = gen_.normal(c_.artic_mean + sign * c_.articulation_effect * c_.artic_sd, c_.artic_sd);
        } while (rate < 1.0);
        double chars_per_word = 0.0;
        for (const auto& t : tokens) chars_per_word += static_cast<double>(t.size());
        chars_per_word /= static_cast<double>(tokens.size());

        std::vector<Utterance> out;
        double cursor = round_ms(0.2 + 0.8 * gen_.uniform());
        std::size_t next = 0;
        const double mean_d = c_.duration_mean + sign * c_.utterance_length_effect * c_.duration_sd;
        while (next < tokens.size()) {
            double d = 0.0;
            do {
                d = gen_.normal(mean_d, c_.duration_sd);
            } while (d < kMinUtteranceSeconds);
            const auto words = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(d * rate / chars_per_word)));
            std::string text;
            for (std::size_t k = 0; k < words && next < tokens.size(); ++k, ++next) {
                if (!text.empty()) text += ' ';
                text += tokens[next];
            }
            const double start = cursor;
            const double end = round_ms(start + std::max(d, kMinUtteranceSeconds));
            out.push_back({std::move(text), start, end});
            cursor = round_ms(end + 0.15 + 0.9 * gen_.uniform());
        }
        return out;
    }

private:
    static double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

    std::vector<std::string> token_stream(bool ri) {
        double t_draw = 0.0;
        do {
            t_draw = gen_.normal(c_.tokens_mean, c_.tokens_sd);
        } while (t_draw < 10.0);
        const auto total = static_cast<std::size_t>(std::lround(t_draw));

        const double shift = ri ? c_.unique_word_effect * unique_word_pooled_sd(c_) : 0.0;
        const double u_draw = c_.type_scale * std::pow(static_cast<double>(total), c_.type_exponent) + shift +
                              gen_.normal(0.0, c_.type_noise_sd);
        std::size_t types = static_cast<std::size_t>(std::max(1.0, std::round(u_draw)));

        // Planted keyword counts come first and are fixed.
        std::vector<std::pair<std::size_t, std::size_t>> planted;
        std::size_t planted_tokens = 0;
        for (const auto& k : c_.keyword_effects) {
            const auto count = static_cast<std::size_t>(gen_.poisson(ri ? k.mean_count_ri : k.mean_count_non_ri));
            if (count > 0) {
                planted.emplace_back(k.rank, count);
                planted_tokens += count;
            }
        }
        const std::size_t free_tokens = total > planted_tokens ? total - planted_tokens : 0;
        const std::size_t free_vocab = vocab_.size() - is_keyword_.size();
        std::size_t free_types = types > planted.size() ? types - planted.size() : 0;
        free_types = std::min({free_types, free_tokens, free_vocab});
        if (free_types == 0 && free_tokens > 0) free_types = 1;

        // Distinct words by Zipf-weighted draws without replacement.
        std::vector<std::size_t> chosen;
        std::set<std::size_t> taken(is_keyword_.begin(), is_keyword_.end());
        double remaining = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            if (!taken.count(i)) remaining += weights_[i];
        }
        while (chosen.size() < free_types) {
            double u = gen_.uniform() * remaining;
            std::size_t pick = 0;
            for (std::size_t i = 0; i < weights_.size(); ++i) {
                if (taken.count(i)) continue;
                pick = i;
                u -= weights_[i];
                if (u < 0.0) break;
            }
            taken.insert(pick);
            remaining -= weights_[pick];
            chosen.push_back(pick);
        }

        std::vector<std::size_t> ids(chosen.begin(), chosen.end());
        double chosen_weight = 0.0;
        for (std::size_t i : chosen) chosen_weight += weights_[i];
        while (ids.size() < free_tokens) {
            double u = gen_.uniform() * chosen_weight;
            std::size_t pick = chosen.back();
            for (std::size_t i : chosen) {
                u -= weights_[i];
                if (u < 0.0) {
                    pick = i;
                    break;
                }
            }
            ids.push_back(pick);
        }
        for (const auto& [rank, count] : planted) ids.insert(ids.end(), count, rank);
        gen_.shuffle(std::span<std::size_t>(ids));

        std::vector<std::string> tokens;
        tokens.reserve(ids.size());
        for (std::size_t i : ids) tokens.push_back(vocab_[i]);
        return tokens;
    }

    const SynthConfig& c_;
    random::Generator& gen_;
    std::vector<std::string> vocab_;
    std::vector<double> weights_;
    std::set<std::size_t> is_keyword_;
};

}  // namespace

Corpus generate_corpus(const SynthConfig& config) {
    config.check();
    random::Generator gen(config.seed);
    Corpus corpus;
    for (Language lang : config.languages) {
        RecordBuilder builder(config, lang, gen);
        const std::string prefix = lang == Language::afrikaans ? "af" : "xh";
        const std::pair<Split, std::size_t> plan[] = {
            {Split::train, config.n_train}, {Split::dev, config.n_dev}, {Split::test, config.n_test}};
        for (const auto& [split, count] : plan) {
            for (std::size_t i = 0; i < count; ++i) {
                NarrativeRecord rec;
                rec.child_id = prefix + "-" + std::string(to_string(split)) + "-" + std::to_string(i + 1);
                rec.language = lang;
                rec.split = split;
                rec.story = gen.bernoulli(0.5) ? Story::dog : Story::cat;
                const bool ri = gen.bernoulli(config.ri_rate);
                rec.ri = ri ? 1 : 0;
                rec.utterances = builder.utterances(ri);
                corpus.records.push_back(std::move(rec));
            }
        }
    }
    return corpus;
}

}  // namespace narrisk
