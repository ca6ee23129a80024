#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "narrisk/analysis.hpp"
#include "narrisk/corpus.hpp"
#include "narrisk/glm.hpp"
#include "narrisk/synth.hpp"

using namespace narrisk;

TEST_CASE("zero effects: the label does not change any record") {
    SynthConfig a;
    a.seed = 11;
    SynthConfig b = a;
    b.ri_rate = 0.8;
    const auto ca = generate_corpus(a);
    const auto cb = generate_corpus(b);
    REQUIRE(ca.records.size() == cb.records.size());
    std::size_t label_differs = 0;
    for (std::size_t i = 0; i < ca.records.size(); ++i) {
        CHECK(ca.records[i].utterances == cb.records[i].utterances);
        if (ca.records[i].ri != cb.records[i].ri) ++label_differs;
    }
    CHECK(label_differs > 0);
}

TEST_CASE("RI prevalence stays within three binomial standard deviations") {
    SynthConfig c;
    c.n_train = 200;
    c.n_dev = 0;
    c.ri_rate = 0.36;
    const double sd = std::sqrt(200 * 0.36 * 0.64);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        c.seed = seed;
        const auto corpus = generate_corpus(c);
        std::size_t ri = 0;
        for (const auto& r : corpus.records) ri += static_cast<std::size_t>(*r.ri);
        CHECK(std::abs(static_cast<double>(ri) - 72.0) <= 3 * sd);
    }
}

TEST_CASE("same seed, same corpus") {
    SynthConfig c;
    c.seed = 5;
    c.unique_word_effect = -1.0;
    c.keyword_effects = {{3, 4.0, 1.0}};
    CHECK(write_manifest(generate_corpus(c)) == write_manifest(generate_corpus(c)));
    SynthConfig d = c;
    d.seed = 6;
    CHECK(write_manifest(generate_corpus(c)) != write_manifest(generate_corpus(d)));
}

TEST_CASE("generated corpora pass validation and reload") {
    SynthConfig c;
    c.languages = {Language::afrikaans, Language::isixhosa};
    c.n_test = 15;
    c.utterance_length_effect = 1.0;
    c.articulation_effect = -1.0;
    c.unique_word_effect = -2.0;
    c.seed = 3;
    const auto corpus = generate_corpus(c);
    CHECK(validate(corpus).empty());
    CHECK(corpus.records.size() == 2 * (200 + 40 + 15));
    const auto again = parse_manifest(write_manifest(corpus), ".");
    CHECK(again.records.size() == corpus.records.size());
    CHECK(again.records.front().utterances == corpus.records.front().utterances);
}

TEST_CASE("planted effects move class means in the configured direction") {
    SynthConfig c;
    c.n_train = 600;
    c.n_dev = 0;
    c.unique_word_effect = -1.5;
    c.utterance_length_effect = 1.0;
    c.keyword_effects = {{4, 5.0, 1.0}};
    c.seed = 9;
    const auto corpus = generate_corpus(c);
    double types[2] = {0, 0};
    double mlu[2] = {0, 0};
    double n[2] = {0, 0};
    for (const auto& r : corpus.records) {
        const int k = *r.ri;
        types[k] += static_cast<double>(count_types(r));
        mlu[k] += mean_utterance_length(r);
        n[k] += 1;
    }
    CHECK(types[1] / n[1] < types[0] / n[0] - unique_word_pooled_sd(c));
    CHECK(mlu[1] / n[1] > mlu[0] / n[0] + 0.3);
}

TEST_CASE("infeasible settings are rejected") {
    SynthConfig c;
    c.ri_rate = 1.0;
    CHECK_THROWS_AS(generate_corpus(c), std::invalid_argument);
    c = SynthConfig{};
    c.duration_mean = 1.0;
    c.duration_sd = 0.5;
    c.utterance_length_effect = -2.0;
    CHECK_THROWS_AS(generate_corpus(c), std::invalid_argument);
    c = SynthConfig{};
    c.vocabulary_size = 19;
    CHECK_THROWS_AS(generate_corpus(c), std::invalid_argument);
    c = SynthConfig{};
    c.keyword_effects = {{600, 1.0, 1.0}};
    CHECK_THROWS_AS(generate_corpus(c), std::invalid_argument);
    c = SynthConfig{};
    c.unique_word_effect = std::nan("");
    CHECK_THROWS_AS(generate_corpus(c), std::invalid_argument);
}

TEST_CASE("synthetic lexicon covers the vocabulary") {
    const auto vocab = synthetic_vocabulary(Language::isixhosa, 100);
    const auto lex = synthetic_lexicon(Language::isixhosa, 100);
    CHECK(lex.size() == 100);
    for (const auto& w : vocab) CHECK(lex.lookup(w).has_value());
    CHECK(std::find(vocab.begin(), vocab.end(), "unk") == vocab.end());
}

TEST_CASE("a 1.5 sigma unique-word effect is recoverable with 100+ records per class") {
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SynthConfig c;
        c.n_train = 240;
        c.n_dev = 240;
        c.ri_rate = 0.5;
        c.unique_word_effect = -1.5;
        c.seed = 1000 + seed;
        const auto corpus = generate_corpus(c);
        std::size_t ri = 0;
        for (const auto* r : corpus.select(Language::afrikaans, Split::train)) ri += static_cast<std::size_t>(*r->ri);
        if (ri < 100 || 240 - ri < 100) continue;  // outside the property's premise; counts as a miss
        FeatureConfig train_cfg;
        FeatureConfig dev_cfg;
        dev_cfg.split = Split::dev;
        const auto train_m = build_feature_matrix(corpus, Language::afrikaans, FeatureGroup::proficiency, train_cfg);
        const auto dev_m = build_feature_matrix(corpus, Language::afrikaans, FeatureGroup::proficiency, dev_cfg);
        const auto model = train(train_m, PenaltyConfig{});
        std::vector<int> labels;
        for (const auto& v : dev_m.ri) labels.push_back(*v);
        if (balanced_accuracy_metric(predict(model, dev_m), labels) >= 0.85) ++successes;
    }
    CHECK(successes >= 19);
}
