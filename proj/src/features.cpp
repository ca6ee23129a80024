#include "narrisk/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "narrisk/error.hpp"
#include "narrisk/format.hpp"

namespace narrisk {

void FeatureVector::push(std::string name, double value) {
    if (std::find(names.begin(), names.end(), name) != names.end()) {
        throw std::invalid_argument("duplicate feature name '" + name + "'");
    }
    if (!std::isfinite(value)) throw std::invalid_argument("non-finite value for feature '" + name + "'");
    names.push_back(std::move(name));
    values.push_back(value);
}

double FeatureVector::at(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[i];
    }
    throw std::out_of_range("no feature named '" + std::string(name) + "'");
}

Eigen::VectorXd FeatureMatrix::labels() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(ri.size()));
    for (std::size_t i = 0; i < ri.size(); ++i) {
        if (!ri[i]) throw DomainError("record '" + record_ids[i] + "' has no RI label");
        y[static_cast<Eigen::Index>(i)] = *ri[i];
    }
    return y;
}

FeatureMatrix FeatureMatrix::labeled_only() const {
    FeatureMatrix out;
    out.names = names;
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < ri.size(); ++i) {
        if (ri[i]) keep.push_back(static_cast<Eigen::Index>(i));
    }
    out.values.resize(static_cast<Eigen::Index>(keep.size()), cols());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.values.row(static_cast<Eigen::Index>(k)) = values.row(keep[k]);
        out.ri.push_back(ri[static_cast<std::size_t>(keep[k])]);
        out.record_ids.push_back(record_ids[static_cast<std::size_t>(keep[k])]);
    }
    return out;
}

FeatureVector FeatureMatrix::row(Eigen::Index i) const {
    FeatureVector v;
    for (Eigen::Index j = 0; j < cols(); ++j) v.push(names[static_cast<std::size_t>(j)], values(i, j));
    return v;
}

std::string FeatureMatrix::to_csv() const {
    std::string out;
    for (const auto& name : names) out += name + ",";
    out += "record_id,ri\n";
    for (Eigen::Index i = 0; i < rows(); ++i) {
        for (Eigen::Index j = 0; j < cols(); ++j) out += shortest(values(i, j)) + ",";
        const auto& label = ri[static_cast<std::size_t>(i)];
        out += record_ids[static_cast<std::size_t>(i)] + "," + (label ? std::to_string(*label) : "") + "\n";
    }
    return out;
}

std::string_view to_string(PosTag tag) {
    switch (tag) {
        case PosTag::verb: return "VERB";
        case PosTag::noun: return "NOUN";
        case PosTag::pron: return "PRON";
        case PosTag::adv: return "ADV";
        case PosTag::adj: return "ADJ";
        case PosTag::aux: return "AUX";
        case PosTag::part: return "PART";
    }
    return "VERB";
}

std::optional<PosTag> parse_pos_tag(std::string_view s) {
    for (PosTag tag : kPosTags) {
        if (to_string(tag) == s) return tag;
    }
    return std::nullopt;
}

PosLexicon PosLexicon::parse(std::string_view content) {
    PosLexicon lex;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected word<TAB>TAG", line_no);
        const std::string tag_text = line.substr(tab + 1);
        const auto tag = parse_pos_tag(tag_text);
        if (!tag) throw ParseError("unsupported tag '" + tag_text + "'", line_no);
        const auto norm = normalize_text(line.substr(0, tab));
        if (norm.size() != 1) throw ParseError("entry does not normalize to a single token", line_no);
        lex.entries_[norm.tokens.front()] = *tag;
    }
    return lex;
}

PosLexicon PosLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open lexicon '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(utf8::from_file_bytes(buf.str()));
}

void PosLexicon::set(std::string_view word, PosTag tag) {
    const auto norm = normalize_text(word);
    if (norm.size() != 1) throw std::invalid_argument("lexicon key must normalize to one token");
    entries_[norm.tokens.front()] = tag;
}

std::optional<PosTag> PosLexicon::lookup(std::string_view token) const {
    const auto it = entries_.find(token);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void KeywordSpec::check(std::size_t expected) const {
    if (keywords.size() != expected) {
        throw std::invalid_argument("keyword spec needs exactly " + std::to_string(expected) + " keywords, got " +
                                    std::to_string(keywords.size()));
    }
    std::set<std::string> unique(keywords.begin(), keywords.end());
    if (unique.size() != keywords.size()) throw std::invalid_argument("keyword spec has duplicate keywords");
    if (unique.count(std::string(kStoryControlName))) {
        throw std::invalid_argument("keyword collides with the story control feature name");
    }
}

KeywordSpec read_keyword_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open keyword spec '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid keyword spec: ") + e.what(), 1);
    }
    KeywordSpec spec;
    try {
        const auto lang = parse_language(doc.at("language").get<std::string>());
        if (!lang) throw ParseError("keyword spec has an unknown language", 1);
        spec.language = *lang;
        spec.keywords = doc.at("keywords").get<std::vector<std::string>>();
        spec.include_story_control = doc.value("include_story_control", true);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid keyword spec: ") + e.what(), 1);
    }
    spec.check();
    return spec;
}

VowelSet vowels_for(Language language) {
    if (language == Language::isixhosa) return {U"aeiou"};
    // Accented vowels count as their base letter.
    return {U"aeiouyëéêôîûáèïöü"};
}

std::size_t count_tokens(const NarrativeRecord& record) { return record.tokens().size(); }

std::size_t count_types(const NarrativeRecord& record) {
    const auto seq = record.tokens();
    return std::set<std::string>(seq.tokens.begin(), seq.tokens.end()).size();
}

double mean_utterance_length(const NarrativeRecord& record) {
    if (record.utterances.empty()) throw DomainError("mean utterance length of a record with no utterances");
    double total = 0.0;
    for (const auto& u : record.utterances) total += u.duration();
    return total / static_cast<double>(record.utterances.size());
}

double articulation_rate(const NarrativeRecord& record) {
    double seconds = 0.0;
    std::size_t chars = 0;
    for (const auto& u : record.utterances) {
        seconds += u.duration();
        for (const auto& token : normalize_text(u.text).tokens) chars += utf8::decode(token).size();
    }
    if (!(seconds > 0.0)) throw DomainError("articulation rate with zero total utterance duration");
    return static_cast<double>(chars) / seconds;
}

std::size_t count_syllables(std::string_view word, const VowelSet& vowels) {
    std::size_t runs = 0;
    bool in_run = false;
    for (char32_t cp : utf8::decode(word)) {
        const bool vowel = vowels.contains(cp);
        if (vowel && !in_run) ++runs;
        in_run = vowel;
    }
    return std::max<std::size_t>(runs, 1);
}

double flesch_kincaid(const NarrativeRecord& record, const VowelSet& vowels) {
    if (record.utterances.empty()) throw DomainError("Flesch-Kincaid of a record with no utterances");
    const auto seq = record.tokens();
    if (seq.empty()) throw DomainError("Flesch-Kincaid of a record with no tokens");
    std::size_t syllables = 0;
    for (const auto& token : seq.tokens) syllables += count_syllables(token, vowels);
    const double words = static_cast<double>(seq.size());
    const double sentences = static_cast<double>(record.utterances.size());
    return 0.39 * (words / sentences) + 11.8 * (static_cast<double>(syllables) / words) - 15.59;
}

FeatureVector proficiency_features(const NarrativeRecord& record) {
    FeatureVector v;
    v.push("tokens", static_cast<double>(count_tokens(record)));
    v.push("unique_words", static_cast<double>(count_types(record)));
    v.push("mean_utt_len", mean_utterance_length(record));
    v.push("artic_rate", articulation_rate(record));
    v.push("flesch_kincaid", flesch_kincaid(record, vowels_for(record.language)));
    return v;
}

namespace {

FeatureVector tag_vector(const std::array<std::size_t, 7>& counts) {
    FeatureVector v;
    for (std::size_t k = 0; k < kPosTags.size(); ++k) {
        v.push(std::string(to_string(kPosTags[k])), static_cast<double>(counts[k]));
    }
    return v;
}

std::size_t tag_index(PosTag tag) { return static_cast<std::size_t>(tag); }

}  // namespace

FeatureVector pos_counts(const NarrativeRecord& record, const PosLexicon& lexicon) {
    std::array<std::size_t, 7> counts{};
    for (const auto& token : record.tokens().tokens) {
        if (auto tag = lexicon.lookup(token)) ++counts[tag_index(*tag)];
    }
    return tag_vector(counts);
}

FeatureVector pos_counts_pretagged(const NarrativeRecord& record) {
    std::array<std::size_t, 7> counts{};
    for (const auto& text : record.pos_tags) {
        if (auto tag = parse_pos_tag(text)) ++counts[tag_index(*tag)];
    }
    return tag_vector(counts);
}

FeatureVector keyword_counts(const NarrativeRecord& record, const KeywordSpec& spec) {
    if (spec.language != record.language) {
        throw std::invalid_argument("keyword spec for " + std::string(to_string(spec.language)) +
                                    " applied to a " + std::string(to_string(record.language)) + " record");
    }
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& token : record.tokens().tokens) ++freq[token];

    FeatureVector v;
    for (const auto& word : spec.keywords) {
        const auto it = freq.find(word);
        v.push(word, it == freq.end() ? 0.0 : static_cast<double>(it->second));
    }
    if (spec.include_story_control) v.push(std::string(kStoryControlName), record.story == Story::dog ? 1.0 : 0.0);
    return v;
}

std::vector<std::string> top_n_words(const Corpus& corpus, Language language, std::size_t n) {
    std::map<std::string, std::size_t> freq;
    for (const auto* r : corpus.select(language, Split::train)) {
        for (const auto& token : r->tokens().tokens) ++freq[token];
    }
    if (freq.size() < n) {
        throw DomainError("only " + std::to_string(freq.size()) + " distinct words in the " +
                          std::string(to_string(language)) + " training split; " + std::to_string(n) +
                          " requested (short by " + std::to_string(n - freq.size()) + ")");
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[i].first);
    return out;
}

std::string_view to_string(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::proficiency: return "proficiency";
        case FeatureGroup::grammatical: return "grammatical";
        case FeatureGroup::keywords: return "keywords";
    }
    return "proficiency";
}

std::optional<FeatureGroup> parse_feature_group(std::string_view s) {
    if (s == "proficiency") return FeatureGroup::proficiency;
    if (s == "grammatical") return FeatureGroup::grammatical;
    if (s == "keywords") return FeatureGroup::keywords;
    return std::nullopt;
}

FeatureMatrix build_feature_matrix(const Corpus& corpus, Language language, FeatureGroup group,
                                   const FeatureConfig& config) {
    if (group == FeatureGroup::keywords) {
        if (!config.keywords) throw std::invalid_argument("keywords group needs a keyword spec");
        config.keywords->check();
        if (config.keywords->language != language) {
            throw std::invalid_argument("keyword spec language does not match the requested language");
        }
    }

    std::vector<const NarrativeRecord*> records;
    for (const auto* r : corpus.select(language, config.split)) {
        if (!config.labeled_only || r->labeled()) records.push_back(r);
    }
    if (records.empty()) {
        throw DomainError("no " + std::string(to_string(language)) + " records in the " +
                          (config.split ? std::string(to_string(*config.split)) : std::string("selected")) +
                          " split");
    }

    if (group == FeatureGroup::grammatical && !config.lexicon) {
        for (const auto* r : records) {
            if (r->pos_tags.empty()) {
                throw std::invalid_argument("grammatical group needs a POS lexicon (record '" + r->child_id +
                                            "' carries no pos_tags)");
            }
        }
    }

    auto featurize = [&](const NarrativeRecord& r) -> FeatureVector {
        switch (group) {
            case FeatureGroup::proficiency:
                return proficiency_features(r);
            case FeatureGroup::grammatical:
                return r.pos_tags.empty() ? pos_counts(r, *config.lexicon) : pos_counts_pretagged(r);
            case FeatureGroup::keywords:
                return keyword_counts(r, *config.keywords);
        }
        return {};
    };

    std::vector<FeatureVector> rows(records.size());
    std::vector<std::exception_ptr> errors(records.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < records.size(); i += stride) {
            try {
                rows[i] = featurize(*records[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, records.size());
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work, t, jobs);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const DomainError& e) {
            throw DomainError("record '" + records[i]->child_id + "': " + e.what());
        }
    }

    FeatureMatrix m;
    m.names = rows.front().names;
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < m.names.size(); ++j) {
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
        }
        m.ri.push_back(records[i]->ri);
        m.record_ids.push_back(records[i]->child_id);
    }
    return m;
}

}  // namespace narrisk
