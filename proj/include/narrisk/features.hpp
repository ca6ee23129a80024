#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "narrisk/corpus.hpp"

namespace narrisk {

// ---------------------------------------------------------------------------
// Feature containers
// ---------------------------------------------------------------------------

/// Named raw feature values for one record.
struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;

    /// Appends a feature; throws std::invalid_argument on a duplicate name
    /// or a non-finite value.
    void push(std::string name, double value);
    std::size_t size() const noexcept { return values.size(); }
    double at(std::string_view name) const;
    bool operator==(const FeatureVector&) const = default;
};

/// Row-per-record design matrix. Values are raw (never centred or scaled).
struct FeatureMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd values;
    std::vector<std::optional<int>> ri;
    std::vector<std::string> record_ids;

    Eigen::Index rows() const noexcept { return values.rows(); }
    Eigen::Index cols() const noexcept { return values.cols(); }

    /// Labels as 0/1 doubles. Throws DomainError if any row is unlabeled.
    Eigen::VectorXd labels() const;
    FeatureMatrix labeled_only() const;
    FeatureVector row(Eigen::Index i) const;

    /// Header of feature names, then record_id and ri (blank if unlabeled).
    std::string to_csv() const;
};

// ---------------------------------------------------------------------------
// Resources
// ---------------------------------------------------------------------------

enum class PosTag { verb, noun, pron, adv, adj, aux, part };

/// Column order of the grammatical group.
inline constexpr std::array<PosTag, 7> kPosTags{PosTag::verb, PosTag::noun, PosTag::pron, PosTag::adv,
                                               PosTag::adj,  PosTag::aux,  PosTag::part};

std::string_view to_string(PosTag tag);
std::optional<PosTag> parse_pos_tag(std::string_view s);

/// word -> UPOS tag, keys normalized like normalize_text output.
class PosLexicon {
public:
    /// "word<TAB>TAG" lines; later duplicates override earlier ones.
    static PosLexicon parse(std::string_view content);
    static PosLexicon load(const std::filesystem::path& path);

    void set(std::string_view word, PosTag tag);
    std::optional<PosTag> lookup(std::string_view token) const;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, PosTag, std::less<>> entries_;
};

struct KeywordSpec {
    Language language = Language::afrikaans;
    std::vector<std::string> keywords;
    bool include_story_control = true;

    /// Throws std::invalid_argument unless there are exactly `expected`
    /// unique keywords.
    void check(std::size_t expected = 10) const;
};

KeywordSpec read_keyword_spec(const std::filesystem::path& path);

inline constexpr std::string_view kStoryControlName = "story_dog";

/// Vowel code points used for syllable counting.
struct VowelSet {
    std::u32string vowels;
    bool contains(char32_t cp) const noexcept { return vowels.find(cp) != std::u32string::npos; }
};

VowelSet vowels_for(Language language);

// ---------------------------------------------------------------------------
// Per-record features
// ---------------------------------------------------------------------------

std::size_t count_tokens(const NarrativeRecord& record);
std::size_t count_types(const NarrativeRecord& record);

/// Mean utterance duration in seconds.
double mean_utterance_length(const NarrativeRecord& record);

/// Non-whitespace characters of the normalized text per second of speech.
/// Pauses between utterances are not counted.
double articulation_rate(const NarrativeRecord& record);

/// Number of maximal vowel runs, at least 1.
std::size_t count_syllables(std::string_view word, const VowelSet& vowels);

/// Grade-level score with one utterance per sentence.
double flesch_kincaid(const NarrativeRecord& record, const VowelSet& vowels);

FeatureVector proficiency_features(const NarrativeRecord& record);

/// Counts of the seven tags via the lexicon; unknown tokens count nowhere.
FeatureVector pos_counts(const NarrativeRecord& record, const PosLexicon& lexicon);

/// Counts of the seven tags from the record's own pos_tags.
FeatureVector pos_counts_pretagged(const NarrativeRecord& record);

/// One count per keyword, plus story_dog when the spec asks for it.
FeatureVector keyword_counts(const NarrativeRecord& record, const KeywordSpec& spec);

/// The n most frequent tokens over the language's training records;
/// ties break lexicographically.
std::vector<std::string> top_n_words(const Corpus& corpus, Language language, std::size_t n);

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

enum class FeatureGroup { proficiency, grammatical, keywords };

std::string_view to_string(FeatureGroup g);
std::optional<FeatureGroup> parse_feature_group(std::string_view s);

struct FeatureConfig {
    std::optional<Split> split = Split::train;
    const PosLexicon* lexicon = nullptr;
    const KeywordSpec* keywords = nullptr;
    bool labeled_only = false;
    /// Featurize records on this many threads; output order is unchanged.
    unsigned jobs = 1;
};

FeatureMatrix build_feature_matrix(const Corpus& corpus, Language language, FeatureGroup group,
                                   const FeatureConfig& config = {});

}  // namespace narrisk
