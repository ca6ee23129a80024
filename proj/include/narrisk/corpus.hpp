#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "narrisk/text.hpp"
#include "narrisk/textgrid.hpp"

namespace narrisk {

enum class Language { afrikaans, isixhosa };
enum class Story { cat, dog };
enum class Split { train, dev, test };

std::string_view to_string(Language v);
std::string_view to_string(Story v);
std::string_view to_string(Split v);

std::optional<Language> parse_language(std::string_view s);
std::optional<Story> parse_story(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

/// One child's narrative. `ri` is 1 when the child requires intervention.
struct NarrativeRecord {
    std::string child_id;
    Language language = Language::afrikaans;
    Story story = Story::cat;
    std::vector<Utterance> utterances;
    std::optional<int> ri;
    Split split = Split::train;
    /// Optional pre-assigned UPOS tags, parallel to tokens().
    std::vector<std::string> pos_tags;

    /// Normalized tokens of every utterance, in order.
    TokenSequence tokens() const;
    bool labeled() const noexcept { return ri.has_value(); }
};

struct Corpus {
    std::vector<NarrativeRecord> records;

    /// Records of one language (and optionally one split), in manifest order.
    std::vector<const NarrativeRecord*> select(Language language, std::optional<Split> split = {}) const;
};

/// Violations of record-level and corpus-level invariants. Empty when valid.
std::vector<std::string> validate(const Corpus& corpus);

struct LoadOptions {
    TextGridOptions textgrid;
};

/// Load and validate a JSON-lines manifest. Paths to TextGrid files are
/// resolved relative to the manifest's directory. Throws IoError when the
/// manifest is unreadable and ValidationError listing every violation.
Corpus load_corpus(const std::filesystem::path& manifest, const LoadOptions& options = {});

/// Parse manifest text without touching the filesystem beyond referenced
/// TextGrids (resolved against `base_dir`).
Corpus parse_manifest(std::string_view content, const std::filesystem::path& base_dir,
                      const LoadOptions& options = {});

/// Manifest text with inline utterances; the output loads back losslessly.
std::string write_manifest(const Corpus& corpus);

}  // namespace narrisk
