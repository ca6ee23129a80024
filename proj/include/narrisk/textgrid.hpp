#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace narrisk {

/// One aligned stretch of child speech.
struct Utterance {
    std::string text;  ///< trimmed, non-empty
    double start = 0.0;
    double end = 0.0;

    double duration() const noexcept { return end - start; }
    bool operator==(const Utterance&) const = default;
};

struct TextGridOptions {
    /// Interval tier to read. Empty selects the first interval tier.
    std::string tier_name;
};

/// Parse a Praat TextGrid (long or short text form; the content must
/// already be UTF-8, see utf8::from_file_bytes). Returns the non-empty
/// intervals of the selected tier ordered by start time. Throws ParseError.
std::vector<Utterance> parse_textgrid(std::string_view content, const TextGridOptions& options = {});

/// Read a TextGrid file from disk, detecting UTF-8/UTF-16 encodings.
std::vector<Utterance> read_textgrid(const std::string& path, const TextGridOptions& options = {});

enum class TextGridForm { long_form, short_form };

/// Write utterances as a single-tier TextGrid. Gaps between utterances are
/// filled with empty intervals so the tier is contiguous.
std::string serialize_textgrid(const std::vector<Utterance>& utterances, TextGridForm form,
                               std::string_view tier_name = "child");

}  // namespace narrisk
