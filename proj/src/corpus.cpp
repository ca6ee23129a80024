#include "narrisk/corpus.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "narrisk/error.hpp"

namespace narrisk {

using nlohmann::json;

std::string_view to_string(Language v) { return v == Language::afrikaans ? "afrikaans" : "isixhosa"; }
std::string_view to_string(Story v) { return v == Story::cat ? "cat" : "dog"; }

std::string_view to_string(Split v) {
    switch (v) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

std::optional<Language> parse_language(std::string_view s) {
    if (s == "afrikaans") return Language::afrikaans;
    if (s == "isixhosa") return Language::isixhosa;
    return std::nullopt;
}

std::optional<Story> parse_story(std::string_view s) {
    if (s == "cat") return Story::cat;
    if (s == "dog") return Story::dog;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    return std::nullopt;
}

TokenSequence NarrativeRecord::tokens() const {
    TokenSequence all;
    for (const auto& u : utterances) {
        auto seq = normalize_text(u.text);
        all.tokens.insert(all.tokens.end(), std::make_move_iterator(seq.tokens.begin()),
                          std::make_move_iterator(seq.tokens.end()));
    }
    return all;
}

std::vector<const NarrativeRecord*> Corpus::select(Language language, std::optional<Split> split) const {
    std::vector<const NarrativeRecord*> out;
    for (const auto& r : records) {
        if (r.language == language && (!split || r.split == *split)) out.push_back(&r);
    }
    return out;
}

std::vector<std::string> validate(const Corpus& corpus) {
    std::vector<std::string> problems;
    std::map<std::string, std::set<Split>> splits_by_child;
    std::set<std::pair<std::string, Story>> seen;

    for (const auto& r : corpus.records) {
        const std::string who = "record '" + r.child_id + "'";
        if (r.child_id.empty()) problems.push_back("record with empty child_id");
        if (r.utterances.empty()) problems.push_back(who + " has no utterances");
        for (std::size_t k = 0; k < r.utterances.size(); ++k) {
            const auto& u = r.utterances[k];
            if (!(u.start >= 0.0)) problems.push_back(who + " utterance " + std::to_string(k + 1) + " starts before 0");
            if (!(u.end > u.start)) problems.push_back(who + " utterance " + std::to_string(k + 1) + " has end <= start");
            if (u.text.find_first_not_of(" \t\r\n") == std::string::npos) {
                problems.push_back(who + " utterance " + std::to_string(k + 1) + " has empty text");
            }
            if (k > 0 && u.start < r.utterances[k - 1].end) {
                problems.push_back(who + " utterance " + std::to_string(k + 1) +
                                   " overlaps or precedes the previous one");
            }
        }
        if (r.ri && *r.ri != 0 && *r.ri != 1) problems.push_back(who + " has ri outside {0,1}");
        if (!r.pos_tags.empty() && r.pos_tags.size() != r.tokens().size()) {
            problems.push_back(who + " has " + std::to_string(r.pos_tags.size()) + " pos_tags for " +
                               std::to_string(r.tokens().size()) + " tokens");
        }
        if (!seen.insert({r.child_id, r.story}).second) {
            problems.push_back("duplicate (child_id, story) pair: '" + r.child_id + "', " +
                               std::string(to_string(r.story)));
        }
        splits_by_child[r.child_id].insert(r.split);
    }
    for (const auto& [child, splits] : splits_by_child) {
        if (splits.size() > 1) {
            std::string names;
            for (Split s : splits) names += (names.empty() ? "" : ", ") + std::string(to_string(s));
            problems.push_back("speaker overlap: child_id '" + child + "' appears in splits " + names);
        }
    }
    return problems;
}

namespace {

std::string field_string(const json& obj, const char* key, std::size_t line, std::vector<std::string>& problems) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        problems.push_back("line " + std::to_string(line) + ": missing or non-string field '" + key + "'");
        return {};
    }
    return it->get<std::string>();
}

}  // namespace

Corpus parse_manifest(std::string_view content, const std::filesystem::path& base_dir, const LoadOptions& options) {
    Corpus corpus;
    std::vector<std::string> problems;
    std::istringstream in{std::string(content)};
    std::string text;
    std::size_t line = 0;

    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(line) + ": ";

        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            problems.push_back(where + "invalid JSON (" + e.what() + ")");
            continue;
        }
        if (!obj.is_object()) {
            problems.push_back(where + "record is not an object");
            continue;
        }

        NarrativeRecord rec;
        rec.child_id = field_string(obj, "child_id", line, problems);
        const std::string language = field_string(obj, "language", line, problems);
        const std::string story = field_string(obj, "story", line, problems);
        const std::string split = field_string(obj, "split", line, problems);
        if (auto v = parse_language(language)) rec.language = *v;
        else if (!language.empty()) problems.push_back(where + "unknown language '" + language + "'");
        if (auto v = parse_story(story)) rec.story = *v;
        else if (!story.empty()) problems.push_back(where + "unknown story '" + story + "'");
        if (auto v = parse_split(split)) rec.split = *v;
        else if (!split.empty()) problems.push_back(where + "unknown split '" + split + "'");

        if (auto it = obj.find("ri"); it != obj.end() && !it->is_null()) {
            if (it->is_number_integer() && (it->get<int>() == 0 || it->get<int>() == 1)) {
                rec.ri = it->get<int>();
            } else {
                problems.push_back(where + "ri must be 0 or 1");
            }
        }

        const bool has_path = obj.contains("textgrid_path");
        const bool has_inline = obj.contains("utterances");
        if (has_path == has_inline) {
            problems.push_back(where + "exactly one of textgrid_path or utterances is required");
        } else if (has_path) {
            if (!obj["textgrid_path"].is_string()) {
                problems.push_back(where + "textgrid_path must be a string");
            } else {
                std::filesystem::path p = obj["textgrid_path"].get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                if (!std::filesystem::exists(p)) {
                    problems.push_back(where + "missing file '" + p.string() + "'");
                } else {
                    try {
                        rec.utterances = read_textgrid(p.string(), options.textgrid);
                    } catch (const std::exception& e) {
                        problems.push_back(where + e.what());
                    }
                }
            }
        } else {
            const json& arr = obj["utterances"];
            bool ok = arr.is_array();
            if (ok) {
                for (const auto& triple : arr) {
                    if (!triple.is_array() || triple.size() != 3 || !triple[0].is_number() ||
                        !triple[1].is_number() || !triple[2].is_string()) {
                        ok = false;
                        break;
                    }
                    rec.utterances.push_back(
                        {triple[2].get<std::string>(), triple[0].get<double>(), triple[1].get<double>()});
                }
            }
            if (!ok) problems.push_back(where + "utterances must be [start, end, text] triples");
        }

        if (auto it = obj.find("pos_tags"); it != obj.end()) {
            if (!it->is_array()) {
                problems.push_back(where + "pos_tags must be an array of strings");
            } else {
                for (const auto& tag : *it) {
                    if (!tag.is_string()) {
                        problems.push_back(where + "pos_tags must be an array of strings");
                        break;
                    }
                    rec.pos_tags.push_back(tag.get<std::string>());
                }
            }
        }
        corpus.records.push_back(std::move(rec));
    }

    auto more = validate(corpus);
    problems.insert(problems.end(), more.begin(), more.end());
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& manifest, const LoadOptions& options) {
    std::ifstream in(manifest, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + manifest.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(utf8::from_file_bytes(buf.str()), manifest.parent_path(), options);
}

std::string write_manifest(const Corpus& corpus) {
    std::string out;
    for (const auto& r : corpus.records) {
        json obj;
        obj["child_id"] = r.child_id;
        obj["language"] = to_string(r.language);
        obj["story"] = to_string(r.story);
        obj["split"] = to_string(r.split);
        if (r.ri) obj["ri"] = *r.ri;
        json utts = json::array();
        for (const auto& u : r.utterances) utts.push_back(json::array({u.start, u.end, u.text}));
        obj["utterances"] = std::move(utts);
        if (!r.pos_tags.empty()) obj["pos_tags"] = r.pos_tags;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

}  // namespace narrisk
