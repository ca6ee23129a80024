#include "narrisk/textgrid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "narrisk/error.hpp"
#include "narrisk/format.hpp"
#include "narrisk/text.hpp"

namespace narrisk {

namespace {

// Praat's text reader only looks at numbers, quoted strings and <flags>;
// labels such as `xmin =` or `item [1]:` are skipped.
struct Token {
    enum class Kind { number, string, flag } kind;
    std::string text;
    double number = 0.0;
    std::size_t line = 0;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> tokens;
    std::size_t line = 1;
    std::size_t i = 0;
    auto is_ident = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '?' ||
               static_cast<unsigned char>(c) >= 0x80;
    };

    while (i < s.size()) {
        const char c = s[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (c == '"') {
            const std::size_t start_line = line;
            std::string text;
            ++i;
            bool closed = false;
            while (i < s.size()) {
                if (s[i] == '"') {
                    if (i + 1 < s.size() && s[i + 1] == '"') {
                        text += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                if (s[i] == '\n') ++line;
                text += s[i++];
            }
            if (!closed) throw ParseError("unterminated string", start_line);
            tokens.push_back({Token::Kind::string, std::move(text), 0.0, start_line});
        } else if (c == '<') {
            const std::size_t close = s.find('>', i);
            if (close == std::string_view::npos) throw ParseError("unterminated flag", line);
            tokens.push_back({Token::Kind::flag, std::string(s.substr(i + 1, close - i - 1)), 0.0, line});
            i = close + 1;
        } else if (c == '!') {
            while (i < s.size() && s[i] != '\n') ++i;
        } else if (c == '[') {
            const std::size_t close = s.find(']', i);
            if (close == std::string_view::npos) throw ParseError("unbalanced '['", line);
            i = close + 1;
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            std::size_t j = i;
            while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
            std::string_view lit = s.substr(i, j - i);
            if (!lit.empty() && lit.front() == '+') lit.remove_prefix(1);
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(lit.data(), lit.data() + lit.size(), value);
            if (ec != std::errc() || ptr != lit.data() + lit.size()) {
                throw ParseError("bad number '" + std::string(s.substr(i, j - i)) + "'", line);
            }
            tokens.push_back({Token::Kind::number, {}, value, line});
            i = j;
        } else if (is_ident(c)) {
            while (i < s.size() && is_ident(s[i])) ++i;
        } else {
            ++i;
        }
    }
    return tokens;
}

class TokenCursor {
public:
    explicit TokenCursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    const Token& next(Token::Kind kind, const char* what) {
        if (pos_ >= tokens_.size()) {
            const std::size_t line = tokens_.empty() ? 1 : tokens_.back().line;
            throw ParseError(std::string("unexpected end of file, expected ") + what, line);
        }
        const Token& tok = tokens_[pos_++];
        if (tok.kind != kind) throw ParseError(std::string("expected ") + what, tok.line);
        return tok;
    }

    double number(const char* what) { return next(Token::Kind::number, what).number; }
    const std::string& string(const char* what) { return next(Token::Kind::string, what).text; }

    std::size_t count(const char* what) {
        const Token& tok = next(Token::Kind::number, what);
        if (tok.number < 0 || tok.number != static_cast<double>(static_cast<std::size_t>(tok.number))) {
            throw ParseError(std::string("invalid ") + what, tok.line);
        }
        return static_cast<std::size_t>(tok.number);
    }

    std::size_t line() const { return pos_ == 0 ? 1 : tokens_[pos_ - 1].line; }
    bool done() const { return pos_ >= tokens_.size(); }
    const Token& peek() const { return tokens_[pos_]; }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string quote(std::string_view text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::vector<Utterance> parse_textgrid(std::string_view content, const TextGridOptions& options) {
    TokenCursor cur(tokenize(content));

    if (cur.string("file type") != "ooTextFile") throw ParseError("not an ooTextFile", cur.line());
    if (cur.string("object class") != "TextGrid") throw ParseError("object class is not TextGrid", cur.line());
    cur.number("xmin");
    cur.number("xmax");
    const auto& tiers_flag = cur.next(Token::Kind::flag, "<exists> or <absent>");
    std::size_t n_tiers = 0;
    if (tiers_flag.text == "exists") {
        n_tiers = cur.count("tier count");
    } else if (tiers_flag.text != "absent") {
        throw ParseError("unknown flag <" + tiers_flag.text + ">", tiers_flag.line);
    }

    std::optional<std::vector<Utterance>> chosen;
    for (std::size_t t = 0; t < n_tiers; ++t) {
        const std::string tier_class = cur.string("tier class");
        const std::string name = cur.string("tier name");
        cur.number("tier xmin");
        cur.number("tier xmax");
        const std::size_t n_items = cur.count("item count");

        if (tier_class == "IntervalTier") {
            std::vector<Utterance> intervals;
            for (std::size_t k = 0; k < n_items; ++k) {
                const double xmin = cur.number("interval xmin");
                const double xmax = cur.number("interval xmax");
                const std::size_t line = cur.line();
                const std::string& label = cur.string("interval text");
                if (!(xmax > xmin)) throw ParseError("interval with xmax <= xmin", line);
                const std::string_view text = trim(label);
                if (!text.empty()) intervals.push_back({std::string(text), xmin, xmax});
            }
            const bool wanted = options.tier_name.empty() ? true : name == options.tier_name;
            if (wanted && !chosen) chosen = std::move(intervals);
        } else if (tier_class == "TextTier") {
            for (std::size_t k = 0; k < n_items; ++k) {
                cur.number("point time");
                cur.string("point mark");
            }
        } else {
            throw ParseError("unknown tier class '" + tier_class + "'", cur.line());
        }
    }
    if (!cur.done()) throw ParseError("trailing content after last tier", cur.peek().line);

    if (!chosen) {
        if (options.tier_name.empty()) throw ParseError("no interval tier", cur.line());
        throw ParseError("no interval tier named '" + options.tier_name + "'", cur.line());
    }
    std::stable_sort(chosen->begin(), chosen->end(),
                     [](const Utterance& a, const Utterance& b) { return a.start < b.start; });
    return std::move(*chosen);
}

std::vector<Utterance> read_textgrid(const std::string& path, const TextGridOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open TextGrid '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_textgrid(utf8::from_file_bytes(buf.str()), options);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line());
    }
}

std::string serialize_textgrid(const std::vector<Utterance>& utterances, TextGridForm form,
                               std::string_view tier_name) {
    std::vector<Utterance> intervals;
    double cursor = 0.0;
    for (const auto& u : utterances) {
        if (u.start > cursor) intervals.push_back({"", cursor, u.start});
        intervals.push_back(u);
        cursor = u.end;
    }
    const double xmax = cursor > 0.0 ? cursor : 1.0;
    if (intervals.empty()) intervals.push_back({"", 0.0, xmax});

    std::ostringstream out;
    out << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
    if (form == TextGridForm::long_form) {
        out << "xmin = 0 \nxmax = " << shortest(xmax) << " \ntiers? <exists> \nsize = 1 \nitem []: \n";
        out << "    item [1]:\n        class = \"IntervalTier\" \n        name = " << quote(tier_name)
            << " \n        xmin = 0 \n        xmax = " << shortest(xmax)
            << " \n        intervals: size = " << intervals.size() << " \n";
        for (std::size_t k = 0; k < intervals.size(); ++k) {
            const auto& iv = intervals[k];
            out << "        intervals [" << k + 1 << "]:\n"
                << "            xmin = " << shortest(iv.start) << " \n"
                << "            xmax = " << shortest(iv.end) << " \n"
                << "            text = " << quote(iv.text) << " \n";
        }
    } else {
        out << "0\n" << shortest(xmax) << "\n<exists>\n1\n\"IntervalTier\"\n" << quote(tier_name) << "\n0\n"
            << shortest(xmax) << "\n" << intervals.size() << "\n";
        for (const auto& iv : intervals) {
            out << shortest(iv.start) << "\n" << shortest(iv.end) << "\n" << quote(iv.text) << "\n";
        }
    }
    return out.str();
}

}  // namespace narrisk
