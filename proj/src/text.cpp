#include "narrisk/text.hpp"

#include "narrisk/error.hpp"

namespace narrisk {

namespace utf8 {

namespace {
constexpr char32_t kReplacement = 0xFFFD;
}

std::u32string decode(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size()) {
        const auto lead = static_cast<unsigned char>(bytes[i]);
        int extra = 0;
        char32_t cp = 0;
        if (lead < 0x80) {
            cp = lead;
        } else if ((lead & 0xE0) == 0xC0) {
            cp = lead & 0x1F;
            extra = 1;
        } else if ((lead & 0xF0) == 0xE0) {
            cp = lead & 0x0F;
            extra = 2;
        } else if ((lead & 0xF8) == 0xF0) {
            cp = lead & 0x07;
            extra = 3;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + extra >= bytes.size()) {
            out.push_back(kReplacement);
            break;
        }
        bool ok = true;
        for (int k = 1; k <= extra; ++k) {
            const auto cont = static_cast<unsigned char>(bytes[i + k]);
            if ((cont & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cont & 0x3F);
        }
        if (!ok) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += extra + 1;
    }
    return out;
}

void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode(std::u32string_view code_points) {
    std::string out;
    out.reserve(code_points.size());
    for (char32_t cp : code_points) append(out, cp);
    return out;
}

std::string from_file_bytes(std::string_view bytes) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(bytes[i]); };

    if (bytes.size() >= 3 && byte(0) == 0xEF && byte(1) == 0xBB && byte(2) == 0xBF) {
        return std::string(bytes.substr(3));
    }
    const bool le = bytes.size() >= 2 && byte(0) == 0xFF && byte(1) == 0xFE;
    const bool be = bytes.size() >= 2 && byte(0) == 0xFE && byte(1) == 0xFF;
    if (!le && !be) return std::string(bytes);

    if (bytes.size() % 2 != 0) throw ParseError("UTF-16 input has an odd byte count", 1);
    std::string out;
    out.reserve(bytes.size() / 2);
    char32_t pending_high = 0;
    for (std::size_t i = 2; i + 1 < bytes.size(); i += 2) {
        const char32_t unit = le ? (byte(i) | (byte(i + 1) << 8)) : ((byte(i) << 8) | byte(i + 1));
        if (unit >= 0xD800 && unit <= 0xDBFF) {
            pending_high = unit;
            continue;
        }
        if (unit >= 0xDC00 && unit <= 0xDFFF) {
            if (pending_high == 0) {
                append(out, kReplacement);
                continue;
            }
            append(out, 0x10000 + ((pending_high - 0xD800) << 10) + (unit - 0xDC00));
            pending_high = 0;
            continue;
        }
        if (pending_high != 0) {
            append(out, kReplacement);
            pending_high = 0;
        }
        append(out, unit);
    }
    return out;
}

char32_t to_lower(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 32;
    // Latin-1 supplement capitals, excluding the multiplication sign.
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    // Latin Extended-A pairs capital/small on even/odd code points.
    if (cp >= 0x100 && cp <= 0x137 && cp % 2 == 0) return cp + 1;
    return cp;
}

bool is_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0xA0: case 0x2007: case 0x202F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punct(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    }
    switch (cp) {
        case 0xA1: case 0xAB: case 0xBB: case 0xBF: case 0xB7:
            return true;
        default:
            // General punctuation block: dashes, quotes, ellipsis, ...
            return cp >= 0x2010 && cp <= 0x2027;
    }
}

}  // namespace utf8

TokenSequence normalize_text(std::string_view raw) {
    TokenSequence seq;
    const std::u32string cps = utf8::decode(raw);

    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && utf8::is_space(cps[i])) ++i;
        std::size_t begin = i;
        while (i < cps.size() && !utf8::is_space(cps[i])) ++i;
        std::size_t end = i;

        while (begin < end && utf8::is_punct(cps[begin])) ++begin;
        while (end > begin && utf8::is_punct(cps[end - 1])) --end;
        if (begin == end) continue;

        std::string token;
        for (std::size_t k = begin; k < end; ++k) utf8::append(token, utf8::to_lower(cps[k]));
        seq.tokens.push_back(std::move(token));
    }
    return seq;
}

std::string join_tokens(const TokenSequence& seq) {
    std::string out;
    for (const auto& token : seq.tokens) {
        if (!out.empty()) out += ' ';
        out += token;
    }
    return out;
}

}  // namespace narrisk
