#include "screenrep/tokenizer.hpp"

#include "screenrep/errors.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <fstream>
#include <limits>

namespace screenrep {

namespace {

std::string utf8(char32_t cp) {
    std::string out;
    icu::UnicodeString(static_cast<UChar32>(cp)).toUTF8String(out);
    return out;
}

// GPT-2 byte to printable code point table.
std::vector<char32_t> bytes_to_unicode_order(std::vector<int>& bytes) {
    bytes.clear();
    for (int b = '!'; b <= '~'; ++b) bytes.push_back(b);
    for (int b = 0xA1; b <= 0xAC; ++b) bytes.push_back(b);
    for (int b = 0xAE; b <= 0xFF; ++b) bytes.push_back(b);
    std::vector<char32_t> cps(bytes.begin(), bytes.end());
    int n = 0;
    for (int b = 0; b < 256; ++b) {
        if (std::find(bytes.begin(), bytes.end(), b) == bytes.end()) {
            bytes.push_back(b);
            cps.push_back(static_cast<char32_t>(256 + n++));
        }
    }
    return cps;
}

bool is_letter(UChar32 c) { return (U_GET_GC_MASK(c) & U_GC_L_MASK) != 0; }
bool is_number(UChar32 c) { return (U_GET_GC_MASK(c) & U_GC_N_MASK) != 0; }
bool is_space(UChar32 c) { return u_isspace(c) || (c >= 0x1C && c <= 0x1F); }

}  // namespace

ClipTokenizer::ClipTokenizer(const std::filesystem::path& merges_path, std::size_t max_merges) {
    std::ifstream in(merges_path);
    if (!in) throw ModelError("cannot open tokenizer merges: " + merges_path.string());

    std::vector<int> bytes;
    const auto cps = bytes_to_unicode_order(bytes);
    std::vector<std::string> vocab;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        byte_symbol_[bytes[i]] = utf8(cps[i]);
        vocab.push_back(byte_symbol_[bytes[i]]);
    }
    for (std::size_t i = 0; i < 256; ++i) vocab.push_back(vocab[i] + "</w>");

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line) && ranks_.size() < max_merges) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.starts_with("#version")) continue;
        if (line.empty()) continue;
        const auto space = line.find(' ');
        if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos) {
            throw ModelError(merges_path.string() + ":" + std::to_string(line_no) + ": expected two symbols");
        }
        const auto rank = static_cast<std::int32_t>(ranks_.size());
        if (!ranks_.emplace(line, rank).second) continue;
        vocab.push_back(line.substr(0, space) + line.substr(space + 1));
    }
    if (ranks_.empty()) throw ModelError(merges_path.string() + ": no merges");
    vocab.push_back("<|startoftext|>");
    vocab.push_back("<|endoftext|>");
    for (std::size_t i = 0; i < vocab.size(); ++i) vocab_.emplace(vocab[i], static_cast<std::int32_t>(i));
    sot_ = static_cast<std::int32_t>(vocab.size() - 2);
    eot_ = static_cast<std::int32_t>(vocab.size() - 1);
}

std::vector<std::string> ClipTokenizer::pre_tokenize(std::string_view text) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    u.toLower();

    std::vector<UChar32> cps;
    bool pending_space = false;
    for (int32_t i = 0; i < u.length();) {
        const UChar32 c = u.char32At(i);
        i += U16_LENGTH(c);
        if (is_space(c)) {
            pending_space = !cps.empty();
            continue;
        }
        if (pending_space) cps.push_back(' ');
        pending_space = false;
        cps.push_back(c);
    }

    auto starts_with = [&](std::size_t pos, std::u32string_view lit) {
        if (pos + lit.size() > cps.size()) return false;
        for (std::size_t k = 0; k < lit.size(); ++k) {
            if (static_cast<char32_t>(cps[pos + k]) != lit[k]) return false;
        }
        return true;
    };
    auto emit = [&](std::vector<std::string>& out, std::size_t a, std::size_t b) {
        icu::UnicodeString piece;
        for (std::size_t k = a; k < b; ++k) piece.append(cps[k]);
        std::string s;
        piece.toUTF8String(s);
        out.push_back(std::move(s));
    };

    static constexpr std::u32string_view kSpecial[] = {U"<|startoftext|>", U"<|endoftext|>"};
    static constexpr std::u32string_view kContractions[] = {U"'s", U"'t", U"'re", U"'ve", U"'m", U"'ll", U"'d"};

    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < cps.size()) {
        const UChar32 c = cps[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        std::size_t len = 0;
        for (auto lit : kSpecial) {
            if (!len && starts_with(i, lit)) len = lit.size();
        }
        for (auto lit : kContractions) {
            if (!len && starts_with(i, lit)) len = lit.size();
        }
        if (!len) {
            std::size_t j = i;
            if (is_letter(c)) {
                while (j < cps.size() && is_letter(cps[j])) ++j;
            } else if (is_number(c)) {
                j = i + 1;
            } else {
                while (j < cps.size() && !is_space(cps[j]) && !is_letter(cps[j]) && !is_number(cps[j])) ++j;
            }
            len = j - i;
        }
        emit(out, i, i + len);
        i += len;
    }
    return out;
}

std::vector<std::string> ClipTokenizer::bpe(const std::string& word) const {
    std::vector<std::string> symbols;
    for (unsigned char b : word) symbols.push_back(byte_symbol_[b]);
    if (symbols.empty()) return symbols;
    symbols.back() += "</w>";

    while (symbols.size() > 1) {
        std::int32_t best = std::numeric_limits<std::int32_t>::max();
        std::size_t at = 0;
        for (std::size_t k = 0; k + 1 < symbols.size(); ++k) {
            const auto it = ranks_.find(symbols[k] + " " + symbols[k + 1]);
            if (it != ranks_.end() && it->second < best) {
                best = it->second;
                at = k;
            }
        }
        if (best == std::numeric_limits<std::int32_t>::max()) break;
        const std::string left = symbols[at], right = symbols[at + 1];
        std::vector<std::string> merged;
        for (std::size_t k = 0; k < symbols.size();) {
            if (k + 1 < symbols.size() && symbols[k] == left && symbols[k + 1] == right) {
                merged.push_back(left + right);
                k += 2;
            } else {
                merged.push_back(symbols[k]);
                ++k;
            }
        }
        symbols = std::move(merged);
    }
    return symbols;
}

std::vector<std::int32_t> ClipTokenizer::encode(std::string_view text) const {
    std::vector<std::int32_t> ids{sot_};
    for (const std::string& piece : pre_tokenize(text)) {
        if (piece == "<|startoftext|>") {
            ids.push_back(sot_);
            continue;
        }
        if (piece == "<|endoftext|>") {
            ids.push_back(eot_);
            continue;
        }
        for (const std::string& sym : bpe(piece)) {
            const auto it = vocab_.find(sym);
            if (it == vocab_.end()) throw ModelError("tokenizer: symbol '" + sym + "' missing from the vocabulary");
            ids.push_back(it->second);
        }
    }
    ids.push_back(eot_);
    if (ids.size() > kContextLength) {
        throw InputError("prompt needs " + std::to_string(ids.size()) + " tokens; the budget is " +
                         std::to_string(kContextLength) + " including start and end markers");
    }
    return ids;
}

}  // namespace screenrep
