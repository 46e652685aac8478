#pragma once

// CLIP byte-level BPE tokenizer. The vocabulary is derived from merges.txt:
// 256 byte symbols, the same with the end-of-word marker, one token per
// merge, then <|startoftext|> and <|endoftext|>.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace screenrep {

class ClipTokenizer {
public:
    static constexpr std::size_t kContextLength = 77;

    /// Throws ModelError when the file is missing or malformed.
    explicit ClipTokenizer(const std::filesystem::path& merges_path, std::size_t max_merges = 49152 - 256 - 2);

    /// <|startoftext|> ... <|endoftext|>. Throws InputError when the result
    /// exceeds kContextLength ids.
    std::vector<std::int32_t> encode(std::string_view text) const;

    /// Lower-cased, whitespace-collapsed text split by the CLIP pre-tokenizer pattern.
    static std::vector<std::string> pre_tokenize(std::string_view text);

    std::int32_t sot_id() const { return sot_; }
    std::int32_t eot_id() const { return eot_; }
    std::size_t vocab_size() const { return vocab_.size(); }

private:
    std::vector<std::string> bpe(const std::string& word) const;

    std::unordered_map<std::string, std::int32_t> vocab_;
    std::unordered_map<std::string, std::int32_t> ranks_;  // "left right" -> rank
    std::string byte_symbol_[256];
    std::int32_t sot_ = 0;
    std::int32_t eot_ = 0;
};

}  // namespace screenrep
