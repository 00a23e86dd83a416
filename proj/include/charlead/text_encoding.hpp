#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace charlead {

// Character vocabulary with two reserved slots. Index 0 pads batches and
// index 1 maps characters unseen in the training corpus; neither ever refers
// to a real corpus character. Immutable after construction, safe to share.
class CharVocab {
public:
    static constexpr int32_t kPadIndex = 0;
    static constexpr int32_t kUnkIndex = 1;

    // chars must be the distinct real characters in order; slots 0 and 1 are
    // added here.
    static CharVocab from_chars(std::vector<char32_t> chars);

    int32_t size() const { return static_cast<int32_t>(chars_.size()); }
    int32_t pad_index() const { return kPadIndex; }
    int32_t unk_index() const { return kUnkIndex; }

    // index of a character, unk_index when absent
    int32_t index_of(char32_t c) const {
        auto it = index_.find(c);
        return it == index_.end() ? kUnkIndex : it->second;
    }

    bool contains(char32_t c) const { return index_.count(c) != 0; }

    // real character at index i >= 2
    char32_t char_at(int32_t i) const;

    // the real characters in order (indices 2..size-1)
    const std::vector<char32_t>& real_chars() const { return real_chars_; }

private:
    CharVocab() = default;
    std::vector<char32_t> chars_;       // [0]=pad sentinel, [1]=unk sentinel
    std::vector<char32_t> real_chars_;  // chars_[2..]
    std::unordered_map<char32_t, int32_t> index_;
};

struct EncodedSequence {
    std::vector<int32_t> indices;
    std::size_t length() const { return indices.size(); }
};

// Vocabulary over every distinct character of the corpus, in first-appearance
// order after the reserved slots. Throws DataError("empty corpus") when the
// corpus has no characters at all.
CharVocab build_vocab(const std::vector<std::string>& corpus);

// Throws DataError("empty input string") on empty text. Unknown characters
// map to unk_index; pad_index never appears in the output.
EncodedSequence encode(const std::string& text, const CharVocab& vocab);

// Inverse of encode for in-vocabulary sequences. Index 1 renders as U+FFFD;
// index 0 is invalid here and throws.
std::string decode(const EncodedSequence& seq, const CharVocab& vocab);

}  // namespace charlead
