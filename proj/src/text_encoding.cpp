#include "charlead/text_encoding.hpp"

#include "charlead/errors.hpp"
#include "charlead/utf8.hpp"

namespace charlead {

CharVocab CharVocab::from_chars(std::vector<char32_t> chars) {
    CharVocab v;
    v.real_chars_ = std::move(chars);
    v.chars_.reserve(v.real_chars_.size() + 2);
    v.chars_.push_back(0);       // pad slot
    v.chars_.push_back(0xFFFD);  // unk slot
    for (char32_t c : v.real_chars_) {
        int32_t idx = static_cast<int32_t>(v.chars_.size());
        if (!v.index_.emplace(c, idx).second)
            throw DataError("duplicate character in vocabulary");
        v.chars_.push_back(c);
    }
    return v;
}

char32_t CharVocab::char_at(int32_t i) const {
    if (i < 2 || i >= size())
        throw DataError("vocabulary index out of range");
    return chars_[static_cast<std::size_t>(i)];
}

CharVocab build_vocab(const std::vector<std::string>& corpus) {
    std::vector<char32_t> chars;
    std::unordered_map<char32_t, int32_t> seen;
    for (const std::string& text : corpus) {
        for (char32_t c : decode_utf8(text)) {
            if (seen.emplace(c, 0).second) chars.push_back(c);
        }
    }
    if (chars.empty()) throw DataError("empty corpus");
    return CharVocab::from_chars(std::move(chars));
}

EncodedSequence encode(const std::string& text, const CharVocab& vocab) {
    const std::u32string cps = decode_utf8(text);
    if (cps.empty()) throw DataError("empty input string");
    EncodedSequence seq;
    seq.indices.reserve(cps.size());
    for (char32_t c : cps) seq.indices.push_back(vocab.index_of(c));
    return seq;
}

std::string decode(const EncodedSequence& seq, const CharVocab& vocab) {
    std::u32string out;
    out.reserve(seq.indices.size());
    for (int32_t i : seq.indices) {
        if (i == CharVocab::kPadIndex)
            throw DataError("pad index inside an encoded sequence");
        out.push_back(i == CharVocab::kUnkIndex ? char32_t{0xFFFD}
                                                : vocab.char_at(i));
    }
    return encode_utf8(out);
}

}  // namespace charlead
