#include <doctest.h>

#include <string>
#include <vector>

#include "charlead/errors.hpp"
#include "charlead/rng.hpp"
#include "charlead/text_encoding.hpp"
#include "charlead/utf8.hpp"

using namespace charlead;

TEST_CASE("vocabulary lists characters in first-appearance order") {
    const CharVocab vocab = build_vocab({"RED", "BLUE"});
    CHECK(vocab.size() == 8);  // PAD UNK R E D B L U
    CHECK(vocab.pad_index() == 0);
    CHECK(vocab.unk_index() == 1);
    CHECK(vocab.index_of(U'R') == 2);
    CHECK(vocab.index_of(U'E') == 3);
    CHECK(vocab.index_of(U'D') == 4);
    CHECK(vocab.index_of(U'B') == 5);
    CHECK(vocab.index_of(U'L') == 6);
    CHECK(vocab.index_of(U'U') == 7);
    for (int32_t i = 2; i < vocab.size(); ++i)
        CHECK(vocab.index_of(vocab.char_at(i)) == i);
}

TEST_CASE("vocabulary deduplicates") {
    const CharVocab vocab = build_vocab({"aa", "aa"});
    CHECK(vocab.size() == 3);
    CHECK(vocab.index_of(U'a') == 2);
}

TEST_CASE("empty corpus is rejected") {
    CHECK_THROWS_WITH_AS(build_vocab({""}), "empty corpus", DataError);
    CHECK_THROWS_AS(build_vocab({}), DataError);
    CHECK_THROWS_AS(build_vocab({"", ""}), DataError);
}

TEST_CASE("vocabulary is case-sensitive") {
    const CharVocab vocab = build_vocab({"aA"});
    CHECK(vocab.size() == 4);
    CHECK(vocab.index_of(U'a') != vocab.index_of(U'A'));
}

TEST_CASE("encode maps known and unknown characters") {
    const CharVocab vocab = build_vocab({"RED", "BLUE"});
    const EncodedSequence red = encode("RED", vocab);
    CHECK(red.indices == std::vector<int32_t>{2, 3, 4});
    CHECK(red.length() == 3);
    const EncodedSequence rez = encode("REZ", vocab);
    CHECK(rez.indices == std::vector<int32_t>{2, 3, 1});
    CHECK_THROWS_WITH_AS(encode("", vocab), "empty input string", DataError);
}

TEST_CASE("multi-byte characters take one timestep") {
    const CharVocab vocab = build_vocab({"héllo", "zoë"});
    CHECK(encode("hé", vocab).length() == 2);
    CHECK(vocab.contains(U'é'));
    CHECK(vocab.contains(U'ë'));
}

TEST_CASE("round trip over in-vocabulary strings") {
    const CharVocab vocab = build_vocab({"abcdefgh ij,!?0123"});
    RngStream rng(42, "roundtrip");
    for (int it = 0; it < 200; ++it) {
        std::u32string text;
        const std::size_t len = 1 + rng.below(40);
        for (std::size_t i = 0; i < len; ++i)
            text.push_back(vocab.char_at(
                2 + static_cast<int32_t>(rng.below(vocab.size() - 2))));
        const std::string utf8 = encode_utf8(text);
        const EncodedSequence seq = encode(utf8, vocab);
        CHECK(decode(seq, vocab) == utf8);
        for (int32_t idx : seq.indices) {
            CHECK(idx != vocab.pad_index());
            CHECK(idx < vocab.size());
        }
    }
}

TEST_CASE("build_vocab is deterministic given corpus order") {
    const std::vector<std::string> corpus = {"some text", "more text here"};
    const CharVocab a = build_vocab(corpus);
    const CharVocab b = build_vocab(corpus);
    REQUIRE(a.size() == b.size());
    for (int32_t i = 2; i < a.size(); ++i) CHECK(a.char_at(i) == b.char_at(i));
}

TEST_CASE("utf8 decoding is lenient, encoding is exact") {
    CHECK(decode_utf8("h\xC3\xA9llo").size() == 5);
    // stray continuation byte becomes one replacement character
    const std::u32string bad = decode_utf8("a\x80z");
    REQUIRE(bad.size() == 3);
    CHECK(bad[1] == char32_t{0xFFFD});
    CHECK(encode_utf8(decode_utf8("héllo, zoë")) == "héllo, zoë");
}
