#include "lwf/error.hpp"
#include "lwf/text.hpp"

#include <gtest/gtest.h>

#include <array>
#include <string>

using namespace lwf;

TEST(Text, DecodesMultibyteCodepoints) {
    const std::string s = "a\xC3\xA9\xE4\xBD\xA0\xF0\x9F\x98\x80";  // a é 你 😀
    std::size_t pos = 0;
    EXPECT_EQ(next_codepoint(s, pos), U'a');
    EXPECT_EQ(next_codepoint(s, pos), U'é');
    EXPECT_EQ(next_codepoint(s, pos), U'你');
    EXPECT_EQ(next_codepoint(s, pos), U'\U0001F600');
    EXPECT_EQ(pos, s.size());
}

TEST(Text, MalformedBytesBecomeReplacementAndAdvanceOne) {
    const std::string truncated = "\xE4\xBD";
    std::size_t pos = 0;
    EXPECT_EQ(next_codepoint(truncated, pos), U'�');
    EXPECT_EQ(pos, 1u);

    const std::string stray = "\x80x";
    pos = 0;
    EXPECT_EQ(next_codepoint(stray, pos), U'�');
    EXPECT_EQ(next_codepoint(stray, pos), U'x');
}

TEST(Text, ClassifiesScripts) {
    EXPECT_TRUE(is_cjk(U'你'));
    EXPECT_TRUE(is_cjk(U'あ'));  // hiragana
    EXPECT_TRUE(is_cjk(U'가'));  // hangul
    EXPECT_FALSE(is_cjk(U'a'));
    EXPECT_FALSE(is_cjk(U'。'));  // ideographic full stop
    EXPECT_TRUE(is_latin_letter(U'Z'));
    EXPECT_TRUE(is_latin_letter(U'é'));
    EXPECT_FALSE(is_latin_letter(U'×'));
    EXPECT_FALSE(is_latin_letter(U'1'));
}

TEST(Text, SubstituteDoesNotRescanValues) {
    const std::array<std::pair<std::string_view, std::string_view>, 2> values = {
        std::pair<std::string_view, std::string_view>{"{A}", "{B}"}, {"{B}", "b"}};
    EXPECT_EQ(substitute("x{A}y{B}z{A}", values), "x{B}ybz{B}");
    EXPECT_EQ(substitute("no placeholders", values), "no placeholders");
}

TEST(Text, Helpers) {
    EXPECT_EQ(trim("  a b \n"), "a b");
    EXPECT_EQ(trim(" \t"), "");
    EXPECT_EQ(to_lower_ascii("YeS"), "yes");
    EXPECT_TRUE(starts_with_icase("Yes, indeed", "yes"));
    EXPECT_FALSE(starts_with_icase("Ye", "yes"));
    const std::array<std::string, 3> parts = {"a", "b", "c"};
    EXPECT_EQ(join(parts, "\n\n"), "a\n\nb\n\nc");
}

TEST(Text, LanguageRoundTrip) {
    EXPECT_EQ(parse_language(to_string(Language::En)), Language::En);
    EXPECT_EQ(parse_language(to_string(Language::Zh)), Language::Zh);
    EXPECT_THROW(parse_language("fr"), Error);
}
