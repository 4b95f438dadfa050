// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "vizforge/common/hash.hpp"
#include "vizforge/common/io.hpp"
#include "vizforge/common/rational.hpp"

namespace vizforge {
namespace {

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 h;
  h.update("a");
  h.update("bc");
  EXPECT_EQ(h.hex_digest(), sha256_hex("abc"));
  EXPECT_TRUE(is_sha256_hex(sha256_hex("x")));
  EXPECT_FALSE(is_sha256_hex("ABC"));
}

TEST(Rational, QuarterGridFormatting) {
  EXPECT_EQ(Rational(16, 4).to_string(), "4.00");
  EXPECT_EQ(Rational(17, 4).to_string(), "4.25");
  EXPECT_EQ(Rational(1, 2).to_string(), "0.50");
  EXPECT_EQ(Rational(-3, 4).to_string(), "-0.75");
  EXPECT_EQ(Rational(1, 3).to_string(), "1/3");
  EXPECT_EQ(Rational(1, 8).to_string(), "0.125");
}

TEST(Rational, ParseIsExact) {
  EXPECT_EQ(Rational::parse("4.0"), Rational(4));
  EXPECT_EQ(Rational::parse("3.75"), Rational(15, 4));
  EXPECT_EQ(Rational::parse("7/2"), Rational(7, 2));
  EXPECT_EQ(Rational::parse("-1.5"), Rational(-3, 2));
  EXPECT_LT(Rational::parse("3.9"), Rational(4));
  EXPECT_GT(Rational::parse("3.9"), Rational(39, 10) - Rational(1, 1000));
  EXPECT_THROW(Rational::parse("4..0"), std::invalid_argument);
  EXPECT_THROW(Rational::parse(""), std::invalid_argument);
  EXPECT_THROW(Rational::parse("abc"), std::invalid_argument);
}

TEST(Rational, RoundTripsThroughString) {
  for (int n = -40; n <= 40; ++n) {
    for (int d : {1, 2, 4, 5, 8, 10, 3, 7}) {
      const Rational r(n, d);
      EXPECT_EQ(Rational::parse(r.to_string()), r) << n << "/" << d;
    }
  }
}

TEST(CanonicalJson, SortedCompactUtf8) {
  Json j = {{"b", 1}, {"a", "é"}, {"c", {{"z", true}, {"y", nullptr}}}};
  EXPECT_EQ(canonical_dump(j), "{\"a\":\"é\",\"b\":1,\"c\":{\"y\":null,\"z\":true}}");
  EXPECT_THROW(canonical_dump(Json(std::string("\xff\xfe"))), Json::type_error);
}

TEST(Utf8, Validation) {
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("\xe2\x88\x91"));
  EXPECT_FALSE(is_valid_utf8("\xc0\xaf"));  // overlong
  EXPECT_FALSE(is_valid_utf8("\xe2\x88"));  // truncated
  EXPECT_FALSE(is_valid_utf8("\xed\xa0\x80"));  // surrogate
}

TEST(TailBytes, KeepsUtf8Boundary) {
  EXPECT_EQ(tail_bytes("abcdef", 3), "def");
  EXPECT_EQ(tail_bytes("ab", 3), "ab");
  EXPECT_EQ(tail_bytes("x\xe2\x88\x91", 2), "");
}

TEST(SeededRng, DeterministicAndInRange) {
  SeededRng a("seed");
  SeededRng b("seed");
  for (int i = 0; i < 1000; ++i) {
    const auto v = a.between(10, 40);
    EXPECT_EQ(v, b.between(10, 40));
    EXPECT_GE(v, 10);
    EXPECT_LE(v, 40);
  }
}

TEST(SplitLines, HandlesCrlfAndMissingFinalNewline) {
  EXPECT_EQ(split_lines("a\r\nb\nc"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(split_lines("a\n"), (std::vector<std::string>{"a"}));
  EXPECT_TRUE(split_lines("").empty());
}

}  // namespace
}  // namespace vizforge
