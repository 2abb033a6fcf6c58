#include "vaxledger/codec.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <unordered_map>

#include "oracles.hpp"

namespace vaxledger::codec {
namespace {

std::string str(const Value& v) { return encode_canonical(v); }

TEST(Canonical, SortsMapKeys) {
  EXPECT_EQ(str(Map{{"b", 2}, {"a", 1}}), R"({"a":1,"b":2})");
  EXPECT_EQ(str(Map{}), "{}");
}

TEST(Canonical, GoldenNestedValue) {
  // Worked by hand: keys "h" < "tx"; list elements comma-joined; no spaces.
  EXPECT_EQ(str(Map{{"tx", List{1, 2}}, {"h", "ab"}}), R"({"h":"ab","tx":[1,2]})");
}

TEST(Canonical, Scalars) {
  EXPECT_EQ(str(nullptr), "null");
  EXPECT_EQ(str(true), "true");
  EXPECT_EQ(str(false), "false");
  EXPECT_EQ(str(0), "0");
  EXPECT_EQ(str(-17), "-17");
  EXPECT_EQ(str(std::numeric_limits<std::int64_t>::min()), "-9223372036854775808");
  EXPECT_EQ(str(Bytes{0x00, 0xab, 0xff}), R"("00abff")");
}

TEST(Canonical, StringEscapes) {
  EXPECT_EQ(str("a\"b\\c"), R"("a\"b\\c")");
  EXPECT_EQ(str(std::string("\n\x01\x1f", 3)), R"("\u000a\u0001\u001f")");
  EXPECT_EQ(str("/é"), "\"/é\"");
}

TEST(Canonical, KeysOrderedByCodePoint) {
  // 'Z' (0x5a) < 'a' (0x61) < 'é' (0xe9) < '中' (0x4e2d)
  EXPECT_EQ(str(Map{{"中", 1}, {"é", 2}, {"a", 3}, {"Z", 4}}), R"({"Z":4,"a":3,"é":2,"中":1})");
}

TEST(Canonical, RejectsInvalidUtf8) {
  EXPECT_THROW(str(std::string("\xff")), UnsupportedValue);
  EXPECT_THROW(str(Map{{std::string("\xc0\x80"), 1}}), UnsupportedValue);
}

TEST(Decode, AcceptsWhitespaceAndShortEscapes) {
  Value v = decode(" { \"b\" : [ 1 , true ] , \"a\" : \"x\\ny\\u00e9\" } ");
  EXPECT_EQ(v, (Value(Map{{"a", "x\nyé"}, {"b", List{1, true}}})));
}

TEST(Decode, Rejections) {
  for (const char* bad : {"", "{", "[1,]", "01", "-0", "1.5", "1e3", "{\"a\":1,\"a\":2}", "{1:2}", "\"\\ud800\"",
                          "nul", "[1] x", "\"\x01\"", "99999999999999999999"}) {
    EXPECT_THROW(decode(bad), DecodeError) << bad;
  }
}

TEST(Decode, CanonicalModeRejectsNonCanonicalSpellings) {
  EXPECT_NO_THROW(decode_canonical(R"({"a":1,"b":"\u000a"})"));
  EXPECT_THROW(decode_canonical(R"({"b":1,"a":2})"), DecodeError);
  EXPECT_THROW(decode_canonical(R"({"a": 1})"), DecodeError);
  EXPECT_THROW(decode_canonical(R"("\n")"), DecodeError);
  EXPECT_THROW(decode_canonical(R"("\u000A")"), DecodeError);
  EXPECT_THROW(decode_canonical(R"("\u0041")"), DecodeError);
}

// Random value generator shared by the property tests below.
class ValueGen {
 public:
  explicit ValueGen(std::uint32_t seed) : rng_(seed) {}

  Value gen(int depth = 0) {
    int kind = pick(depth > 3 ? 5 : 7);
    switch (kind) {
      case 0: return Value(nullptr);
      case 1: return Value(pick(2) == 1);
      case 2: return Value(static_cast<std::int64_t>(rng_()) - static_cast<std::int64_t>(rng_()));
      case 3: return Value(text());
      case 4: return Value(pick(3) - 1);
      case 5: {
        List l;
        for (int i = pick(4); i > 0; --i) l.push_back(gen(depth + 1));
        return l;
      }
      default: {
        Map m;
        for (int i = pick(4); i > 0; --i) m.emplace(text(), gen(depth + 1));
        return m;
      }
    }
  }

  std::string text() {
    static const std::vector<std::string> atoms = {"a", "b", "Z", "\"", "\\", "\n", "\x01", "é", "中", "😀", " ", "0"};
    std::string s;
    for (int i = pick(5); i > 0; --i) s += atoms[pick(static_cast<int>(atoms.size()))];
    return s;
  }

  int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint32_t>(n)); }

 private:
  std::mt19937 rng_;
};

TEST(CanonicalProperty, DecodeEncodeRoundTrip) {
  ValueGen g(1234);
  for (int i = 0; i < 2000; ++i) {
    Value v = g.gen();
    std::string enc = encode_canonical(v);
    EXPECT_EQ(decode_canonical(enc), v) << enc;
  }
}

TEST(CanonicalProperty, InjectiveOnRandomCorpus) {
  ValueGen g(99);
  std::unordered_map<std::string, Value> seen;
  for (int i = 0; i < 20000; ++i) {
    Value v = g.gen();
    std::string digest = hash_sha256(encode_canonical(v)).hex();
    auto [it, inserted] = seen.emplace(digest, v);
    if (!inserted) {
      EXPECT_EQ(it->second, v) << "collision between distinct values";
    }
  }
}

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(hash_sha256(std::string_view{}).hex(), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(hash_sha256("abc").hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Sha256, AgreesWithOpenSsl) {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::string data(rng() % 300, '\0');
    for (auto& c : data) c = static_cast<char>(rng());
    EXPECT_EQ(hash_sha256(data).hex(), testing::hex(testing::openssl_sha256(data)));
    EXPECT_EQ(hash_sha256(data), hash_sha256(data));
  }
}

TEST(Digest, HexRoundTripAndValidation) {
  auto d = hash_sha256("x");
  EXPECT_EQ(Digest32::from_hex(d.hex()), d);
  EXPECT_THROW(Digest32::from_hex("AB"), SchemaError);
  std::string upper = d.hex();
  for (auto& c : upper) c = static_cast<char>(std::toupper(c));
  if (upper != d.hex()) {
    EXPECT_THROW(Digest32::from_hex(upper), SchemaError);
  }
}

TEST(Base64Url, RoundTripNoPadding) {
  Bytes data{0xfb, 0xff, 0x00, 0x01};
  auto enc = base64url_encode(data);
  EXPECT_EQ(enc, "-_8AAQ");
  EXPECT_EQ(base64url_decode(enc), data);
  EXPECT_FALSE(base64url_decode("-_8AAQ=="));
  EXPECT_FALSE(base64url_decode("-_8AA"));  // length 5 mod 4 == 1
  EXPECT_FALSE(base64url_decode("ab+/"));
}

TEST(Verhoeff, Examples) {
  EXPECT_TRUE(verhoeff_validate("2363"));
  EXPECT_FALSE(verhoeff_validate("2364"));
  EXPECT_FALSE(verhoeff_validate(""));
  EXPECT_FALSE(verhoeff_validate("23a3"));
  EXPECT_FALSE(verhoeff_validate("-2363"));
}

TEST(Verhoeff, AgreesWithOracleOnAllFourDigitStrings) {
  for (int i = 0; i < 10000; ++i) {
    char buf[5];
    std::snprintf(buf, sizeof buf, "%04d", i);
    ASSERT_EQ(verhoeff_validate(buf), testing::verhoeff_oracle(buf)) << buf;
  }
}

TEST(Verhoeff, DetectsEverySingleDigitError) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::string body;
    for (int i = 0; i < 11; ++i) body.push_back(static_cast<char>('0' + rng() % 10));
    std::string valid = testing::make_aadhaar(body);
    ASSERT_TRUE(verhoeff_validate(valid));
    for (std::size_t pos = 0; pos < valid.size(); ++pos) {
      for (char c = '0'; c <= '9'; ++c) {
        if (c == valid[pos]) continue;
        std::string bad = valid;
        bad[pos] = c;
        EXPECT_FALSE(verhoeff_validate(bad)) << bad;
      }
    }
  }
}

}  // namespace
}  // namespace vaxledger::codec
