#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vaxledger::codec {

using Bytes = std::vector<std::uint8_t>;

class Value;
using List = std::vector<Value>;
using Map = std::map<std::string, Value>;

// Tree of null | bool | int64 | text | bytes | list | map. Map keys are unique
// by construction; floats are not representable.
class Value {
 public:
  using Storage = std::variant<std::nullptr_t, bool, std::int64_t, std::string, Bytes, List, Map>;

  Value() : v_(nullptr) {}
  Value(std::nullptr_t) : v_(nullptr) {}
  Value(bool b) : v_(b) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(std::int64_t i) : v_(i) {}
  Value(std::uint32_t i) : v_(static_cast<std::int64_t>(i)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(std::string_view s) : v_(std::string(s)) {}
  Value(Bytes b) : v_(std::move(b)) {}
  Value(List l) : v_(std::move(l)) {}
  Value(Map m) : v_(std::move(m)) {}

  // Guard against silent bool/int conversions from other integer widths.
  Value(double) = delete;
  Value(float) = delete;

  bool is_null() const { return std::holds_alternative<std::nullptr_t>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_text() const { return std::holds_alternative<std::string>(v_); }
  bool is_bytes() const { return std::holds_alternative<Bytes>(v_); }
  bool is_list() const { return std::holds_alternative<List>(v_); }
  bool is_map() const { return std::holds_alternative<Map>(v_); }

  // Typed accessors throw SchemaError on mismatch.
  bool as_bool() const;
  std::int64_t as_int() const;
  const std::string& as_text() const;
  const Bytes& as_bytes() const;
  const List& as_list() const;
  const Map& as_map() const;
  List& as_list();
  Map& as_map();

  const Storage& storage() const { return v_; }

  friend bool operator==(const Value&, const Value&) = default;

 private:
  Storage v_;
};

// Raised for values the canonical encoding cannot represent (invalid UTF-8).
class UnsupportedValue : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by the decoder on malformed or non-canonical input.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a decoded value does not match an expected shape.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode_canonical(const Value& v);

// Parses JSON text. Insignificant whitespace and the short escapes are
// accepted; floats, exponents and duplicate keys are rejected. Byte-strings are
// indistinguishable from text after encoding, so they decode as text.
Value decode(std::string_view text);

// Like decode, but additionally requires `text` to be exactly the canonical
// encoding of the result.
Value decode_canonical(std::string_view text);

bool is_valid_utf8(std::string_view s);

struct Digest32 {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  static Digest32 from_hex(std::string_view hex);  // throws SchemaError
  static Digest32 zero() { return {}; }

  friend bool operator==(const Digest32&, const Digest32&) = default;
  friend auto operator<=>(const Digest32&, const Digest32&) = default;
};

Digest32 hash_sha256(std::span<const std::uint8_t> data);
Digest32 hash_sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);  // lowercase only; throws SchemaError
bool is_lower_hex(std::string_view s, std::size_t expected_len);

std::string base64url_encode(std::span<const std::uint8_t> data);
std::optional<Bytes> base64url_decode(std::string_view text);

bool verhoeff_validate(std::string_view digits);

// Shape-checked field access for decoded maps.
const Value& field(const Map& m, const std::string& key);
void expect_keys(const Map& m, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional = {});

}  // namespace vaxledger::codec
