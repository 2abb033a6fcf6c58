#include "vaxledger/codec.hpp"

#include <algorithm>
#include <charconv>

namespace vaxledger::codec {

namespace {

constexpr int kMaxDepth = 64;

template <typename T>
const T& get_or_throw(const Value::Storage& s, const char* what) {
  if (const T* p = std::get_if<T>(&s)) return *p;
  throw SchemaError(std::string("expected ") + what);
}

void encode_string(std::string_view s, std::string& out) {
  if (!is_valid_utf8(s)) throw UnsupportedValue("text is not valid UTF-8");
  static constexpr char kHex[] = "0123456789abcdef";
  out.push_back('"');
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (c == '"') {
      out += "\\\"";
    } else if (c == '\\') {
      out += "\\\\";
    } else if (c < 0x20) {
      out += "\\u00";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    } else {
      out.push_back(ch);
    }
  }
  out.push_back('"');
}

void encode_into(const Value& v, std::string& out) {
  std::visit(
      [&out](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::nullptr_t>) {
          out += "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          out += x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          char buf[24];
          auto res = std::to_chars(buf, buf + sizeof buf, x);
          out.append(buf, res.ptr);
        } else if constexpr (std::is_same_v<T, std::string>) {
          encode_string(x, out);
        } else if constexpr (std::is_same_v<T, Bytes>) {
          out.push_back('"');
          out += to_hex(x);
          out.push_back('"');
        } else if constexpr (std::is_same_v<T, List>) {
          out.push_back('[');
          bool first = true;
          for (const auto& item : x) {
            if (!first) out.push_back(',');
            first = false;
            encode_into(item, out);
          }
          out.push_back(']');
        } else {
          // std::map orders keys bytewise, which for UTF-8 is code point order.
          out.push_back('{');
          bool first = true;
          for (const auto& [k, item] : x) {
            if (!first) out.push_back(',');
            first = false;
            encode_string(k, out);
            out.push_back(':');
            encode_into(item, out);
          }
          out.push_back('}');
        }
      },
      v.storage());
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Value parse_document() {
    skip_ws();
    Value v = parse_value(0);
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw DecodeError(why + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  char peek() const {
    if (pos_ >= s_.size()) fail("unexpected end of input");
    return s_[pos_];
  }

  void expect_literal(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) fail("invalid literal");
    pos_ += lit.size();
  }

  Value parse_value(int depth) {
    if (depth > kMaxDepth) fail("nesting too deep");
    switch (peek()) {
      case 'n':
        expect_literal("null");
        return Value(nullptr);
      case 't':
        expect_literal("true");
        return Value(true);
      case 'f':
        expect_literal("false");
        return Value(false);
      case '"':
        return Value(parse_string());
      case '[':
        return parse_list(depth);
      case '{':
        return parse_map(depth);
      default:
        return parse_int();
    }
  }

  Value parse_int() {
    std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    std::size_t digits_start = pos_;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
    std::size_t ndigits = pos_ - digits_start;
    if (ndigits == 0) fail("unexpected character");
    if (ndigits > 1 && s_[digits_start] == '0') fail("leading zero");
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E')) fail("floating point not supported");
    std::int64_t out = 0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, out);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_) fail("integer out of range");
    if (out == 0 && s_[start] == '-') fail("negative zero");
    return Value(out);
  }

  unsigned parse_hex4() {
    if (pos_ + 4 > s_.size()) fail("truncated escape");
    unsigned cp = 0;
    for (int i = 0; i < 4; ++i) {
      char c = s_[pos_++];
      cp <<= 4;
      if (c >= '0' && c <= '9') cp |= c - '0';
      else if (c >= 'a' && c <= 'f') cp |= c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') cp |= c - 'A' + 10;
      else fail("bad hex escape");
    }
    return cp;
  }

  static void append_utf8(unsigned cp, std::string& out) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }

  std::string parse_string() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated string");
      auto c = static_cast<unsigned char>(s_[pos_]);
      if (c == '"') {
        ++pos_;
        break;
      }
      if (c < 0x20) fail("raw control character in string");
      if (c != '\\') {
        out.push_back(static_cast<char>(c));
        ++pos_;
        continue;
      }
      ++pos_;
      char esc = peek();
      ++pos_;
      switch (esc) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case '/': out.push_back('/'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'u': {
          unsigned cp = parse_hex4();
          if (cp >= 0xd800 && cp <= 0xdbff) {
            if (s_.substr(pos_, 2) != "\\u") fail("unpaired surrogate");
            pos_ += 2;
            unsigned lo = parse_hex4();
            if (lo < 0xdc00 || lo > 0xdfff) fail("unpaired surrogate");
            cp = 0x10000 + ((cp - 0xd800) << 10) + (lo - 0xdc00);
          } else if (cp >= 0xdc00 && cp <= 0xdfff) {
            fail("unpaired surrogate");
          }
          append_utf8(cp, out);
          break;
        }
        default:
          fail("unknown escape");
      }
    }
    if (!is_valid_utf8(out)) fail("invalid UTF-8 in string");
    return out;
  }

  Value parse_list(int depth) {
    ++pos_;
    List items;
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return Value(std::move(items));
    }
    while (true) {
      skip_ws();
      items.push_back(parse_value(depth + 1));
      skip_ws();
      char c = peek();
      ++pos_;
      if (c == ']') break;
      if (c != ',') fail("expected ',' or ']'");
    }
    return Value(std::move(items));
  }

  Value parse_map(int depth) {
    ++pos_;
    Map m;
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      return Value(std::move(m));
    }
    while (true) {
      skip_ws();
      if (peek() != '"') fail("expected string key");
      std::string key = parse_string();
      skip_ws();
      if (peek() != ':') fail("expected ':'");
      ++pos_;
      skip_ws();
      Value v = parse_value(depth + 1);
      if (!m.emplace(std::move(key), std::move(v)).second) fail("duplicate key");
      skip_ws();
      char c = peek();
      ++pos_;
      if (c == '}') break;
      if (c != ',') fail("expected ',' or '}'");
    }
    return Value(std::move(m));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

bool Value::as_bool() const { return get_or_throw<bool>(v_, "boolean"); }
std::int64_t Value::as_int() const { return get_or_throw<std::int64_t>(v_, "integer"); }
const std::string& Value::as_text() const { return get_or_throw<std::string>(v_, "text"); }
const Bytes& Value::as_bytes() const { return get_or_throw<Bytes>(v_, "byte-string"); }
const List& Value::as_list() const { return get_or_throw<List>(v_, "list"); }
const Map& Value::as_map() const { return get_or_throw<Map>(v_, "map"); }
List& Value::as_list() { return const_cast<List&>(std::as_const(*this).as_list()); }
Map& Value::as_map() { return const_cast<Map&>(std::as_const(*this).as_map()); }

std::string encode_canonical(const Value& v) {
  std::string out;
  encode_into(v, out);
  return out;
}

Value decode(std::string_view text) { return Parser(text).parse_document(); }

Value decode_canonical(std::string_view text) {
  Value v = decode(text);
  if (encode_canonical(v) != text) throw DecodeError("input is not in canonical form");
  return v;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    unsigned cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
    i += len;
  }
  return true;
}

const Value& field(const Map& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw SchemaError("missing field '" + key + "'");
  return it->second;
}

void expect_keys(const Map& m, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional) {
  for (auto k : required) {
    if (!m.contains(std::string(k))) throw SchemaError("missing field '" + std::string(k) + "'");
  }
  for (const auto& [k, _] : m) {
    bool known = std::find(required.begin(), required.end(), k) != required.end() ||
                 std::find(optional.begin(), optional.end(), k) != optional.end();
    if (!known) throw SchemaError("unexpected field '" + k + "'");
  }
}

}  // namespace vaxledger::codec
