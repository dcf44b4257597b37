#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include "cwm/core/error.hpp"
#include "cwm/intervene/intervention.hpp"

namespace cwm {

namespace detail {

/// Recursive-descent reader for the intervention grammar. Error offsets point
/// just past the last token that was accepted.
class DslParser {
 public:
  explicit DslParser(std::string_view text) : s_(text) {}

  Intervention parse() {
    Intervention out;
    skip_ws();
    if (pos_ >= s_.size()) fail("empty intervention");
    const std::size_t start = pos_;
    const std::string_view cmd = word();
    if (cmd.empty()) fail("expected a command keyword");
    if (cmd == "NULL") {
      out.kind = InterventionKind::kNull;
      if (at_end()) return out;
    } else if (cmd == "REMOVE" || cmd == "FREEZE") {
      out.kind = cmd == "REMOVE" ? InterventionKind::kRemove : InterventionKind::kFreeze;
      out.target_id = id_clause();
    } else if (cmd == "REPLACE") {
      out.kind = InterventionKind::kReplace;
      out.target_id = id_clause();
      expect_word("WITH");
      attrs(out);
    } else if (cmd == "SET") {
      out.target_id = id_clause();
      const std::size_t key_start = (skip_ws(), pos_);
      const std::string_view key = word();
      if (key == "velocity") {
        expect_char('=');
        out.kind = InterventionKind::kSetMotion;
        out.velocity = vec();
      } else if (key == "attributes") {
        expect_char('=');
        out.kind = InterventionKind::kSetAttribute;
        out.attribute_text = quoted();
      } else if (key.empty()) {
        fail("expected velocity= or attributes=");
      } else {
        throw ParseError(Errc::kUnknownKeyword, key_start, "unknown SET field '" + std::string(key) + "'");
      }
    } else {
      throw ParseError(Errc::kUnknownKeyword, start, "unknown command '" + std::string(cmd) + "'");
    }
    suffix(out);
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& message, Errc code = Errc::kParse) const {
    throw ParseError(code, last_end_, message);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }

  std::string_view word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (pos_ > start) last_end_ = pos_;
    return s_.substr(start, pos_ - start);
  }

  std::string_view peek_word() {
    const std::size_t pos = pos_;
    const std::size_t last = last_end_;
    const std::string_view w = word();
    pos_ = pos;
    last_end_ = last;
    return w;
  }

  void expect_word(std::string_view keyword) {
    const std::size_t pos = pos_;
    const std::size_t last = last_end_;
    if (word() != keyword) {
      pos_ = pos;
      last_end_ = last;
      fail("expected '" + std::string(keyword) + "'");
    }
  }

  void expect_char(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    last_end_ = ++pos_;
  }

  bool next_is(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  std::size_t scan_number(bool allow_fraction) {
    skip_ws();
    std::size_t end = pos_;
    if (end < s_.size() && (s_[end] == '-' || s_[end] == '+')) ++end;
    const std::size_t digits = end;
    while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
    if (end == digits) return pos_;
    if (allow_fraction && end + 1 < s_.size() && s_[end] == '.' && std::isdigit(static_cast<unsigned char>(s_[end + 1]))) {
      ++end;
      while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
    }
    return end;
  }

  int integer() {
    const std::size_t end = scan_number(false);
    if (end == pos_) fail("expected integer");
    std::size_t begin = pos_;
    if (s_[begin] == '+') ++begin;
    int value = 0;
    auto [ptr, ec] = std::from_chars(s_.data() + begin, s_.data() + end, value);
    if (ec != std::errc{} || ptr != s_.data() + end) fail("integer out of range");
    last_end_ = pos_ = end;
    return value;
  }

  double number() {
    const std::size_t end = scan_number(true);
    if (end == pos_) fail("expected number");
    std::size_t begin = pos_;
    if (s_[begin] == '+') ++begin;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s_.data() + begin, s_.data() + end, value);
    if (ec != std::errc{} || ptr != s_.data() + end) fail("number out of range");
    last_end_ = pos_ = end;
    return value;
  }

  int id_clause() {
    expect_word("id");
    expect_char('=');
    const int id = integer();
    if (id < 0) fail("id must be non-negative");
    return id;
  }

  Vec2 vec() {
    expect_char('(');
    const double a = number();
    expect_char(',');
    const double b = number();
    expect_char(')');
    return {a, b};
  }

  std::string quoted() {
    expect_char('"');
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      out += s_[pos_++];
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    last_end_ = ++pos_;
    return out;
  }

  Rgb color_value() {
    skip_ws();
    if (next_is('(')) {
      expect_char('(');
      int c[3];
      for (int i = 0; i < 3; ++i) {
        if (i) expect_char(',');
        c[i] = integer();
        if (c[i] < 0 || c[i] > 255) fail("color channel outside 0..255", Errc::kUnknownColor);
      }
      expect_char(')');
      return {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]), static_cast<std::uint8_t>(c[2])};
    }
    if (next_is('#')) {
      const std::size_t start = pos_;
      std::size_t end = pos_ + 1;
      while (end < s_.size() && std::isxdigit(static_cast<unsigned char>(s_[end]))) ++end;
      auto c = parse_color(s_.substr(start, end - start));
      if (!c) fail("malformed hex color", Errc::kUnknownColor);
      last_end_ = pos_ = end;
      return *c;
    }
    const std::string_view name = word();
    if (name.empty()) fail("expected color");
    auto c = parse_color(name);
    if (!c) fail("unknown color '" + std::string(name) + "'", Errc::kUnknownColor);
    return *c;
  }

  void attrs(Intervention& out) {
    int count = 0;
    for (;;) {
      if (at_end() || peek_word() == "AT") break;
      const std::size_t key_start = (skip_ws(), pos_);
      const std::string_view key = word();
      if (key.empty()) fail("expected attribute");
      auto once = [&](bool present) {
        if (present) fail("attribute '" + std::string(key) + "' given twice");
      };
      if (key == "shape") {
        once(out.shape.has_value());
        expect_char('=');
        const std::string_view name = word();
        auto shape = parse_shape(name);
        if (!shape) fail("unknown shape '" + std::string(name) + "'", Errc::kUnknownShape);
        out.shape = shape;
      } else if (key == "color") {
        once(out.color.has_value());
        expect_char('=');
        out.color = color_value();
      } else if (key == "size") {
        once(out.size.has_value());
        expect_char('=');
        expect_char('(');
        const int w = integer();
        expect_char(',');
        const int h = integer();
        expect_char(')');
        if (w <= 0 || h <= 0) fail("size must be positive");
        out.size = std::make_pair(w, h);
      } else if (key == "velocity") {
        once(out.velocity.has_value());
        expect_char('=');
        out.velocity = vec();
      } else {
        throw ParseError(Errc::kUnknownKeyword, key_start, "unknown attribute '" + std::string(key) + "'");
      }
      ++count;
    }
    if (count == 0) fail("REPLACE needs at least one attribute");
  }

  void suffix(Intervention& out) {
    expect_word("AT");
    expect_word("t");
    expect_char('=');
    out.at_frame = integer();
    if (out.at_frame < 0) fail("t must be non-negative");
    if (at_end()) return;
    if (peek_word() != "FOR") fail("unexpected trailing input");
    if (out.kind != InterventionKind::kFreeze) fail("FOR applies only to FREEZE");
    expect_word("FOR");
    const int d = integer();
    if (d < 0) fail("FOR duration must be non-negative");
    out.freeze_frames = d;
    if (!at_end()) fail("unexpected trailing input");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t last_end_ = 0;
};

}  // namespace detail

/// Parses the intervention DSL. Throws ParseError (kParse, kUnknownKeyword,
/// kUnknownShape or kUnknownColor) carrying the byte offset.
inline Intervention parse_intervention(std::string_view text) { return detail::DslParser(text).parse(); }

/// Text whose leading word is not a DSL keyword is a natural-language query.
inline bool is_natural_language(std::string_view text) {
  try {
    parse_intervention(text);
    return false;
  } catch (const ParseError& e) {
    if (e.code() != Errc::kUnknownKeyword) return false;
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    return e.offset() == i;
  }
}

/// DSL text parses; anything else becomes a natural-language intervention.
inline Intervention read_intervention(std::string_view text) {
  if (is_natural_language(text)) {
    Intervention out;
    out.kind = InterventionKind::kNatural;
    out.query = std::string(text);
    return out;
  }
  return parse_intervention(text);
}

}  // namespace cwm
