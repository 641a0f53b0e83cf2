#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "msm/ast.hpp"
#include "msm/errors.hpp"

namespace msm {

inline constexpr std::array<std::string_view, 7> kKeywords = {
    "deterministic", "stochastic", "param", "var", "minimize", "subject", "to"};

inline bool is_keyword(std::string_view word) {
  for (auto k : kKeywords)
    if (k == word) return true;
  return false;
}

namespace detail {

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
inline bool digit(char c) { return c >= '0' && c <= '9'; }

// Length in bytes of the UTF-8 sequence starting at c (1 for ASCII or junk).
inline std::size_t utf8_len(unsigned char c) {
  if (c >= 0xF0) return 4;
  if (c >= 0xE0) return 3;
  if (c >= 0xC0) return 2;
  return 1;
}

}  // namespace detail

// Splits model text into tokens. `#` starts a comment running to end of line.
// A '-' directly followed by digits right after '(' lexes as a signed integer,
// which is how recourse offsets such as s(-1) are written.
inline std::vector<Token> tokenize(std::string_view src) {
  using namespace detail;
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;

  auto emit = [&](TokenKind kind, std::size_t begin, std::size_t len, int tok_col) {
    out.push_back(Token{kind, std::string(src.substr(begin, len)), line, tok_col});
  };

  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }

    const std::size_t begin = i;
    const int start_col = col;

    if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i])) ++i;
      const auto word = src.substr(begin, i - begin);
      emit(is_keyword(word) ? TokenKind::Keyword : TokenKind::Ident, begin, i - begin, start_col);
      col += static_cast<int>(i - begin);
      continue;
    }

    const bool signed_num = c == '-' && i + 1 < src.size() && digit(src[i + 1]) && !out.empty() &&
                            out.back().kind == TokenKind::LParen;
    if (digit(c) || signed_num) {
      if (signed_num) ++i;
      while (i < src.size() && digit(src[i])) ++i;
      TokenKind kind = TokenKind::Int;
      // "0..T" must stay INT RANGE, so a '.' only starts a fraction when a digit follows.
      if (i + 1 < src.size() && src[i] == '.' && digit(src[i + 1])) {
        ++i;
        while (i < src.size() && digit(src[i])) ++i;
        kind = TokenKind::Real;
      }
      emit(kind, begin, i - begin, start_col);
      col += static_cast<int>(i - begin);
      continue;
    }

    auto single = [&](TokenKind kind, std::size_t len) {
      emit(kind, begin, len, start_col);
      i += len;
      col += static_cast<int>(len);
    };
    const char next = i + 1 < src.size() ? src[i + 1] : '\0';
    switch (c) {
      case '(': single(TokenKind::LParen, 1); continue;
      case ')': single(TokenKind::RParen, 1); continue;
      case ':': single(TokenKind::Colon, 1); continue;
      case ',': single(TokenKind::Comma, 1); continue;
      case ';': single(TokenKind::Semi, 1); continue;
      case '+':
      case '-':
      case '*':
      case '=': single(TokenKind::Op, 1); continue;
      case '<':
      case '>':
        if (next == '=') {
          single(TokenKind::Op, 2);
          continue;
        }
        break;
      case '.':
        if (next == '.') {
          single(TokenKind::Range, 2);
          continue;
        }
        break;
      default: break;
    }
    const auto len = std::min(utf8_len(static_cast<unsigned char>(c)), src.size() - i);
    throw LexError(line, col, std::string(src.substr(i, len)));
  }
  return out;
}

}  // namespace msm
