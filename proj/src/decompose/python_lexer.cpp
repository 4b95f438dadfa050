// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cctype>

#include "vizforge/common/errors.hpp"
#include "vizforge/decompose/python_ast.hpp"

namespace vizforge::python {
namespace {

// Longest first so that "**=" wins over "**" and "*".
constexpr std::array<std::string_view, 24> kMultiOps = {"**=", "//=", ">>=", "<<=", "...", "**", "//", "<<",
                                                       ">>",  "<=",  ">=",  "==",  "!=",  "->", ":=", "+=",
                                                       "-=",  "*=",  "/=",  "%=",  "&=",  "|=", "^=", "@="};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:.;=";

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : s_(src) {
    if (s_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
  }

  std::vector<Token> run() {
    indents_.push_back(0);
    bool at_line_start = true;
    while (true) {
      if (at_line_start && brackets_.empty()) {
        if (!handle_indentation()) break;
        at_line_start = false;
      }
      if (pos_ >= s_.size()) break;
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n' && s_[pos_] != '\r') advance();
        continue;
      }
      if (c == '\\') {
        advance();
        if (!consume_newline()) throw ParseError("unexpected character after line continuation", line_, col_ - 1);
        if (pos_ >= s_.size()) throw ParseError("unexpected end of file after line continuation", line_, col_);
        continue;
      }
      if (c == '\n' || c == '\r') {
        const int l = line_, col = col_;
        consume_newline();
        if (brackets_.empty()) {
          push(TokenKind::kNewline, "", l, col, l);
          at_line_start = true;
        }
        continue;
      }
      lex_token();
    }
    if (!brackets_.empty()) {
      const auto& b = brackets_.back();
      throw ParseError(std::string("'") + b.ch + "' was never closed", b.line, b.column);
    }
    if (!out_.empty() && out_.back().kind != TokenKind::kNewline && out_.back().kind != TokenKind::kDedent &&
        out_.back().kind != TokenKind::kIndent) {
      push(TokenKind::kNewline, "", line_, col_, line_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(TokenKind::kDedent, "", line_, col_, line_);
    }
    push(TokenKind::kEnd, "", line_, col_, line_);
    return std::move(out_);
  }

 private:
  struct Open {
    char ch;
    int line;
    int column;
  };

  void advance() {
    ++pos_;
    ++col_;
  }

  bool consume_newline() {
    if (pos_ >= s_.size()) return false;
    if (s_[pos_] == '\r') {
      ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '\n') ++pos_;
    } else if (s_[pos_] == '\n') {
      ++pos_;
    } else {
      return false;
    }
    ++line_;
    col_ = 1;
    return true;
  }

  void push(TokenKind kind, std::string text, int line, int column, int end_line) {
    out_.push_back(Token{kind, std::move(text), line, column, end_line});
  }

  // Measures the indentation of the next non-blank, non-comment line and
  // emits INDENT/DEDENT tokens. Returns false at end of input.
  bool handle_indentation() {
    while (pos_ < s_.size()) {
      int width = 0;
      while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\f')) {
        if (s_[pos_] == '\t') {
          width = (width / 8 + 1) * 8;
        } else if (s_[pos_] == ' ') {
          ++width;
        } else {
          width = 0;
        }
        advance();
      }
      if (pos_ >= s_.size()) return false;
      const char c = s_[pos_];
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n' && s_[pos_] != '\r') advance();
        if (!consume_newline()) return false;
        continue;
      }
      if (c == '\n' || c == '\r') {
        consume_newline();
        continue;
      }
      if (c == '\\') return true;  // continuation at line start keeps the current level
      if (width > indents_.back()) {
        indents_.push_back(width);
        push(TokenKind::kIndent, "", line_, 1, line_);
      } else {
        while (width < indents_.back()) {
          indents_.pop_back();
          push(TokenKind::kDedent, "", line_, col_, line_);
        }
        if (width != indents_.back()) {
          throw ParseError("unindent does not match any outer indentation level", line_, col_);
        }
      }
      return true;
    }
    return false;
  }

  void lex_token() {
    const unsigned char c = static_cast<unsigned char>(s_[pos_]);
    const int line = line_, col = col_;
    if (ident_start(c)) {
      std::size_t end = pos_;
      while (end < s_.size() && ident_char(static_cast<unsigned char>(s_[end]))) ++end;
      const auto word = s_.substr(pos_, end - pos_);
      if (end < s_.size() && (s_[end] == '\'' || s_[end] == '"') && word.size() <= 2 && is_prefix(word)) {
        col_ += static_cast<int>(end - pos_);
        pos_ = end;
        lex_string(line, col);
        return;
      }
      col_ += static_cast<int>(end - pos_);
      pos_ = end;
      push(TokenKind::kName, std::string(word), line, col, line);
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(line, col);
      return;
    }
    if (std::isdigit(c) || (c == '.' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      lex_number(line, col);
      return;
    }
    for (auto op : kMultiOps) {
      if (s_.substr(pos_, op.size()) == op) return emit_op(op, line, col);
    }
    if (kOps1.find(static_cast<char>(c)) != std::string_view::npos) return emit_op(s_.substr(pos_, 1), line, col);
    throw ParseError(std::string("invalid character '") + static_cast<char>(c) + "'", line, col);
  }

  static bool is_prefix(std::string_view w) {
    std::string lower;
    for (char ch : w) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    static constexpr std::array<std::string_view, 8> kPrefixes = {"r", "u", "b", "f", "br", "rb", "fr", "rf"};
    for (auto p : kPrefixes) {
      if (lower == p) return true;
    }
    return false;
  }

  void emit_op(std::string_view op, int line, int col) {
    const char ch = op.size() == 1 ? op[0] : '\0';
    if (ch == '(' || ch == '[' || ch == '{') {
      brackets_.push_back({ch, line, col});
    } else if (ch == ')' || ch == ']' || ch == '}') {
      const char want = ch == ')' ? '(' : ch == ']' ? '[' : '{';
      if (brackets_.empty()) throw ParseError(std::string("unmatched '") + ch + "'", line, col);
      if (brackets_.back().ch != want) {
        throw ParseError(std::string("closing '") + ch + "' does not match '" + brackets_.back().ch + "'", line, col);
      }
      brackets_.pop_back();
    }
    pos_ += op.size();
    col_ += static_cast<int>(op.size());
    push(TokenKind::kOp, std::string(op), line, col, line);
  }

  void lex_number(int line, int col) {
    std::size_t end = pos_;
    const bool hex = s_.substr(pos_, 2) == "0x" || s_.substr(pos_, 2) == "0X";
    while (end < s_.size()) {
      const unsigned char ch = static_cast<unsigned char>(s_[end]);
      if (std::isalnum(ch) || ch == '_' || ch == '.') {
        ++end;
      } else if ((ch == '+' || ch == '-') && !hex && end > pos_ && (s_[end - 1] == 'e' || s_[end - 1] == 'E')) {
        ++end;
      } else {
        break;
      }
    }
    const std::string text(s_.substr(pos_, end - pos_));
    col_ += static_cast<int>(end - pos_);
    pos_ = end;
    push(TokenKind::kNumber, text, line, col, line);
  }

  void lex_string(int line, int col) {
    const char q = s_[pos_];
    const bool triple = s_.substr(pos_, 3) == std::string(3, q);
    const std::size_t open = triple ? 3 : 1;
    for (std::size_t i = 0; i < open; ++i) advance();
    std::string body;
    while (true) {
      if (pos_ >= s_.size()) {
        throw ParseError(triple ? "unterminated triple-quoted string literal" : "unterminated string literal", line,
                         col);
      }
      const char ch = s_[pos_];
      if (ch == '\\') {
        body.push_back(ch);
        advance();
        if (pos_ >= s_.size()) continue;
        if (s_[pos_] == '\n' || s_[pos_] == '\r') {
          const auto before = pos_;
          consume_newline();
          body.append(s_.substr(before, pos_ - before));
        } else {
          body.push_back(s_[pos_]);
          advance();
        }
        continue;
      }
      if (ch == q && (!triple || s_.substr(pos_, 3) == std::string(3, q))) {
        for (std::size_t i = 0; i < open; ++i) advance();
        break;
      }
      if (ch == '\n' || ch == '\r') {
        if (!triple) throw ParseError("unterminated string literal", line, col);
        const auto before = pos_;
        consume_newline();
        body.append(s_.substr(before, pos_ - before));
        continue;
      }
      body.push_back(ch);
      advance();
    }
    push(TokenKind::kString, std::move(body), line, col, line_);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::vector<int> indents_;
  std::vector<Open> brackets_;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace vizforge::python
