// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <set>

#include "vizforge/common/errors.hpp"
#include "vizforge/decompose/python_ast.hpp"

namespace vizforge::python {
namespace {

const std::set<std::string, std::less<>> kKeywords = {
    "False", "None",   "True",    "and",      "as",     "assert", "async", "await",  "break",
    "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",    "while",  "with",  "yield"};

constexpr std::array<std::string_view, 13> kAugAssign = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                         "&=", "|=", "^=", ">>=", "<<=", "**="};

constexpr int kMaxDepth = 400;

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  NodePtr module() {
    auto mod = make(NodeKind::kModule, "", peek());
    while (!at(TokenKind::kEnd)) {
      if (at(TokenKind::kNewline)) {
        ++i_;
        continue;
      }
      statement(mod->body);
    }
    mod->end_line = last_line_;
    return mod;
  }

 private:
  // ---- token helpers ----
  const Token& peek(std::size_t ahead = 0) const { return t_[std::min(i_ + ahead, t_.size() - 1)]; }
  bool at(TokenKind k) const { return peek().kind == k; }
  bool at_op(std::string_view op, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::kOp && peek(ahead).text == op;
  }
  bool at_kw(std::string_view kw, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::kName && peek(ahead).text == kw;
  }
  const Token& next() {
    const Token& tok = t_[i_];
    if (tok.kind != TokenKind::kNewline && tok.kind != TokenKind::kIndent && tok.kind != TokenKind::kDedent &&
        tok.kind != TokenKind::kEnd) {
      last_line_ = tok.end_line;
    }
    if (i_ + 1 < t_.size()) ++i_;
    return tok;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const Token& tok = peek();
    std::string near;
    switch (tok.kind) {
      case TokenKind::kNewline: near = "end of line"; break;
      case TokenKind::kIndent: near = "indent"; break;
      case TokenKind::kDedent: near = "dedent"; break;
      case TokenKind::kEnd: near = "end of file"; break;
      default: near = "'" + tok.text + "'";
    }
    throw ParseError(what + " near " + near, tok.line, tok.column);
  }
  void expect_op(std::string_view op) {
    if (!at_op(op)) fail("expected '" + std::string(op) + "'");
    next();
  }
  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) fail("expected '" + std::string(kw) + "'");
    next();
  }
  std::string expect_name() {
    if (!at(TokenKind::kName) || kKeywords.count(peek().text) != 0) fail("expected a name");
    return next().text;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    next();
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    next();
    return true;
  }
  static NodePtr make(NodeKind kind, std::string text, const Token& at) {
    auto n = std::make_unique<Node>();
    n->kind = kind;
    n->text = std::move(text);
    n->line = at.line;
    n->column = at.column;
    n->end_line = at.end_line;
    return n;
  }
  NodePtr finish(NodePtr n) {
    n->end_line = std::max(n->end_line, last_line_);
    return n;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxDepth) p_.fail("nesting too deep");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  // ---- statements ----
  void statement(std::vector<NodePtr>& out) {
    DepthGuard guard(*this);
    if (at_op("@")) return out.push_back(decorated());
    if (at(TokenKind::kIndent)) fail("unexpected indent");
    if (at(TokenKind::kName)) {
      const auto& w = peek().text;
      if (w == "if") return out.push_back(if_stmt());
      if (w == "while") return out.push_back(while_stmt());
      if (w == "for") return out.push_back(for_stmt());
      if (w == "try") return out.push_back(try_stmt());
      if (w == "with") return out.push_back(with_stmt());
      if (w == "def") return out.push_back(funcdef());
      if (w == "class") return out.push_back(classdef());
      if (w == "async" && (at_kw("def", 1) || at_kw("for", 1) || at_kw("with", 1))) {
        next();
        return statement(out);
      }
      if (w == "match" && is_soft_block()) return out.push_back(match_stmt());
    }
    simple_statements(out);
  }

  // True when the current logical line ends in ':' followed by an indented
  // block, which is how a soft keyword (match/case) opens a block.
  bool is_soft_block() const {
    std::size_t j = i_ + 1;
    if (j < t_.size() && t_[j].kind == TokenKind::kOp &&
        (t_[j].text == "=" || t_[j].text == "." || t_[j].text == ":" || t_[j].text == ",")) {
      return false;
    }
    while (j < t_.size() && t_[j].kind != TokenKind::kNewline && t_[j].kind != TokenKind::kEnd) ++j;
    return j + 1 < t_.size() && j > 0 && t_[j - 1].kind == TokenKind::kOp && t_[j - 1].text == ":" &&
           t_[j + 1].kind == TokenKind::kIndent;
  }

  void suite(Node& owner) {
    expect_op(":");
    if (accept_newline()) {
      if (!at(TokenKind::kIndent)) fail("expected an indented block");
      next();
      while (!at(TokenKind::kDedent) && !at(TokenKind::kEnd)) {
        if (at(TokenKind::kNewline)) {
          next();
          continue;
        }
        statement(owner.body);
      }
      if (at(TokenKind::kDedent)) next();
    } else {
      simple_statements(owner.body);
    }
    owner.end_line = std::max(owner.end_line, last_line_);
  }

  bool accept_newline() {
    if (!at(TokenKind::kNewline)) return false;
    next();
    return true;
  }

  NodePtr decorated() {
    std::vector<NodePtr> decos;
    const Token first = peek();
    while (at_op("@")) {
      next();
      decos.push_back(namedexpr_test());
      if (!accept_newline()) fail("expected newline after decorator");
    }
    accept_kw("async");
    NodePtr target;
    if (at_kw("def")) {
      target = funcdef();
    } else if (at_kw("class")) {
      target = classdef();
    } else {
      fail("expected 'def' or 'class' after decorator");
    }
    target->decorators = std::move(decos);
    target->line = first.line;
    target->column = first.column;
    return target;
  }

  NodePtr classdef() {
    const Token& kw = next();
    auto node = make(NodeKind::kClassDef, expect_name(), kw);
    if (accept_op("(")) {
      while (!at_op(")")) {
        auto arg = argument();
        if (arg->kind == NodeKind::kKeyword) {
          node->kids.push_back(std::move(arg));
        } else {
          node->bases.push_back(std::move(arg));
        }
        if (!accept_op(",")) break;
      }
      expect_op(")");
    }
    suite(*node);
    return finish(std::move(node));
  }

  NodePtr funcdef() {
    const Token& kw = next();
    auto node = make(NodeKind::kFunctionDef, expect_name(), kw);
    expect_op("(");
    parameters(*node, ")", true);
    expect_op(")");
    if (accept_op("->")) node->kids.push_back(test());
    suite(*node);
    return finish(std::move(node));
  }

  // Parameters of a def (annotations allowed) or a lambda. Defaults and
  // annotations are kept as kids so a walk sees them.
  void parameters(Node& owner, std::string_view close, bool annotations) {
    bool seen_kwargs = false;
    while (!at_op(close)) {
      if (seen_kwargs) fail("arguments cannot follow var-keyword argument");
      if (accept_op("/")) {
      } else if (accept_op("**")) {
        expect_name();
        if (annotations && accept_op(":")) owner.kids.push_back(test());
        seen_kwargs = true;
      } else if (accept_op("*")) {
        if (at(TokenKind::kName)) {
          expect_name();
          if (annotations && accept_op(":")) owner.kids.push_back(test());
        }
      } else {
        expect_name();
        if (annotations && accept_op(":")) owner.kids.push_back(test());
        if (accept_op("=")) owner.kids.push_back(test());
      }
      if (!accept_op(",")) break;
    }
  }

  NodePtr if_stmt() {
    const Token& kw = next();
    auto node = make(NodeKind::kStmt, "if", kw);
    node->kids.push_back(namedexpr_test());
    suite(*node);
    while (at_kw("elif")) {
      next();
      node->kids.push_back(namedexpr_test());
      suite(*node);
    }
    if (accept_kw("else")) suite(*node);
    return finish(std::move(node));
  }

  NodePtr while_stmt() {
    const Token& kw = next();
    auto node = make(NodeKind::kStmt, "while", kw);
    node->kids.push_back(namedexpr_test());
    suite(*node);
    if (accept_kw("else")) suite(*node);
    return finish(std::move(node));
  }

  NodePtr for_stmt() {
    const Token& kw = next();
    auto node = make(NodeKind::kStmt, "for", kw);
    node->kids.push_back(exprlist());
    expect_kw("in");
    node->kids.push_back(testlist_star());
    suite(*node);
    if (accept_kw("else")) suite(*node);
    return finish(std::move(node));
  }

  NodePtr try_stmt() {
    const Token& kw = next();
    auto node = make(NodeKind::kStmt, "try", kw);
    suite(*node);
    bool handlers = false;
    while (at_kw("except")) {
      next();
      handlers = true;
      accept_op("*");
      if (!at_op(":")) {
        node->kids.push_back(test());
        if (accept_kw("as")) expect_name();
        else if (accept_op(",")) fail("multiple exception types must be parenthesized");
      }
      suite(*node);
    }
    if (handlers && accept_kw("else")) suite(*node);
    if (accept_kw("finally")) {
      suite(*node);
    } else if (!handlers) {
      fail("expected 'except' or 'finally' block");
    }
    return finish(std::move(node));
  }

  NodePtr with_stmt() {
    const Token& kw = next();
    auto node = make(NodeKind::kStmt, "with", kw);
    if (at_op("(") && parenthesized_with_items()) {
      next();
      while (!at_op(")")) {
        with_item(*node);
        if (!accept_op(",")) break;
      }
      expect_op(")");
    } else {
      do {
        with_item(*node);
      } while (accept_op(","));
    }
    suite(*node);
    return finish(std::move(node));
  }

  // `with (a as b, c):` versus `with (a, b) as c:`; the former has the
  // closing paren immediately before the block colon and an `as` inside.
  bool parenthesized_with_items() const {
    int depth = 0;
    bool saw_as = false;
    for (std::size_t j = i_; j < t_.size(); ++j) {
      const auto& tok = t_[j];
      if (tok.kind == TokenKind::kOp && (tok.text == "(" || tok.text == "[" || tok.text == "{")) ++depth;
      if (tok.kind == TokenKind::kOp && (tok.text == ")" || tok.text == "]" || tok.text == "}")) {
        if (--depth == 0) {
          return saw_as && j + 1 < t_.size() && t_[j + 1].kind == TokenKind::kOp && t_[j + 1].text == ":";
        }
      }
      if (depth == 1 && tok.kind == TokenKind::kName && tok.text == "as") saw_as = true;
    }
    return false;
  }

  void with_item(Node& owner) {
    owner.kids.push_back(test());
    if (accept_kw("as")) owner.kids.push_back(expr());
  }

  NodePtr match_stmt() {
    const Token& kw = next();
    auto node = make(NodeKind::kStmt, "match", kw);
    node->kids.push_back(testlist_star());
    expect_op(":");
    if (!accept_newline() || !at(TokenKind::kIndent)) fail("expected an indented block of case clauses");
    next();
    while (!at(TokenKind::kDedent) && !at(TokenKind::kEnd)) {
      if (accept_newline()) continue;
      if (!at_kw("case")) fail("expected 'case'");
      next();
      // Patterns are skipped token-wise; they bind names but never call.
      int depth = 0;
      while (!(depth == 0 && at_op(":"))) {
        if (at(TokenKind::kNewline) || at(TokenKind::kEnd)) fail("expected ':' after case pattern");
        if (at_op("(") || at_op("[") || at_op("{")) ++depth;
        if (at_op(")") || at_op("]") || at_op("}")) --depth;
        next();
      }
      suite(*node);
    }
    if (at(TokenKind::kDedent)) next();
    return finish(std::move(node));
  }

  void simple_statements(std::vector<NodePtr>& out) {
    out.push_back(small_statement());
    while (accept_op(";")) {
      if (at(TokenKind::kNewline)) break;
      out.push_back(small_statement());
    }
    if (!accept_newline()) fail("invalid syntax");
  }

  NodePtr small_statement() {
    const Token& first = peek();
    if (first.kind == TokenKind::kName) {
      const auto& w = first.text;
      if (w == "pass" || w == "break" || w == "continue") {
        next();
        return make(NodeKind::kStmt, w, first);
      }
      if (w == "return") {
        next();
        auto n = make(NodeKind::kStmt, "return", first);
        if (!ends_statement()) n->kids.push_back(testlist_star());
        return finish(std::move(n));
      }
      if (w == "raise") {
        next();
        auto n = make(NodeKind::kStmt, "raise", first);
        if (!ends_statement()) {
          n->kids.push_back(test());
          if (accept_kw("from")) n->kids.push_back(test());
        }
        return finish(std::move(n));
      }
      if (w == "global" || w == "nonlocal") {
        next();
        auto n = make(NodeKind::kStmt, w, first);
        do {
          expect_name();
        } while (accept_op(","));
        return finish(std::move(n));
      }
      if (w == "del") {
        next();
        auto n = make(NodeKind::kStmt, "del", first);
        n->kids.push_back(exprlist());
        return finish(std::move(n));
      }
      if (w == "assert") {
        next();
        auto n = make(NodeKind::kStmt, "assert", first);
        n->kids.push_back(test());
        if (accept_op(",")) n->kids.push_back(test());
        return finish(std::move(n));
      }
      if (w == "import") return import_stmt();
      if (w == "from") return from_import();
    }
    auto n = make(NodeKind::kStmt, "expr", first);
    if (at_kw("yield")) {
      n->kids.push_back(yield_expr());
      return finish(std::move(n));
    }
    n->kids.push_back(testlist_star());
    if (accept_op(":")) {
      n->text = "annassign";
      n->kids.push_back(test());
      if (accept_op("=")) n->kids.push_back(at_kw("yield") ? yield_expr() : testlist_star());
    } else if (at(TokenKind::kOp) &&
               std::find(kAugAssign.begin(), kAugAssign.end(), peek().text) != kAugAssign.end()) {
      next();
      n->text = "augassign";
      n->kids.push_back(at_kw("yield") ? yield_expr() : testlist());
    } else {
      while (accept_op("=")) {
        n->text = "assign";
        n->kids.push_back(at_kw("yield") ? yield_expr() : testlist_star());
      }
    }
    return finish(std::move(n));
  }

  bool ends_statement() const { return at(TokenKind::kNewline) || at_op(";") || at(TokenKind::kEnd); }

  std::string dotted_name() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  NodePtr import_stmt() {
    const Token& kw = next();
    auto n = make(NodeKind::kImport, "", kw);
    do {
      const Token& at_tok = peek();
      auto alias = make(NodeKind::kAlias, dotted_name(), at_tok);
      if (accept_kw("as")) expect_name();
      n->kids.push_back(std::move(alias));
    } while (accept_op(","));
    return finish(std::move(n));
  }

  NodePtr from_import() {
    const Token& kw = next();
    std::string module;
    while (at_op(".") || at_op("...")) module += next().text;
    if (!at_kw("import")) module += dotted_name();
    if (module.empty()) fail("expected a module name");
    auto n = make(NodeKind::kImportFrom, module, kw);
    expect_kw("import");
    if (accept_op("*")) {
      n->kids.push_back(make(NodeKind::kAlias, "*", kw));
      return finish(std::move(n));
    }
    const bool paren = accept_op("(");
    do {
      if (paren && at_op(")")) break;
      const Token& at_tok = peek();
      auto alias = make(NodeKind::kAlias, expect_name(), at_tok);
      if (accept_kw("as")) expect_name();
      n->kids.push_back(std::move(alias));
    } while (accept_op(","));
    if (paren) expect_op(")");
    return finish(std::move(n));
  }

  // ---- expressions ----
  bool starts_expression() const {
    const Token& tok = peek();
    if (tok.kind == TokenKind::kName) {
      return kKeywords.count(tok.text) == 0 || tok.text == "None" || tok.text == "True" || tok.text == "False" ||
             tok.text == "not" || tok.text == "lambda" || tok.text == "await" || tok.text == "yield";
    }
    if (tok.kind == TokenKind::kNumber || tok.kind == TokenKind::kString) return true;
    if (tok.kind != TokenKind::kOp) return false;
    static const std::set<std::string, std::less<>> kStarts = {"(", "[", "{", "-", "+", "~", "*", "...", "**"};
    return kStarts.count(tok.text) != 0;
  }

  NodePtr tuple_from(const Token& first, NodePtr head, bool allow_star, bool stop_at_in = false) {
    if (!at_op(",")) return head;
    auto tup = make(NodeKind::kCollection, "tuple", first);
    tup->kids.push_back(std::move(head));
    while (accept_op(",")) {
      if (!starts_expression() || (stop_at_in && at_kw("in"))) break;
      tup->kids.push_back(allow_star ? star_or(stop_at_in) : test());
    }
    return finish(std::move(tup));
  }

  NodePtr star_or(bool bitwise_only) {
    if (at_op("*")) {
      const Token& s = next();
      auto n = make(NodeKind::kStarred, "", s);
      n->kids.push_back(expr());
      return finish(std::move(n));
    }
    return bitwise_only ? expr() : namedexpr_test();
  }

  NodePtr testlist_star() {
    const Token& first = peek();
    return tuple_from(first, star_or(false), true);
  }

  NodePtr testlist() {
    const Token& first = peek();
    auto head = test();
    if (!at_op(",")) return head;
    auto tup = make(NodeKind::kCollection, "tuple", first);
    tup->kids.push_back(std::move(head));
    while (accept_op(",")) {
      if (!starts_expression()) break;
      tup->kids.push_back(test());
    }
    return finish(std::move(tup));
  }

  // Targets of `for`/`del`/comprehensions: bitwise-or expressions, so that
  // the following `in` is not taken as a comparison.
  NodePtr exprlist() {
    const Token& first = peek();
    return tuple_from(first, star_or(true), true, true);
  }

  NodePtr yield_expr() {
    const Token& kw = next();
    auto n = make(NodeKind::kOp, "yield", kw);
    if (accept_kw("from")) {
      n->text = "yield from";
      n->kids.push_back(test());
    } else if (starts_expression() && !at_kw("yield")) {
      n->kids.push_back(testlist_star());
    }
    return finish(std::move(n));
  }

  NodePtr namedexpr_test() {
    if (at(TokenKind::kName) && at_op(":=", 1)) {
      const Token& name = peek();
      auto target = make(NodeKind::kName, expect_name(), name);
      next();
      auto n = make(NodeKind::kOp, ":=", name);
      n->kids.push_back(std::move(target));
      n->kids.push_back(test());
      return finish(std::move(n));
    }
    return test();
  }

  NodePtr test() {
    DepthGuard guard(*this);
    if (at_kw("lambda")) return lambda_expr(false);
    const Token& first = peek();
    auto cond_true = or_test();
    if (at_kw("if")) {
      next();
      auto n = make(NodeKind::kOp, "ifexp", first);
      n->kids.push_back(std::move(cond_true));
      n->kids.push_back(or_test());
      expect_kw("else");
      n->kids.push_back(test());
      return finish(std::move(n));
    }
    return cond_true;
  }

  NodePtr test_nocond() {
    if (at_kw("lambda")) return lambda_expr(true);
    return or_test();
  }

  NodePtr lambda_expr(bool nocond) {
    const Token& kw = next();
    auto n = make(NodeKind::kLambda, "", kw);
    parameters(*n, ":", false);
    expect_op(":");
    n->kids.push_back(nocond ? test_nocond() : test());
    return finish(std::move(n));
  }

  NodePtr binary_chain(NodePtr (Parser::*sub)(), std::initializer_list<std::string_view> ops, bool keyword) {
    const Token& first = peek();
    auto left = (this->*sub)();
    while (true) {
      std::string op;
      for (auto o : ops) {
        if (keyword ? at_kw(o) : at_op(o)) op = o;
      }
      if (op.empty()) return left;
      next();
      auto n = make(NodeKind::kOp, op, first);
      n->kids.push_back(std::move(left));
      n->kids.push_back((this->*sub)());
      left = finish(std::move(n));
    }
  }

  NodePtr or_test() { return binary_chain(&Parser::and_test, {"or"}, true); }
  NodePtr and_test() { return binary_chain(&Parser::not_test, {"and"}, true); }

  NodePtr not_test() {
    DepthGuard guard(*this);
    if (at_kw("not")) {
      const Token& kw = next();
      auto n = make(NodeKind::kOp, "not", kw);
      n->kids.push_back(not_test());
      return finish(std::move(n));
    }
    return comparison();
  }

  NodePtr comparison() {
    const Token& first = peek();
    auto left = expr();
    while (true) {
      std::string op;
      if (at(TokenKind::kOp) && (peek().text == "<" || peek().text == ">" || peek().text == "==" ||
                                 peek().text == ">=" || peek().text == "<=" || peek().text == "!=")) {
        op = next().text;
      } else if (at_kw("in")) {
        op = next().text;
      } else if (at_kw("not") && at_kw("in", 1)) {
        next();
        next();
        op = "not in";
      } else if (at_kw("is")) {
        next();
        op = accept_kw("not") ? "is not" : "is";
      } else {
        return left;
      }
      auto n = make(NodeKind::kOp, op, first);
      n->kids.push_back(std::move(left));
      n->kids.push_back(expr());
      left = finish(std::move(n));
    }
  }

  NodePtr expr() { return binary_chain(&Parser::xor_expr, {"|"}, false); }
  NodePtr xor_expr() { return binary_chain(&Parser::and_expr, {"^"}, false); }
  NodePtr and_expr() { return binary_chain(&Parser::shift_expr, {"&"}, false); }
  NodePtr shift_expr() { return binary_chain(&Parser::arith_expr, {"<<", ">>"}, false); }
  NodePtr arith_expr() { return binary_chain(&Parser::term, {"+", "-"}, false); }
  NodePtr term() { return binary_chain(&Parser::factor, {"*", "/", "%", "//", "@"}, false); }

  NodePtr factor() {
    DepthGuard guard(*this);
    if (at_op("+") || at_op("-") || at_op("~")) {
      const Token& op = next();
      auto n = make(NodeKind::kOp, "u" + op.text, op);
      n->kids.push_back(factor());
      return finish(std::move(n));
    }
    return power();
  }

  NodePtr power() {
    const Token& first = peek();
    NodePtr base;
    if (at_kw("await")) {
      next();
      base = make(NodeKind::kOp, "await", first);
      base->kids.push_back(atom_expr());
      base = finish(std::move(base));
    } else {
      base = atom_expr();
    }
    if (accept_op("**")) {
      auto n = make(NodeKind::kOp, "**", first);
      n->kids.push_back(std::move(base));
      n->kids.push_back(factor());
      return finish(std::move(n));
    }
    return base;
  }

  NodePtr atom_expr() {
    auto node = atom();
    while (true) {
      if (at_op("(")) {
        const Token& open = next();
        auto call = make(NodeKind::kCall, "", open);
        call->line = node->line;
        call->column = node->column;
        call->kids.push_back(std::move(node));
        while (!at_op(")")) {
          call->kids.push_back(argument());
          if (call->kids.back()->kind != NodeKind::kKeyword && call->kids.back()->kind != NodeKind::kStarred &&
              at_comp_for()) {
            auto gen = make(NodeKind::kComprehension, "gen", open);
            gen->kids.push_back(std::move(call->kids.back()));
            comp_for(*gen);
            call->kids.back() = finish(std::move(gen));
          }
          if (!accept_op(",")) break;
        }
        expect_op(")");
        node = finish(std::move(call));
      } else if (at_op("[")) {
        const Token& open = next();
        auto sub = make(NodeKind::kSubscript, "", open);
        sub->line = node->line;
        sub->column = node->column;
        sub->kids.push_back(std::move(node));
        do {
          if (at_op("]")) break;
          sub->kids.push_back(subscript());
        } while (accept_op(","));
        expect_op("]");
        node = finish(std::move(sub));
      } else if (at_op(".")) {
        next();
        const Token& name_tok = peek();
        auto attr = make(NodeKind::kAttribute, expect_name(), name_tok);
        attr->line = node->line;
        attr->column = node->column;
        attr->kids.push_back(std::move(node));
        node = finish(std::move(attr));
      } else {
        return node;
      }
    }
  }

  NodePtr subscript() {
    const Token& first = peek();
    if (at_op("*")) return star_or(true);
    NodePtr lower;
    if (!at_op(":")) {
      lower = namedexpr_test();
      if (!at_op(":")) return lower;
    }
    auto slice = make(NodeKind::kSlice, "", first);
    if (lower) slice->kids.push_back(std::move(lower));
    expect_op(":");
    if (!at_op(":") && !at_op("]") && !at_op(",")) slice->kids.push_back(test());
    if (accept_op(":")) {
      if (!at_op("]") && !at_op(",")) slice->kids.push_back(test());
    }
    return finish(std::move(slice));
  }

  NodePtr argument() {
    const Token& first = peek();
    if (at_op("*") || at_op("**")) {
      const std::string op = next().text;
      auto n = make(op == "*" ? NodeKind::kStarred : NodeKind::kKeyword, "", first);
      n->kids.push_back(test());
      return finish(std::move(n));
    }
    if (at(TokenKind::kName) && at_op("=", 1)) {
      auto n = make(NodeKind::kKeyword, expect_name(), first);
      next();
      n->kids.push_back(test());
      return finish(std::move(n));
    }
    return namedexpr_test();
  }

  bool at_comp_for() const { return at_kw("for") || (at_kw("async") && at_kw("for", 1)); }

  void comp_for(Node& comp) {
    while (at_comp_for()) {
      accept_kw("async");
      next();
      comp.kids.push_back(exprlist());
      expect_kw("in");
      comp.kids.push_back(or_test());
      while (at_kw("if")) {
        next();
        comp.kids.push_back(test_nocond());
      }
    }
  }

  NodePtr atom() {
    DepthGuard guard(*this);
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::kNumber:
        next();
        return make(NodeKind::kNumber, tok.text, tok);
      case TokenKind::kString: {
        auto n = make(NodeKind::kString, "", tok);
        while (at(TokenKind::kString)) n->text += next().text;
        return finish(std::move(n));
      }
      case TokenKind::kName: {
        if (tok.text == "None" || tok.text == "True" || tok.text == "False") {
          next();
          return make(NodeKind::kConstant, tok.text, tok);
        }
        if (kKeywords.count(tok.text) != 0) fail("invalid syntax");
        next();
        return make(NodeKind::kName, tok.text, tok);
      }
      case TokenKind::kOp:
        if (tok.text == "...") {
          next();
          return make(NodeKind::kConstant, "...", tok);
        }
        if (tok.text == "(") return paren_atom();
        if (tok.text == "[") return list_atom();
        if (tok.text == "{") return brace_atom();
        break;
      default:
        break;
    }
    fail("invalid syntax");
  }

  NodePtr paren_atom() {
    const Token& open = next();
    if (accept_op(")")) return finish(make(NodeKind::kCollection, "tuple", open));
    if (at_kw("yield")) {
      auto y = yield_expr();
      expect_op(")");
      return y;
    }
    auto first = star_or(false);
    if (at_comp_for()) {
      auto gen = make(NodeKind::kComprehension, "gen", open);
      gen->kids.push_back(std::move(first));
      comp_for(*gen);
      expect_op(")");
      return finish(std::move(gen));
    }
    if (!at_op(",")) {
      expect_op(")");
      return first;
    }
    auto tup = make(NodeKind::kCollection, "tuple", open);
    tup->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op(")")) break;
      tup->kids.push_back(star_or(false));
    }
    expect_op(")");
    return finish(std::move(tup));
  }

  NodePtr list_atom() {
    const Token& open = next();
    auto list = make(NodeKind::kCollection, "list", open);
    if (accept_op("]")) return finish(std::move(list));
    auto first = star_or(false);
    if (at_comp_for()) {
      auto comp = make(NodeKind::kComprehension, "list", open);
      comp->kids.push_back(std::move(first));
      comp_for(*comp);
      expect_op("]");
      return finish(std::move(comp));
    }
    list->kids.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      list->kids.push_back(star_or(false));
    }
    expect_op("]");
    return finish(std::move(list));
  }

  NodePtr brace_atom() {
    const Token& open = next();
    if (accept_op("}")) return finish(make(NodeKind::kCollection, "dict", open));
    // Decide dict versus set from the first element.
    bool is_dict = false;
    NodePtr first;
    NodePtr first_value;
    if (accept_op("**")) {
      is_dict = true;
      first = expr();
    } else {
      first = star_or(false);
      if (accept_op(":")) {
        is_dict = true;
        first_value = test();
      }
    }
    if (at_comp_for()) {
      auto comp = make(NodeKind::kComprehension, is_dict ? "dict" : "set", open);
      comp->kids.push_back(std::move(first));
      if (first_value) comp->kids.push_back(std::move(first_value));
      comp_for(*comp);
      expect_op("}");
      return finish(std::move(comp));
    }
    auto coll = make(NodeKind::kCollection, is_dict ? "dict" : "set", open);
    coll->kids.push_back(std::move(first));
    if (first_value) coll->kids.push_back(std::move(first_value));
    while (accept_op(",")) {
      if (at_op("}")) break;
      if (is_dict) {
        if (accept_op("**")) {
          coll->kids.push_back(expr());
        } else {
          coll->kids.push_back(test());
          expect_op(":");
          coll->kids.push_back(test());
        }
      } else {
        coll->kids.push_back(star_or(false));
      }
    }
    expect_op("}");
    return finish(std::move(coll));
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
  int last_line_ = 0;
  int depth_ = 0;
};

}  // namespace

NodePtr parse_module(std::string_view source) { return Parser(tokenize(source)).module(); }

std::string terminal_name(const Node& expr) {
  if (expr.kind == NodeKind::kName || expr.kind == NodeKind::kAttribute) return expr.text;
  return {};
}

}  // namespace vizforge::python
