// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace vizforge::python {

enum class TokenKind { kName, kNumber, kString, kOp, kNewline, kIndent, kDedent, kEnd };

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string text;   // raw source text; for strings, the literal's contents
  int line = 0;       // 1-based
  int column = 0;     // 1-based, in bytes
  int end_line = 0;   // differs from line for triple-quoted strings
};

/// Tokenizes Python 3 source. Throws ParseError on unterminated strings,
/// unbalanced brackets, inconsistent dedents and stray characters.
std::vector<Token> tokenize(std::string_view source);

enum class NodeKind {
  kModule,
  kClassDef,
  kFunctionDef,
  kImport,      // kids: kAlias per imported module
  kImportFrom,  // text: module (with leading dots); kids: kAlias per name
  kAlias,
  kStmt,        // any other statement; text names it ("if", "assign", ...)
  kName,
  kAttribute,   // text: attribute; kids[0]: value
  kCall,        // kids[0]: callee; kids[1..]: arguments
  kKeyword,     // text: argument name (empty for **); kids[0]: value
  kStarred,
  kString,      // text: literal contents, adjacent literals concatenated
  kNumber,
  kConstant,    // None, True, False, ...
  kCollection,  // text: list, tuple, set or dict
  kComprehension,  // text: list, gen, set or dict; kids[0]: element
  kLambda,
  kOp,          // text: operator; kids: operands
  kSubscript,
  kSlice,
};

struct Node {
  NodeKind kind = NodeKind::kStmt;
  std::string text;
  int line = 0;
  int column = 0;
  int end_line = 0;
  std::vector<std::unique_ptr<Node>> kids;        // expressions
  std::vector<std::unique_ptr<Node>> body;        // nested statements, all clauses in order
  std::vector<std::unique_ptr<Node>> decorators;  // class/def only
  std::vector<std::unique_ptr<Node>> bases;       // class only, keywords excluded
};

using NodePtr = std::unique_ptr<Node>;

/// Parses a module. Static only: nothing is imported or evaluated.
NodePtr parse_module(std::string_view source);

/// Last component of a Name or Attribute; empty for anything else.
std::string terminal_name(const Node& expr);

/// Pre-order walk in source order over kids, decorators, bases and body.
template <typename F>
void walk(const Node& node, F&& visit) {
  visit(node);
  for (const auto& d : node.decorators) walk(*d, visit);
  for (const auto& b : node.bases) walk(*b, visit);
  for (const auto& k : node.kids) walk(*k, visit);
  for (const auto& s : node.body) walk(*s, visit);
}

}  // namespace vizforge::python
