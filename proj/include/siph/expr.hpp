#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "siph/field.hpp"

namespace siph::expr {

struct Span {
  std::size_t offset = 0;
  std::size_t length = 0;
};

class ExprError : public std::invalid_argument {
 public:
  enum class Kind { lexical, syntax, unknown_function, bind };
  ExprError(Kind kind, Span span, const std::string& message);
  Kind kind() const { return kind_; }
  Span span() const { return span_; }
  /// The message without the "<kind> error at offset N:" prefix.
  const std::string& detail() const { return detail_; }

 private:
  Kind kind_;
  Span span_;
  std::string detail_;
};

const char* to_string(ExprError::Kind kind);

struct Node;
using Ast = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { number, variable, vector, negate, binary, call };
  Kind kind = Kind::number;
  double value = 0.0;      // number
  std::size_t index = 0;   // variable, 1-based
  char op = 0;             // binary: + - * / ^
  std::string name;        // call
  std::vector<Ast> args;   // negate: 1, binary: 2, call: >= 1
  Span span;
};

/// Grammar:
///   expr   := term (("+"|"-") term)*
///   term   := factor (("*"|"/") factor)*
///   factor := "-" factor | power
///   power  := atom ("^" factor)?
///   atom   := NUMBER | "x_" INDEX | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
/// A bare `x` is the full input vector and may only appear as norm's sole
/// argument.
Ast parse(std::string_view source);

/// Fully parenthesized source text; parse(print(a)) has the same structure
/// as a and identical constants.
std::string print(const Ast& ast);
bool same_structure(const Ast& a, const Ast& b);
std::size_t max_index(const Ast& ast);

/// Evaluates with no index checks. sqrt/log of negatives give NaN.
double evaluate(const Ast& ast, std::span<const double> x);

/// Field in dimension n evaluating the tree. Throws ExprError(bind) when a
/// variable index falls outside 1..n.
ScalarField bind(const Ast& ast, std::size_t n, std::string name = {});

}  // namespace siph::expr
