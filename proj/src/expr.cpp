#include "siph/expr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace siph::expr {

const char* to_string(ExprError::Kind kind) {
  switch (kind) {
    case ExprError::Kind::lexical: return "lexical";
    case ExprError::Kind::syntax: return "syntax";
    case ExprError::Kind::unknown_function: return "unknown function";
    case ExprError::Kind::bind: return "bind";
  }
  return "expression";
}

ExprError::ExprError(Kind kind, Span span, const std::string& message)
    : std::invalid_argument(std::string(to_string(kind)) + " error at offset " +
                            std::to_string(span.offset) + ": " + message),
      kind_(kind),
      span_(span),
      detail_(message) {}

namespace {

struct FunctionSpec {
  const char* name;
  std::size_t min_args;
  std::size_t max_args;
};

constexpr std::array<FunctionSpec, 10> kFunctions{{
    {"abs", 1, 1}, {"sqrt", 1, 1}, {"exp", 1, 1}, {"log", 1, 1}, {"sin", 1, 1},
    {"cos", 1, 1}, {"tanh", 1, 1}, {"min", 2, SIZE_MAX}, {"max", 2, SIZE_MAX}, {"norm", 1, SIZE_MAX},
}};

const FunctionSpec* find_function(std::string_view name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return &f;
  return nullptr;
}

enum class Tok { number, variable, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
  Tok kind = Tok::end;
  Span span;
  double number = 0.0;
  std::size_t index = 0;
  std::string text;
};

Token make_token(Tok kind, Span span) {
  Token t;
  t.kind = kind;
  t.span = span;
  return t;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (digit(c) || (c == '.' && i + 1 < s.size() && digit(s[i + 1]))) {
      while (i < s.size() && digit(s[i])) ++i;
      if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && digit(s[i])) ++i;
      }
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j >= s.size() || !digit(s[j])) {
          throw ExprError(ExprError::Kind::lexical, {start, j - start}, "malformed exponent");
        }
        while (j < s.size() && digit(s[j])) ++j;
        i = j;
      }
      if (i < s.size() && ident_char(s[i])) {
        throw ExprError(ExprError::Kind::lexical, {i, 1},
                        std::string("unexpected character '") + s[i] + "' after number");
      }
      Token t;
      t.kind = Tok::number;
      t.span = {start, i - start};
      const char* first = s.data() + start;
      auto [ptr, ec] = std::from_chars(first, s.data() + i, t.number);
      if (ec != std::errc() || ptr != s.data() + i || !std::isfinite(t.number)) {
        throw ExprError(ExprError::Kind::lexical, t.span, "number out of range");
      }
      out.push_back(t);
      continue;
    }
    if (ident_start(c)) {
      while (i < s.size() && ident_char(s[i])) ++i;
      std::string text(s.substr(start, i - start));
      if (text.size() >= 2 && text[0] == 'x' && text[1] == '_') {
        const std::string_view digits = std::string_view(text).substr(2);
        bool ok = !digits.empty();
        for (char d : digits) ok = ok && digit(d);
        if (!ok) {
          throw ExprError(ExprError::Kind::lexical, {start, i - start},
                          "variable must be x_ followed by a decimal index");
        }
        Token t;
      t.kind = Tok::variable;
      t.span = {start, i - start};
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.index);
        if (ec != std::errc()) {
          throw ExprError(ExprError::Kind::lexical, t.span, "variable index out of range");
        }
        out.push_back(t);
        continue;
      }
      Token t;
      t.kind = Tok::ident;
      t.span = {start, i - start};
      t.text = std::move(text);
      out.push_back(std::move(t));
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::plus; break;
      case '-': kind = Tok::minus; break;
      case '*': kind = Tok::star; break;
      case '/': kind = Tok::slash; break;
      case '^': kind = Tok::caret; break;
      case '(': kind = Tok::lparen; break;
      case ')': kind = Tok::rparen; break;
      case ',': kind = Tok::comma; break;
      default:
        throw ExprError(ExprError::Kind::lexical, {start, 1},
                        std::string("unexpected character '") + c + "'");
    }
    out.push_back(make_token(kind, {start, 1}));
    ++i;
  }
  out.push_back(make_token(Tok::end, {s.size(), 0}));
  return out;
}

Span join(Span a, Span b) { return {a.offset, b.offset + b.length - a.offset}; }

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Ast parse_all() {
    Ast e = expr();
    if (peek().kind != Tok::end) fail(peek(), "unexpected " + describe(peek()));
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::number: return "number";
      case Tok::variable: return "variable";
      case Tok::ident: return "identifier '" + t.text + "'";
      case Tok::end: return "end of input";
      case Tok::lparen: return "'('";
      case Tok::rparen: return "')'";
      case Tok::comma: return "','";
      default: return "operator";
    }
  }

  // At end of input the error points at the last real token so that a
  // dangling operator is reported where it stands.
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    Span span = t.span;
    if (t.kind == Tok::end && pos_ > 0) span = toks_[pos_ - 1].span;
    throw ExprError(ExprError::Kind::syntax, span, msg);
  }

  static Ast binary(char op, Ast a, Ast b) {
    Node n;
    n.kind = Node::Kind::binary;
    n.op = op;
    n.span = join(a->span, b->span);
    n.args = {std::move(a), std::move(b)};
    return std::make_shared<const Node>(std::move(n));
  }

  Ast expr() {
    Ast lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const char op = take().kind == Tok::plus ? '+' : '-';
      lhs = binary(op, lhs, term());
    }
    return lhs;
  }

  Ast term() {
    Ast lhs = factor();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const char op = take().kind == Tok::star ? '*' : '/';
      lhs = binary(op, lhs, factor());
    }
    return lhs;
  }

  Ast factor() {
    if (peek().kind == Tok::minus) {
      const Token& minus = take();
      Ast operand = factor();
      Node n;
    n.kind = Node::Kind::negate;
      n.span = join(minus.span, operand->span);
      n.args = {std::move(operand)};
      return std::make_shared<const Node>(std::move(n));
    }
    return power();
  }

  Ast power() {
    Ast base = atom();
    if (peek().kind == Tok::caret) {
      take();
      return binary('^', base, factor());
    }
    return base;
  }

  Ast atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        take();
        Node n;
    n.kind = Node::Kind::number;
        n.value = t.number;
        n.span = t.span;
        return std::make_shared<const Node>(std::move(n));
      }
      case Tok::variable: {
        take();
        Node n;
    n.kind = Node::Kind::variable;
        n.index = t.index;
        n.span = t.span;
        return std::make_shared<const Node>(std::move(n));
      }
      case Tok::lparen: {
        take();
        Ast inner = expr();
        if (peek().kind != Tok::rparen) fail(peek(), "expected ')', found " + describe(peek()));
        take();
        return inner;
      }
      case Tok::ident: return call();
      default: fail(t, "expected operand, found " + describe(t));
    }
  }

  Ast call() {
    const Token& name = take();
    if (peek().kind != Tok::lparen) {
      if (name.text == "x") fail(name, "bare 'x' is only allowed as norm(x)");
      fail(peek(), "expected '(' after '" + name.text + "'");
    }
    const FunctionSpec* spec = find_function(name.text);
    if (!spec) {
      throw ExprError(ExprError::Kind::unknown_function, name.span,
                      "unknown function '" + name.text + "'");
    }
    take();
    std::vector<Ast> args;
    for (;;) {
      if (spec->name == std::string_view("norm") && peek().kind == Tok::ident &&
          peek().text == "x" && toks_[pos_ + 1].kind == Tok::rparen && args.empty()) {
        Node v;
    v.kind = Node::Kind::vector;
        v.span = take().span;
        args.push_back(std::make_shared<const Node>(std::move(v)));
      } else {
        args.push_back(expr());
      }
      if (peek().kind == Tok::comma) {
        take();
        continue;
      }
      break;
    }
    if (peek().kind != Tok::rparen) fail(peek(), "expected ')' or ',', found " + describe(peek()));
    const Token& close = take();
    const Span span = join(name.span, close.span);
    if (args.size() < spec->min_args || args.size() > spec->max_args) {
      throw ExprError(ExprError::Kind::syntax, span,
                      "wrong number of arguments to '" + name.text + "'");
    }
    if (args.size() > 1) {
      for (const auto& a : args)
        if (a->kind == Node::Kind::vector) throw ExprError(ExprError::Kind::syntax, a->span, "bare 'x' is only allowed as norm(x)");
    }
    Node n;
    n.kind = Node::Kind::call;
    n.name = name.text;
    n.span = span;
    n.args = std::move(args);
    return std::make_shared<const Node>(std::move(n));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void print_into(const Ast& a, std::string& out) {
  switch (a->kind) {
    case Node::Kind::number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", a->value);
      out += buf;
      return;
    }
    case Node::Kind::variable: out += "x_" + std::to_string(a->index); return;
    case Node::Kind::vector: out += "x"; return;
    case Node::Kind::negate:
      out += "(-";
      print_into(a->args[0], out);
      out += ")";
      return;
    case Node::Kind::binary:
      out += "(";
      print_into(a->args[0], out);
      out += ' ';
      out += a->op;
      out += ' ';
      print_into(a->args[1], out);
      out += ")";
      return;
    case Node::Kind::call:
      out += a->name + "(";
      for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (i) out += ", ";
        print_into(a->args[i], out);
      }
      out += ")";
      return;
  }
}

}  // namespace

Ast parse(std::string_view source) { return Parser(lex(source)).parse_all(); }

std::string print(const Ast& ast) {
  std::string out;
  print_into(ast, out);
  return out;
}

bool same_structure(const Ast& a, const Ast& b) {
  if (a->kind != b->kind || a->args.size() != b->args.size()) return false;
  switch (a->kind) {
    case Node::Kind::number:
      if (std::bit_cast<std::uint64_t>(a->value) != std::bit_cast<std::uint64_t>(b->value)) return false;
      break;
    case Node::Kind::variable:
      if (a->index != b->index) return false;
      break;
    case Node::Kind::binary:
      if (a->op != b->op) return false;
      break;
    case Node::Kind::call:
      if (a->name != b->name) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!same_structure(a->args[i], b->args[i])) return false;
  return true;
}

std::size_t max_index(const Ast& ast) {
  std::size_t m = ast->kind == Node::Kind::variable ? ast->index : 0;
  for (const auto& c : ast->args) m = std::max(m, max_index(c));
  return m;
}

double evaluate(const Ast& a, std::span<const double> x) {
  switch (a->kind) {
    case Node::Kind::number: return a->value;
    case Node::Kind::variable: return x[a->index - 1];
    case Node::Kind::vector: return std::sqrt(norm2(x));
    case Node::Kind::negate: return -evaluate(a->args[0], x);
    case Node::Kind::binary: {
      const double l = evaluate(a->args[0], x);
      const double r = evaluate(a->args[1], x);
      switch (a->op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        case '/': return l / r;
        default: return std::pow(l, r);
      }
    }
    case Node::Kind::call: break;
  }
  const std::string& f = a->name;
  if (f == "norm") {
    if (a->args[0]->kind == Node::Kind::vector) return std::sqrt(norm2(x));
    double s = 0.0;
    for (const auto& c : a->args) {
      const double v = evaluate(c, x);
      s += v * v;
    }
    return std::sqrt(s);
  }
  if (f == "min" || f == "max") {
    double acc = evaluate(a->args[0], x);
    for (std::size_t i = 1; i < a->args.size(); ++i) {
      const double v = evaluate(a->args[i], x);
      if (std::isnan(v) || std::isnan(acc)) {
        acc = std::numeric_limits<double>::quiet_NaN();
      } else {
        acc = f == "min" ? std::min(acc, v) : std::max(acc, v);
      }
    }
    return acc;
  }
  const double v = evaluate(a->args[0], x);
  if (f == "abs") return std::fabs(v);
  if (f == "sqrt") return std::sqrt(v);
  if (f == "exp") return std::exp(v);
  if (f == "log") return std::log(v);
  if (f == "sin") return std::sin(v);
  if (f == "cos") return std::cos(v);
  return std::tanh(v);
}

namespace {

void check_indices(const Ast& a, std::size_t n) {
  if (a->kind == Node::Kind::variable && (a->index < 1 || a->index > n)) {
    const std::string msg = a->index < 1 ? std::string("variable indices start at 1")
                                          : "index " + std::to_string(a->index) + " exceeds dimension " +
                                                std::to_string(n);
    throw ExprError(ExprError::Kind::bind, a->span, msg);
  }
  for (const auto& c : a->args) check_indices(c, n);
}

}  // namespace

ScalarField bind(const Ast& ast, std::size_t n, std::string name) {
  if (n == 0) throw DimensionError("expression dimension must be positive");
  check_indices(ast, n);
  FieldInfo info;
  info.name = name.empty() ? print(ast) : std::move(name);
  return ScalarField(n, [ast](std::span<const double> x) { return evaluate(ast, x); },
                     std::move(info));
}

}  // namespace siph::expr
