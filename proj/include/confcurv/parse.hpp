#pragma once

// Recursive-descent parser for the expression language.
//
// Grammar (whitespace between tokens is ignored):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
//   NUMBER := digits ('.' digits*)?          (exact decimal -> rational)
//   IDENT  := [A-Za-z_][A-Za-z0-9_]*         ('pi' is the circle constant)
//
// Errors carry the byte offset of the offending token and a description of
// what was expected there.

#include <confcurv/expr.hpp>

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>

namespace confcurv {

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error("parse error at offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError(pos_, "unexpected trailing input; expected one of '+', '-', '*', '/', '^' or end of input");
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ == text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* context) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError(pos_, std::string("expected '") + c + "' " + context);
    ++pos_;
  }

  Expr parse_expr() {
    Expr e = parse_term();
    while (true) {
      if (accept('+'))
        e = add(e, parse_term());
      else if (accept('-'))
        e = sub(e, parse_term());
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_unary();
    while (true) {
      if (accept('*'))
        e = mul(e, parse_unary());
      else if (accept('/'))
        e = div(e, parse_unary());
      else
        return e;
    }
  }

  Expr parse_unary() {
    if (accept('-')) return neg(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (accept('^')) return pow(base, parse_unary());
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size())
      throw ParseError(pos_, "expected a number, identifier, '(' or '-'");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      expect(')', "to close parenthesized expression");
      return e;
    }
    throw ParseError(pos_, "expected a number, identifier, '(' or '-'");
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    BigInt int_part = 0;
    for (std::size_t i = start; i < pos_; ++i) int_part = int_part * 10 + (text_[i] - '0');
    Rational v(int_part);
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      BigInt frac = 0, scale = 1;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        frac = frac * 10 + (text_[pos_] - '0');
        scale *= 10;
        ++pos_;
      }
      v += Rational(frac, scale);
    }
    return number(v);
  }

  Expr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      Expr arg = parse_expr();
      expect(')', "to close function argument");
      if (name == "sqrt") return sqrt(arg);
      if (name == "sin") return sin(arg);
      if (name == "cos") return cos(arg);
      if (name == "tan") return tan(arg);
      if (name == "exp") return exp(arg);
      if (name == "log") return log(arg);
      if (name == "abs") return abs(arg);
      if (name == "sign") return sign(arg);
      throw ParseError(start, "unknown function '" + name + "'");
    }
    if (name == "pi") return pi_constant();
    return symbol(name);
  }
};

}  // namespace detail

inline Expr parse(std::string_view text) { return detail::Parser(text).run(); }

}  // namespace confcurv
