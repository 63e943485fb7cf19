#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pphi2/core/error.hpp"

namespace pphi2 {

// Arithmetic expression in one variable x:
//   + - * / ^, unary minus, parentheses, numeric literals, pi,
//   exp sin cos tanh abs sqrt log cosh sech.
class Expression {
 public:
  Expression() = default;
  explicit Expression(std::string text) : text_(std::move(text)) {
    Parser p{text_, 0, {}};
    root_ = p.parse_expr();
    p.skip();
    if (p.pos != text_.size()) p.fail("unexpected character");
    nodes_ = std::make_shared<const std::vector<Node>>(std::move(p.nodes));
  }

  double operator()(double x) const { return eval(root_, x); }
  const std::string& text() const noexcept { return text_; }

 private:
  enum class Op { num, var, add, sub, mul, div, pow, neg, exp, sin, cos, tanh, abs, sqrt, log, cosh, sech };
  struct Node {
    Op op;
    double value = 0;
    int lhs = -1, rhs = -1;
  };

  struct Parser {
    std::string_view s;
    std::size_t pos;
    std::vector<Node> nodes;

    [[noreturn]] void fail(const std::string& what) const {
      throw validation_error("ExpressionError",
                             what + " at offset " + std::to_string(pos) + " in '" + std::string(s) + "'");
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    int add(Op op, int l = -1, int r = -1, double v = 0) {
      nodes.push_back({op, v, l, r});
      return static_cast<int>(nodes.size()) - 1;
    }
    int parse_expr() {
      int l = parse_term();
      for (;;) {
        if (eat('+')) l = add(Op::add, l, parse_term());
        else if (eat('-')) l = add(Op::sub, l, parse_term());
        else return l;
      }
    }
    int parse_term() {
      int l = parse_unary();
      for (;;) {
        if (eat('*')) l = add(Op::mul, l, parse_unary());
        else if (eat('/')) l = add(Op::div, l, parse_unary());
        else return l;
      }
    }
    int parse_unary() {
      if (eat('-')) return add(Op::neg, parse_unary());
      if (eat('+')) return parse_unary();
      return parse_power();
    }
    // right associative; -x^2 parses as -(x^2)
    int parse_power() {
      int base = parse_primary();
      if (eat('^')) return add(Op::pow, base, parse_unary());
      return base;
    }
    int parse_primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of expression");
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const std::string tail(s.substr(pos));
        std::size_t used = 0;
        double v = 0;
        try {
          v = std::stod(tail, &used);
        } catch (...) {
          fail("bad numeric literal");
        }
        pos += used;
        return add(Op::num, -1, -1, v);
      }
      if (eat('(')) {
        int e = parse_expr();
        if (!eat(')')) fail("expected ')'");
        return e;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string_view name = s.substr(start, pos - start);
        if (name == "x") return add(Op::var);
        if (name == "pi") return add(Op::num, -1, -1, 3.14159265358979323846);
        static constexpr std::pair<std::string_view, Op> funcs[] = {
            {"exp", Op::exp}, {"sin", Op::sin},   {"cos", Op::cos},   {"tanh", Op::tanh},
            {"abs", Op::abs}, {"sqrt", Op::sqrt}, {"log", Op::log},   {"cosh", Op::cosh},
            {"sech", Op::sech}};
        for (auto [fname, op] : funcs) {
          if (name == fname) {
            if (!eat('(')) fail("expected '(' after " + std::string(name));
            int arg = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return add(op, arg);
          }
        }
        pos = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      fail("unexpected character");
    }
  };

  double eval(int i, double x) const {
    const Node& n = (*nodes_)[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::num: return n.value;
      case Op::var: return x;
      case Op::add: return eval(n.lhs, x) + eval(n.rhs, x);
      case Op::sub: return eval(n.lhs, x) - eval(n.rhs, x);
      case Op::mul: return eval(n.lhs, x) * eval(n.rhs, x);
      case Op::div: return eval(n.lhs, x) / eval(n.rhs, x);
      case Op::pow: return std::pow(eval(n.lhs, x), eval(n.rhs, x));
      case Op::neg: return -eval(n.lhs, x);
      case Op::exp: return std::exp(eval(n.lhs, x));
      case Op::sin: return std::sin(eval(n.lhs, x));
      case Op::cos: return std::cos(eval(n.lhs, x));
      case Op::tanh: return std::tanh(eval(n.lhs, x));
      case Op::abs: return std::abs(eval(n.lhs, x));
      case Op::sqrt: return std::sqrt(eval(n.lhs, x));
      case Op::log: return std::log(eval(n.lhs, x));
      case Op::cosh: return std::cosh(eval(n.lhs, x));
      case Op::sech: return 1.0 / std::cosh(eval(n.lhs, x));
    }
    return 0;
  }

  std::string text_;
  int root_ = -1;
  std::shared_ptr<const std::vector<Node>> nodes_;
};

}  // namespace pphi2
