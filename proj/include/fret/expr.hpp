#pragma once

// Arithmetic in one variable for kernel templates, e.g. "12/7 * 17/12 * eps"
// or "sqrt(eps)". Grammar: + - * / ^ (right-assoc), unary minus, parentheses,
// numbers, the variable `eps`, and sqrt/exp/log/abs/pow/min/max.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "fret/error.hpp"

namespace fret {

class Expression {
 public:
  explicit Expression(std::string text) : text_(std::move(text)) {
    Parser p{text_, 0};
    root_ = p.parse_sum();
    p.skip();
    if (p.pos != text_.size()) p.fail("unexpected '" + std::string(1, text_[p.pos]) + "'");
  }

  double operator()(double eps) const { return root_->eval(eps); }
  const std::string& text() const noexcept { return text_; }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(double eps) const = 0;
  };
  using Ptr = std::shared_ptr<const Node>;

  struct Constant : Node {
    double v;
    explicit Constant(double x) : v(x) {}
    double eval(double) const override { return v; }
  };
  struct Variable : Node {
    double eval(double eps) const override { return eps; }
  };
  struct Binary : Node {
    char op;
    Ptr a, b;
    Binary(char o, Ptr x, Ptr y) : op(o), a(std::move(x)), b(std::move(y)) {}
    double eval(double eps) const override {
      const double x = a->eval(eps);
      const double y = b->eval(eps);
      switch (op) {
        case '+': return x + y;
        case '-': return x - y;
        case '*': return x * y;
        case '/': return x / y;
        default: return std::pow(x, y);
      }
    }
  };
  struct Call : Node {
    std::string fn;
    std::vector<Ptr> args;
    Call(std::string f, std::vector<Ptr> a) : fn(std::move(f)), args(std::move(a)) {}
    double eval(double eps) const override {
      const double x = args[0]->eval(eps);
      if (fn == "sqrt") return std::sqrt(x);
      if (fn == "exp") return std::exp(x);
      if (fn == "log") return std::log(x);
      if (fn == "abs") return std::abs(x);
      if (fn == "neg") return -x;
      const double y = args[1]->eval(eps);
      if (fn == "pow") return std::pow(x, y);
      if (fn == "min") return std::min(x, y);
      return std::max(x, y);
    }
  };

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      throw ConfigError("expression '" + s + "': " + what + " at offset " + std::to_string(pos));
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

    Ptr parse_sum() {
      Ptr left = parse_product();
      while (true) {
        if (eat('+')) left = std::make_shared<Binary>('+', left, parse_product());
        else if (eat('-')) left = std::make_shared<Binary>('-', left, parse_product());
        else return left;
      }
    }
    Ptr parse_product() {
      Ptr left = parse_unary();
      while (true) {
        if (eat('*')) left = std::make_shared<Binary>('*', left, parse_unary());
        else if (eat('/')) left = std::make_shared<Binary>('/', left, parse_unary());
        else return left;
      }
    }
    Ptr parse_unary() {
      if (eat('-')) return std::make_shared<Call>("neg", std::vector<Ptr>{parse_unary()});
      if (eat('+')) return parse_unary();
      return parse_power();
    }
    Ptr parse_power() {
      Ptr base = parse_atom();
      if (eat('^')) return std::make_shared<Binary>('^', base, parse_unary());
      return base;
    }
    Ptr parse_atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end");
      if (eat('(')) {
        Ptr inner = parse_sum();
        if (!eat(')')) fail("expected ')'");
        return inner;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos += static_cast<std::size_t>(end - begin);
        return std::make_shared<Constant>(v);
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
          ++pos;
        }
        const std::string name = s.substr(start, pos - start);
        if (name == "eps") return std::make_shared<Variable>();
        int arity = 0;
        if (name == "sqrt" || name == "exp" || name == "log" || name == "abs") arity = 1;
        if (name == "pow" || name == "min" || name == "max") arity = 2;
        if (arity == 0) fail("unknown identifier '" + name + "'");
        if (!eat('(')) fail("expected '(' after " + name);
        std::vector<Ptr> args{parse_sum()};
        if (arity == 2) {
          if (!eat(',')) fail("expected ',' in " + name);
          args.push_back(parse_sum());
        }
        if (!eat(')')) fail("expected ')' after arguments of " + name);
        return std::make_shared<Call>(name, std::move(args));
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
  };

  std::string text_;
  Ptr root_;
};

}  // namespace fret
