#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace parasrc {

struct ExpressionError : std::runtime_error {
  size_t position;
  ExpressionError(const std::string& msg, size_t pos)
      : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};

// Arithmetic expressions over x, y, t with +, -, *, /, ^ and the functions
// sin, cos, exp, abs, sqrt, heaviside(u) and disc(cx, cy, r). heaviside is 1
// for u > 0, 0 for u < 0 and 1/2 at u = 0; disc is the indicator of an open
// ball around (cx, cy).
class ScalarExpression {
 public:
  static ScalarExpression parse(const std::string& text) {
    Parser p(text);
    ScalarExpression e;
    e.root_ = p.parse_expression();
    p.expect_end();
    e.text_ = text;
    e.used_ = p.used_vars();
    return e;
  }

  double operator()(double x, double y, double t) const { return root_->eval(x, y, t); }
  const std::string& text() const { return text_; }

  // whether the expression references 'x', 'y' or 't'
  bool uses(char var) const { return used_[var == 'x' ? 0 : var == 'y' ? 1 : 2]; }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(double x, double y, double t) const = 0;
  };
  using NodePtr = std::shared_ptr<const Node>;

  struct Const : Node {
    double v;
    explicit Const(double v_) : v(v_) {}
    double eval(double, double, double) const override { return v; }
  };
  struct Var : Node {
    int which;  // 0 = x, 1 = y, 2 = t
    explicit Var(int w) : which(w) {}
    double eval(double x, double y, double t) const override { return which == 0 ? x : which == 1 ? y : t; }
  };
  struct Binary : Node {
    char op;
    NodePtr l, r;
    Binary(char o, NodePtr a, NodePtr b) : op(o), l(std::move(a)), r(std::move(b)) {}
    double eval(double x, double y, double t) const override {
      const double a = l->eval(x, y, t), b = r->eval(x, y, t);
      switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: return std::pow(a, b);
      }
    }
  };
  struct Negate : Node {
    NodePtr c;
    explicit Negate(NodePtr n) : c(std::move(n)) {}
    double eval(double x, double y, double t) const override { return -c->eval(x, y, t); }
  };
  struct Call : Node {
    int fn;  // 0 sin, 1 cos, 2 exp, 3 abs, 4 sqrt, 5 heaviside
    NodePtr a;
    Call(int f, NodePtr arg) : fn(f), a(std::move(arg)) {}
    double eval(double x, double y, double t) const override {
      const double v = a->eval(x, y, t);
      switch (fn) {
        case 0: return std::sin(v);
        case 1: return std::cos(v);
        case 2: return std::exp(v);
        case 3: return std::abs(v);
        case 4: return std::sqrt(v);
        default: return v > 0.0 ? 1.0 : v < 0.0 ? 0.0 : 0.5;
      }
    }
  };
  struct Disc : Node {
    double cx, cy, r2;
    Disc(double cx_, double cy_, double r_) : cx(cx_), cy(cy_), r2(r_ * r_) {}
    double eval(double x, double y, double) const override {
      const double dx = x - cx, dy = y - cy;
      return dx * dx + dy * dy < r2 ? 1.0 : 0.0;
    }
  };

  class Parser {
   public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse_expression() {
      NodePtr lhs = parse_term();
      for (;;) {
        skip_ws();
        if (peek() == '+' || peek() == '-') {
          const char op = take();
          lhs = std::make_shared<Binary>(op, lhs, parse_term());
        } else {
          return lhs;
        }
      }
    }

    void expect_end() {
      skip_ws();
      if (pos_ < s_.size()) throw ExpressionError("unexpected trailing input", pos_);
    }

    std::array<bool, 3> used_vars() const { return used_; }

   private:
    NodePtr parse_term() {
      NodePtr lhs = parse_unary();
      for (;;) {
        skip_ws();
        if (peek() == '*' || peek() == '/') {
          const char op = take();
          lhs = std::make_shared<Binary>(op, lhs, parse_unary());
        } else {
          return lhs;
        }
      }
    }

    // unary minus binds looser than ^, so -x^2 is -(x^2)
    NodePtr parse_unary() {
      skip_ws();
      if (peek() == '-') {
        take();
        return std::make_shared<Negate>(parse_unary());
      }
      if (peek() == '+') {
        take();
        return parse_unary();
      }
      return parse_power();
    }

    NodePtr parse_power() {  // right-associative, exponent may carry a sign
      NodePtr base = parse_primary();
      skip_ws();
      if (peek() == '^') {
        take();
        return std::make_shared<Binary>('^', base, parse_unary());
      }
      return base;
    }

    NodePtr parse_primary() {
      skip_ws();
      const char c = peek();
      if (c == '(') {
        take();
        NodePtr inner = parse_expression();
        expect(')');
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
      if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
      throw ExpressionError("expected a number, variable, or function", pos_);
    }

    NodePtr parse_number() {
      size_t consumed = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &consumed);
      } catch (const std::exception&) {
        throw ExpressionError("bad numeric literal", pos_);
      }
      pos_ += consumed;
      return std::make_shared<Const>(v);
    }

    NodePtr parse_ident() {
      const size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x") { used_[0] = true; return std::make_shared<Var>(0); }
      if (name == "y") { used_[1] = true; return std::make_shared<Var>(1); }
      if (name == "t") { used_[2] = true; return std::make_shared<Var>(2); }
      if (name == "pi") return std::make_shared<Const>(3.14159265358979323846);

      static const std::vector<std::string> fns = {"sin", "cos", "exp", "abs", "sqrt", "heaviside"};
      for (int i = 0; i < static_cast<int>(fns.size()); ++i)
        if (name == fns[i]) {
          expect('(');
          NodePtr arg = parse_expression();
          expect(')');
          return std::make_shared<Call>(i, arg);
        }
      if (name == "disc") {
        expect('(');
        const double cx = parse_literal();
        expect(',');
        const double cy = parse_literal();
        expect(',');
        const double r = parse_literal();
        expect(')');
        return std::make_shared<Disc>(cx, cy, r);
      }
      throw ExpressionError("unknown identifier '" + name + "'", start);
    }

    // disc() takes plain signed numbers, not sub-expressions
    double parse_literal() {
      skip_ws();
      double sign = 1.0;
      if (peek() == '-') {
        take();
        sign = -1.0;
      }
      size_t consumed = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &consumed);
      } catch (const std::exception&) {
        throw ExpressionError("expected a numeric literal", pos_);
      }
      pos_ += consumed;
      return sign * v;
    }

    void expect(char c) {
      skip_ws();
      if (peek() != c) throw ExpressionError(std::string("expected '") + c + "'", pos_);
      take();
    }

    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    char take() { return s_[pos_++]; }
    void skip_ws() {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    const std::string& s_;
    size_t pos_ = 0;
    std::array<bool, 3> used_{false, false, false};
  };

  NodePtr root_;
  std::string text_;
  std::array<bool, 3> used_{false, false, false};
};

}  // namespace parasrc
