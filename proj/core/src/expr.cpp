#include "regmod/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace regmod {
namespace {

NodePtr make_node(Op op, std::size_t offset, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->offset = offset;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_const(double v, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  n->offset = offset;
  return n;
}

NodePtr make_var(Op op, int index0, std::size_t offset) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->index = index0;
  n->offset = offset;
  return n;
}

// Recursive-descent parser over the byte string.
class Parser {
 public:
  Parser(std::string_view text, int dp, int dx) : text_(text), dp_(dp), dx_(dx) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = make_node(Op::Add, at, lhs, term());
      } else if (accept('-')) {
        lhs = make_node(Op::Sub, at, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = make_node(Op::Mul, at, lhs, unary());
      } else if (accept('/')) {
        lhs = make_node(Op::Div, at, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) return make_node(Op::Neg, at, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("exponent must be a nonnegative integer");
      int exponent = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, exponent);
      if (ec != std::errc()) {
        pos_ = start;
        fail("exponent out of range");
      }
      auto n = std::make_shared<Node>();
      n->op = Op::Pow;
      n->index = exponent;
      n->offset = at;
      n->lhs = std::move(base);
      return n;
    }
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const std::size_t at = pos_;
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      const std::string_view ident = text_.substr(at, pos_ - at);
      if (ident == "abs" || ident == "sin" || ident == "cos" || ident == "exp" || ident == "log") {
        const Op op = ident == "abs"   ? Op::Abs
                      : ident == "sin" ? Op::Sin
                      : ident == "cos" ? Op::Cos
                      : ident == "exp" ? Op::Exp
                                       : Op::Log;
        expect('(');
        NodePtr arg = expr();
        expect(')');
        return make_node(op, at, std::move(arg));
      }
      if ((ident[0] == 'p' || ident[0] == 'x') && ident.size() > 1) {
        bool digits = true;
        for (std::size_t i = 1; i < ident.size(); ++i) digits = digits && std::isdigit(static_cast<unsigned char>(ident[i]));
        if (digits) {
          int index = 0;
          auto [ptr, ec] = std::from_chars(ident.data() + 1, ident.data() + ident.size(), index);
          const int limit = ident[0] == 'p' ? dp_ : dx_;
          if (ec != std::errc() || index < 1 || index > limit) {
            pos_ = at;
            fail("variable index out of range: " + std::string(ident) + " (declared " + ident[0] + "1.." +
                 ident[0] + std::to_string(limit) + ")");
          }
          return make_var(ident[0] == 'p' ? Op::VarP : Op::VarX, index - 1, at);
        }
      }
      pos_ = at;
      fail("unknown identifier '" + std::string(ident) + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const std::size_t at = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) fail("malformed number");
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        pos_ = save;
        fail("malformed exponent");
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + at, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = at;
      fail("malformed number");
    }
    return make_const(v, at);
  }

  std::string_view text_;
  int dp_;
  int dx_;
  std::size_t pos_ = 0;
};

double eval_node(const Node& n, const Vec& p, const Vec& x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarP: return p[n.index];
    case Op::VarX: return x[n.index];
    case Op::Neg: return -eval_node(*n.lhs, p, x);
    case Op::Add: return eval_node(*n.lhs, p, x) + eval_node(*n.rhs, p, x);
    case Op::Sub: return eval_node(*n.lhs, p, x) - eval_node(*n.rhs, p, x);
    case Op::Mul: return eval_node(*n.lhs, p, x) * eval_node(*n.rhs, p, x);
    case Op::Div: {
      const double den = eval_node(*n.rhs, p, x);
      if (den == 0.0) throw DomainError("division by zero", n.offset);
      return eval_node(*n.lhs, p, x) / den;
    }
    case Op::Pow: {
      const double b = eval_node(*n.lhs, p, x);
      double r = 1.0;
      for (int k = 0; k < n.index; ++k) r *= b;
      return r;
    }
    case Op::Abs: return std::abs(eval_node(*n.lhs, p, x));
    case Op::Sin: return std::sin(eval_node(*n.lhs, p, x));
    case Op::Cos: return std::cos(eval_node(*n.lhs, p, x));
    case Op::Exp: return std::exp(eval_node(*n.lhs, p, x));
    case Op::Log: {
      const double a = eval_node(*n.lhs, p, x);
      if (!(a > 0.0)) throw DomainError("log of nonpositive argument", n.offset);
      return std::log(a);
    }
  }
  return 0.0;
}

enum class Block { P, X, PX };

struct Dual {
  double v = 0.0;
  Vec d;
};

double ipow(double b, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= b;
  return r;
}

Dual eval_dual(const Node& n, const Vec& p, const Vec& x, Block block, Eigen::Index width) {
  switch (n.op) {
    case Op::Const: return {n.value, Vec::Zero(width)};
    case Op::VarP: {
      Dual r{p[n.index], Vec::Zero(width)};
      if (block != Block::X) r.d[n.index] = 1.0;
      return r;
    }
    case Op::VarX: {
      Dual r{x[n.index], Vec::Zero(width)};
      if (block == Block::X) r.d[n.index] = 1.0;
      if (block == Block::PX) r.d[p.size() + n.index] = 1.0;
      return r;
    }
    case Op::Neg: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      a.v = -a.v;
      a.d = -a.d;
      return a;
    }
    case Op::Add: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      Dual b = eval_dual(*n.rhs, p, x, block, width);
      return {a.v + b.v, a.d + b.d};
    }
    case Op::Sub: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      Dual b = eval_dual(*n.rhs, p, x, block, width);
      return {a.v - b.v, a.d - b.d};
    }
    case Op::Mul: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      Dual b = eval_dual(*n.rhs, p, x, block, width);
      return {a.v * b.v, b.v * a.d + a.v * b.d};
    }
    case Op::Div: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      Dual b = eval_dual(*n.rhs, p, x, block, width);
      if (b.v == 0.0) throw DomainError("division by zero", n.offset);
      const double q = a.v / b.v;
      return {q, (a.d - q * b.d) / b.v};
    }
    case Op::Pow: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      const int e = n.index;
      if (e == 0) return {1.0, Vec::Zero(width)};
      return {ipow(a.v, e), (e * ipow(a.v, e - 1)) * a.d};
    }
    case Op::Abs: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      const double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
      return {std::abs(a.v), s * a.d};
    }
    case Op::Sin: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      return {std::sin(a.v), std::cos(a.v) * a.d};
    }
    case Op::Cos: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      return {std::cos(a.v), -std::sin(a.v) * a.d};
    }
    case Op::Exp: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      const double ev = std::exp(a.v);
      return {ev, ev * a.d};
    }
    case Op::Log: {
      Dual a = eval_dual(*n.lhs, p, x, block, width);
      if (!(a.v > 0.0)) throw DomainError("log of nonpositive argument", n.offset);
      return {std::log(a.v), a.d / a.v};
    }
  }
  return {0.0, Vec::Zero(width)};
}

bool contains(const Node& n, Op op) {
  if (n.op == op) return true;
  return (n.lhs && contains(*n.lhs, op)) || (n.rhs && contains(*n.rhs, op));
}

bool abs_over_x(const Node& n) {
  if (n.op == Op::Abs && contains(*n.lhs, Op::VarX)) return true;
  return (n.lhs && abs_over_x(*n.lhs)) || (n.rhs && abs_over_x(*n.rhs));
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Node& n, std::ostringstream& os) {
  switch (n.op) {
    case Op::Const:
      if (n.value < 0.0 || std::signbit(n.value)) {
        os << "(0 - " << format_number(-n.value) << ")";
      } else {
        os << format_number(n.value);
      }
      return;
    case Op::VarP: os << 'p' << n.index + 1; return;
    case Op::VarX: os << 'x' << n.index + 1; return;
    case Op::Neg:
      os << "(-";
      print(*n.lhs, os);
      os << ")";
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-' : n.op == Op::Mul ? '*' : '/';
      os << "(";
      print(*n.lhs, os);
      os << ' ' << sym << ' ';
      print(*n.rhs, os);
      os << ")";
      return;
    }
    case Op::Pow:
      os << "(";
      print(*n.lhs, os);
      os << ")^" << n.index;
      return;
    case Op::Abs:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log: {
      const char* name = n.op == Op::Abs   ? "abs"
                         : n.op == Op::Sin ? "sin"
                         : n.op == Op::Cos ? "cos"
                         : n.op == Op::Exp ? "exp"
                                           : "log";
      os << name << "(";
      print(*n.lhs, os);
      os << ")";
      return;
    }
  }
}

void check_dims(const Expr& e, const Vec& p, const Vec& x) {
  if (p.size() != e.dp() || x.size() != e.dx()) {
    throw DimensionError("expression declared with dp=" + std::to_string(e.dp()) + ", dx=" + std::to_string(e.dx()) +
                         " evaluated at dp=" + std::to_string(p.size()) + ", dx=" + std::to_string(x.size()));
  }
}

}  // namespace

Expr Expr::parse(std::string_view text, int dp, int dx) {
  if (dp < 0 || dx < 0) throw DimensionError("negative dimension");
  Parser parser(text, dp, dx);
  return Expr(parser.parse(), dp, dx);
}

Expr Expr::constant(double value, int dp, int dx) { return Expr(make_const(value, 0), dp, dx); }

Expr Expr::var_p(int index1, int dp, int dx) {
  if (index1 < 1 || index1 > dp) throw DimensionError("parameter index out of range");
  return Expr(make_var(Op::VarP, index1 - 1, 0), dp, dx);
}

Expr Expr::var_x(int index1, int dp, int dx) {
  if (index1 < 1 || index1 > dx) throw DimensionError("variable index out of range");
  return Expr(make_var(Op::VarX, index1 - 1, 0), dp, dx);
}

double Expr::eval(const Vec& p, const Vec& x) const {
  check_dims(*this, p, x);
  return eval_node(*root_, p, x);
}

Vec Expr::grad_x(const Vec& p, const Vec& x) const {
  check_dims(*this, p, x);
  return eval_dual(*root_, p, x, Block::X, dx_).d;
}

Vec Expr::grad_p(const Vec& p, const Vec& x) const {
  check_dims(*this, p, x);
  return eval_dual(*root_, p, x, Block::P, dp_).d;
}

double Expr::eval_grad_x(const Vec& p, const Vec& x, Vec& gx) const {
  check_dims(*this, p, x);
  Dual r = eval_dual(*root_, p, x, Block::X, dx_);
  gx = std::move(r.d);
  return r.v;
}

double Expr::eval_with_grad(const Vec& p, const Vec& x, Vec& grad_px) const {
  check_dims(*this, p, x);
  Dual r = eval_dual(*root_, p, x, Block::PX, dp_ + dx_);
  grad_px = std::move(r.d);
  return r.v;
}

bool Expr::depends_on_x() const { return contains(*root_, Op::VarX); }
bool Expr::depends_on_p() const { return contains(*root_, Op::VarP); }
bool Expr::abs_on_x() const { return abs_over_x(*root_); }

std::string Expr::to_string() const {
  std::ostringstream os;
  print(*root_, os);
  return os.str();
}

namespace {
void check_compatible(const Expr& a, const Expr& b) {
  if (a.dp() != b.dp() || a.dx() != b.dx()) throw DimensionError("combining expressions with different dimensions");
}
}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  check_compatible(a, b);
  return Expr(make_node(Op::Add, 0, a.root_, b.root_), a.dp_, a.dx_);
}

Expr operator-(const Expr& a, const Expr& b) {
  check_compatible(a, b);
  return Expr(make_node(Op::Sub, 0, a.root_, b.root_), a.dp_, a.dx_);
}

Expr operator*(const Expr& a, const Expr& b) {
  check_compatible(a, b);
  return Expr(make_node(Op::Mul, 0, a.root_, b.root_), a.dp_, a.dx_);
}

Expr operator*(double s, const Expr& b) { return Expr::constant(s, b.dp_, b.dx_) * b; }

bool structurally_equal(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Const: return a.value == b.value;
    case Op::VarP:
    case Op::VarX: return a.index == b.index;
    case Op::Pow: return a.index == b.index && structurally_equal(*a.lhs, *b.lhs);
    default: break;
  }
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
  if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
  if (a.lhs && !structurally_equal(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !structurally_equal(*a.rhs, *b.rhs)) return false;
  return true;
}

}  // namespace regmod
