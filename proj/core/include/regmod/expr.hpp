#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "regmod/types.hpp"

namespace regmod {

enum class Op { Const, VarP, VarX, Neg, Add, Sub, Mul, Div, Pow, Abs, Sin, Cos, Exp, Log };

struct Node {
  Op op = Op::Const;
  double value = 0.0;       // Const
  int index = 0;            // 0-based variable index for VarP/VarX, exponent for Pow
  std::size_t offset = 0;   // byte offset in the source text
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

/// Immutable scalar expression over parameters p (dimension dp) and decision
/// variables x (dimension dx).
///
/// Derivatives are exact forward-mode. The derivative of abs(t) at t = 0 is
/// taken as 0.
class Expr {
 public:
  Expr() : Expr(constant(0.0, 0, 0)) {}

  /// Parses the expression grammar. Throws ParseError on syntax errors,
  /// unknown identifiers and out-of-range variable indices.
  static Expr parse(std::string_view text, int dp, int dx);

  static Expr constant(double value, int dp, int dx);
  static Expr var_p(int index1, int dp, int dx);
  static Expr var_x(int index1, int dp, int dx);

  int dp() const noexcept { return dp_; }
  int dx() const noexcept { return dx_; }
  const NodePtr& root() const noexcept { return root_; }

  double eval(const Vec& p, const Vec& x) const;
  Vec grad_x(const Vec& p, const Vec& x) const;
  Vec grad_p(const Vec& p, const Vec& x) const;
  double eval_grad_x(const Vec& p, const Vec& x, Vec& gx) const;
  // Value together with the gradient over the stacked vector (p, x).
  double eval_with_grad(const Vec& p, const Vec& x, Vec& grad_px) const;

  bool depends_on_x() const;
  bool depends_on_p() const;
  // True when abs(...) wraps a subexpression containing an x variable.
  bool abs_on_x() const;

  // Fully parenthesized text that parses back to the same tree.
  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator*(double s, const Expr& b);

 private:
  Expr(NodePtr root, int dp, int dx) : root_(std::move(root)), dp_(dp), dx_(dx) {}

  NodePtr root_;
  int dp_ = 0;
  int dx_ = 0;
};

bool structurally_equal(const Node& a, const Node& b);
inline bool structurally_equal(const Expr& a, const Expr& b) {
  return a.dp() == b.dp() && a.dx() == b.dx() && structurally_equal(*a.root(), *b.root());
}

}  // namespace regmod
