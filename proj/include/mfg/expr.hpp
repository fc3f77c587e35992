#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace mfg {

/// Arithmetic expression in the variables t, x1..xk: literals, + - * /,
/// unary minus, exp(a), min(a,b), max(a,b), parentheses.
///
/// Trees are immutable after construction and never deeper than 64 levels.
class Expression {
 public:
  enum class Op { Literal, VarT, VarX, Add, Sub, Mul, Div, Neg, Exp, Min, Max };

  struct Node {
    Op op = Op::Literal;
    double value = 0.0;  // Literal
    int var = -1;        // VarX, zero-based coordinate
    int a = -1, b = -1;  // children
  };

  /// The literal 0.
  Expression();

  static Expression literal(double v);
  static Expression from_nodes(std::vector<Node> nodes, int root);

  double eval(double t, const Eigen::VectorXd& x) const;

  /// Prints with minimal parentheses; reparsing the result of a
  /// parser-produced tree yields a structurally identical tree.
  std::string to_string() const;

  int depth() const;
  int max_var_index() const;  // largest x coordinate used (zero-based), -1 if none

  bool operator==(const Expression& other) const;
  bool operator!=(const Expression& other) const { return !(*this == other); }

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Parses an expression over t, x1..xk.  `line` and `col0` offset the
/// positions reported in errors so expressions embedded in larger documents
/// point at the right place.  Throws ParseError on syntax errors, unknown
/// identifiers, out-of-range state variables, and trees deeper than 64.
Expression parse_expression(const std::string& text, int k, int line = 1,
                            int col0 = 1);

}  // namespace mfg
