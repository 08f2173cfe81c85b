#pragma once

#include "koopgram/numkernel.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

// Tiny expression language for user-declared dynamics: + - * / ^ on the
// variables x1..xn and u1..ul, numeric constants, sin, cos, tanh. Exponents
// must be constants. Accepts infix strings or JSON trees
// {"op": "+", "args": [...]}, {"var": "x1"}, numbers.

namespace koopgram::expr {

enum class Op { constant, state, input, add, sub, mul, div, neg, pow, sin, cos, tanh };

struct Node;
using ExprPtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  double value = 0.0;  // constant value or exponent for pow
  int index = 0;       // zero-based variable index
  std::vector<ExprPtr> args;
};

ExprPtr constant(double v);
ExprPtr state(int index);
ExprPtr input(int index);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr neg(ExprPtr a);
ExprPtr pow(ExprPtr a, double exponent);
ExprPtr call(Op fn, ExprPtr a);

ExprPtr parse(const std::string& text);
ExprPtr from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExprPtr& e);
std::string to_string(const ExprPtr& e);

double eval(const ExprPtr& e, const Vector& x, const Vector& u);
ExprPtr diff(const ExprPtr& e, Op var_kind, int index);

bool is_zero(const ExprPtr& e);
// Largest state / input index referenced plus one.
int state_arity(const ExprPtr& e);
int input_arity(const ExprPtr& e);

// Vector of expressions evaluated together.
struct VectorExpr {
  std::vector<ExprPtr> items;

  Vector eval(const Vector& x, const Vector& u) const;
  // d items / d x (rows = items, cols = n)
  Matrix jacobian_x(const Vector& x, const Vector& u, int n) const;
  std::vector<std::vector<ExprPtr>> jacobian_exprs(Op var_kind, int dim) const;
};

}  // namespace koopgram::expr
