#include "koopgram/expr.hpp"

#include "koopgram/errors.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace koopgram::expr {
namespace {

ExprPtr make(Op op, std::vector<ExprPtr> args, double value = 0.0, int index = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->index = index;
  n->args = std::move(args);
  return n;
}

bool is_const(const ExprPtr& e, double* v = nullptr) {
  if (e->op != Op::constant) return false;
  if (v) *v = e->value;
  return true;
}

bool is_one(const ExprPtr& e) {
  double v;
  return is_const(e, &v) && v == 1.0;
}

const char* fn_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::tanh: return "tanh";
    default: return "?";
  }
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  ExprPtr run() {
    ExprPtr e = expression();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& why) const {
    std::ostringstream os;
    os << "expr: " << why << " at offset " << pos_ << " in \"" << s_ << "\"";
    throw ValidationError(os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr expression() {
    ExprPtr e = term();
    for (;;) {
      if (accept('+')) e = add(e, term());
      else if (accept('-')) e = sub(e, term());
      else return e;
    }
  }

  ExprPtr term() {
    ExprPtr e = unary();
    for (;;) {
      if (accept('*')) {
        e = mul(e, unary());
      } else if (accept('/')) {
        e = div(e, unary());
      } else {
        return e;
      }
    }
  }

  ExprPtr unary() {
    if (accept('-')) return neg(unary());
    if (accept('+')) return unary();
    return power();
  }

  ExprPtr power_of(const ExprPtr& base) {
    ExprPtr ex = unary();
    double v;
    if (!is_const(ex, &v)) fail("exponent must be a constant");
    return pow(base, v);
  }

  ExprPtr power() {
    ExprPtr base = primary();
    skip();
    if (accept('^')) return power_of(base);
    if (pos_ + 1 < s_.size() && s_[pos_] == '*' && s_[pos_ + 1] == '*') {
      pos_ += 2;
      return power_of(base);
    }
    return base;
  }

  ExprPtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      ExprPtr e = expression();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "sin" || id == "cos" || id == "tanh") {
        if (!accept('(')) fail("expected '(' after " + id);
        ExprPtr arg = expression();
        if (!accept(')')) fail("expected ')'");
        return call(id == "sin" ? Op::sin : id == "cos" ? Op::cos : Op::tanh, arg);
      }
      if ((id[0] == 'x' || id[0] == 'u') && id.size() > 1) {
        int k = 0;
        for (std::size_t i = 1; i < id.size(); ++i) {
          if (!std::isdigit(static_cast<unsigned char>(id[i]))) fail("unknown identifier '" + id + "'");
          k = 10 * k + (id[i] - '0');
        }
        if (k < 1) fail("variable indices start at 1");
        return id[0] == 'x' ? state(k - 1) : input(k - 1);
      }
      fail("unknown identifier '" + id + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

int arity(const ExprPtr& e, Op kind) {
  int m = e->op == kind ? e->index + 1 : 0;
  for (const auto& a : e->args) m = std::max(m, arity(a, kind));
  return m;
}

void print(std::ostream& os, const ExprPtr& e) {
  switch (e->op) {
    case Op::constant: {
      std::ostringstream v;
      v.precision(17);
      v << e->value;
      os << (e->value < 0 ? "(" + v.str() + ")" : v.str());
      break;
    }
    case Op::state: os << "x" << e->index + 1; break;
    case Op::input: os << "u" << e->index + 1; break;
    case Op::add: os << "("; print(os, e->args[0]); os << " + "; print(os, e->args[1]); os << ")"; break;
    case Op::sub: os << "("; print(os, e->args[0]); os << " - "; print(os, e->args[1]); os << ")"; break;
    case Op::mul: os << "("; print(os, e->args[0]); os << " * "; print(os, e->args[1]); os << ")"; break;
    case Op::div: os << "("; print(os, e->args[0]); os << " / "; print(os, e->args[1]); os << ")"; break;
    case Op::neg: os << "(-"; print(os, e->args[0]); os << ")"; break;
    case Op::pow: {
      std::ostringstream v;
      v.precision(17);
      v << e->value;
      os << "(";
      print(os, e->args[0]);
      os << "^" << (e->value < 0 ? "(" + v.str() + ")" : v.str()) << ")";
      break;
    }
    case Op::sin:
    case Op::cos:
    case Op::tanh: os << fn_name(e->op) << "("; print(os, e->args[0]); os << ")"; break;
  }
}

}  // namespace

ExprPtr constant(double v) { return make(Op::constant, {}, v); }
ExprPtr state(int index) { return make(Op::state, {}, 0.0, index); }
ExprPtr input(int index) { return make(Op::input, {}, 0.0, index); }

ExprPtr add(ExprPtr a, ExprPtr b) {
  double x, y;
  if (is_const(a, &x) && is_const(b, &y)) return constant(x + y);
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  return make(Op::add, {std::move(a), std::move(b)});
}

ExprPtr sub(ExprPtr a, ExprPtr b) {
  double x, y;
  if (is_const(a, &x) && is_const(b, &y)) return constant(x - y);
  if (is_zero(b)) return a;
  if (is_zero(a)) return neg(std::move(b));
  return make(Op::sub, {std::move(a), std::move(b)});
}

ExprPtr mul(ExprPtr a, ExprPtr b) {
  double x, y;
  if (is_const(a, &x) && is_const(b, &y)) return constant(x * y);
  if (is_zero(a) || is_zero(b)) return constant(0.0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  return make(Op::mul, {std::move(a), std::move(b)});
}

ExprPtr div(ExprPtr a, ExprPtr b) {
  double x, y;
  if (is_const(a, &x) && is_const(b, &y) && y != 0.0) return constant(x / y);
  if (is_zero(a)) return constant(0.0);
  if (is_one(b)) return a;
  return make(Op::div, {std::move(a), std::move(b)});
}

ExprPtr neg(ExprPtr a) {
  double x;
  if (is_const(a, &x)) return constant(-x);
  if (a->op == Op::neg) return a->args[0];
  return make(Op::neg, {std::move(a)});
}

ExprPtr pow(ExprPtr a, double exponent) {
  double x;
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return a;
  if (is_const(a, &x)) return constant(std::pow(x, exponent));
  return make(Op::pow, {std::move(a)}, exponent);
}

ExprPtr call(Op fn, ExprPtr a) {
  if (fn != Op::sin && fn != Op::cos && fn != Op::tanh) throw std::invalid_argument("expr: not a function op");
  double x;
  if (is_const(a, &x)) return constant(fn == Op::sin ? std::sin(x) : fn == Op::cos ? std::cos(x) : std::tanh(x));
  return make(fn, {std::move(a)});
}

bool is_zero(const ExprPtr& e) {
  double v;
  return is_const(e, &v) && v == 0.0;
}

int state_arity(const ExprPtr& e) { return arity(e, Op::state); }
int input_arity(const ExprPtr& e) { return arity(e, Op::input); }

ExprPtr parse(const std::string& text) { return Parser(text).run(); }

ExprPtr from_json(const nlohmann::json& j) {
  if (j.is_number()) return constant(j.get<double>());
  if (j.is_string()) return parse(j.get<std::string>());
  if (!j.is_object()) throw ValidationError("expr: expected number, string or object, got " + j.dump());
  if (j.contains("const")) return constant(j.at("const").get<double>());
  if (j.contains("var")) {
    ExprPtr v = parse(j.at("var").get<std::string>());
    if (v->op != Op::state && v->op != Op::input) throw ValidationError("expr: bad variable " + j.dump());
    return v;
  }
  if (!j.contains("op") || !j.contains("args") || !j.at("args").is_array())
    throw ValidationError("expr: node needs \"op\" and \"args\": " + j.dump());
  const std::string op = j.at("op").get<std::string>();
  std::vector<ExprPtr> a;
  for (const auto& x : j.at("args")) a.push_back(from_json(x));
  auto want = [&](std::size_t k) {
    if (a.size() != k) throw ValidationError("expr: '" + op + "' takes " + std::to_string(k) + " argument(s)");
  };
  if (op == "+" || op == "*") {
    if (a.empty()) throw ValidationError("expr: '" + op + "' needs arguments");
    ExprPtr acc = a[0];
    for (std::size_t i = 1; i < a.size(); ++i) acc = op == "+" ? add(acc, a[i]) : mul(acc, a[i]);
    return acc;
  }
  if (op == "-") {
    if (a.size() == 1) return neg(a[0]);
    want(2);
    return sub(a[0], a[1]);
  }
  if (op == "/") { want(2); return div(a[0], a[1]); }
  if (op == "^" || op == "pow") {
    want(2);
    double v;
    if (!is_const(a[1], &v)) throw ValidationError("expr: exponent must be a constant");
    return pow(a[0], v);
  }
  if (op == "sin" || op == "cos" || op == "tanh") {
    want(1);
    return call(op == "sin" ? Op::sin : op == "cos" ? Op::cos : Op::tanh, a[0]);
  }
  throw ValidationError("expr: unknown operator '" + op + "'");
}

nlohmann::json to_json(const ExprPtr& e) {
  using nlohmann::json;
  switch (e->op) {
    case Op::constant: return e->value;
    case Op::state: return json{{"var", "x" + std::to_string(e->index + 1)}};
    case Op::input: return json{{"var", "u" + std::to_string(e->index + 1)}};
    case Op::add: return json{{"op", "+"}, {"args", {to_json(e->args[0]), to_json(e->args[1])}}};
    case Op::sub: return json{{"op", "-"}, {"args", {to_json(e->args[0]), to_json(e->args[1])}}};
    case Op::mul: return json{{"op", "*"}, {"args", {to_json(e->args[0]), to_json(e->args[1])}}};
    case Op::div: return json{{"op", "/"}, {"args", {to_json(e->args[0]), to_json(e->args[1])}}};
    case Op::neg: return json{{"op", "-"}, {"args", json::array({to_json(e->args[0])})}};
    case Op::pow: return json{{"op", "^"}, {"args", {to_json(e->args[0]), e->value}}};
    case Op::sin:
    case Op::cos:
    case Op::tanh: return json{{"op", fn_name(e->op)}, {"args", json::array({to_json(e->args[0])})}};
  }
  return nullptr;
}

std::string to_string(const ExprPtr& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

double eval(const ExprPtr& e, const Vector& x, const Vector& u) {
  switch (e->op) {
    case Op::constant: return e->value;
    case Op::state:
      if (e->index >= x.size()) throw ValidationError("expr: x" + std::to_string(e->index + 1) + " out of range");
      return x(e->index);
    case Op::input:
      if (e->index >= u.size()) throw ValidationError("expr: u" + std::to_string(e->index + 1) + " out of range");
      return u(e->index);
    case Op::add: return eval(e->args[0], x, u) + eval(e->args[1], x, u);
    case Op::sub: return eval(e->args[0], x, u) - eval(e->args[1], x, u);
    case Op::mul: return eval(e->args[0], x, u) * eval(e->args[1], x, u);
    case Op::div: return eval(e->args[0], x, u) / eval(e->args[1], x, u);
    case Op::neg: return -eval(e->args[0], x, u);
    case Op::pow: {
      const double b = eval(e->args[0], x, u);
      if (e->value == 2.0) return b * b;
      if (e->value == 3.0) return b * b * b;
      return std::pow(b, e->value);
    }
    case Op::sin: return std::sin(eval(e->args[0], x, u));
    case Op::cos: return std::cos(eval(e->args[0], x, u));
    case Op::tanh: return std::tanh(eval(e->args[0], x, u));
  }
  return 0.0;
}

ExprPtr diff(const ExprPtr& e, Op kind, int index) {
  switch (e->op) {
    case Op::constant: return constant(0.0);
    case Op::state:
    case Op::input: return constant(e->op == kind && e->index == index ? 1.0 : 0.0);
    case Op::add: return add(diff(e->args[0], kind, index), diff(e->args[1], kind, index));
    case Op::sub: return sub(diff(e->args[0], kind, index), diff(e->args[1], kind, index));
    case Op::mul: {
      const auto& a = e->args[0];
      const auto& b = e->args[1];
      return add(mul(diff(a, kind, index), b), mul(a, diff(b, kind, index)));
    }
    case Op::div: {
      const auto& a = e->args[0];
      const auto& b = e->args[1];
      return div(sub(mul(diff(a, kind, index), b), mul(a, diff(b, kind, index))), pow(b, 2.0));
    }
    case Op::neg: return neg(diff(e->args[0], kind, index));
    case Op::pow: {
      const auto& a = e->args[0];
      return mul(mul(constant(e->value), pow(a, e->value - 1.0)), diff(a, kind, index));
    }
    case Op::sin: return mul(call(Op::cos, e->args[0]), diff(e->args[0], kind, index));
    case Op::cos: return neg(mul(call(Op::sin, e->args[0]), diff(e->args[0], kind, index)));
    case Op::tanh: {
      // d tanh(a) = (1 - tanh(a)^2) da
      return mul(sub(constant(1.0), pow(e, 2.0)), diff(e->args[0], kind, index));
    }
  }
  return constant(0.0);
}

Vector VectorExpr::eval(const Vector& x, const Vector& u) const {
  Vector out(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) out(static_cast<Eigen::Index>(i)) = expr::eval(items[i], x, u);
  return out;
}

std::vector<std::vector<ExprPtr>> VectorExpr::jacobian_exprs(Op kind, int dim) const {
  std::vector<std::vector<ExprPtr>> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    for (int j = 0; j < dim; ++j) out[i].push_back(diff(items[i], kind, j));
  return out;
}

Matrix VectorExpr::jacobian_x(const Vector& x, const Vector& u, int n) const {
  Matrix j(static_cast<Eigen::Index>(items.size()), n);
  for (std::size_t i = 0; i < items.size(); ++i)
    for (int k = 0; k < n; ++k) j(static_cast<Eigen::Index>(i), k) = expr::eval(diff(items[i], Op::state, k), x, u);
  return j;
}

}  // namespace koopgram::expr
