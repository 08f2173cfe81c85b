#include "koopgram/errors.hpp"
#include "koopgram/koopman.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace koopgram::koopman {
namespace {

void exponents_of_degree(int n, int d, int pos, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (pos == n - 1) {
    cur[pos] = d;
    out.push_back(cur);
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[pos] = e;
    exponents_of_degree(n, d - e, pos + 1, cur, out);
  }
}

std::string monomial_label(const std::vector<int>& ex) {
  std::string s;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (!ex[i]) continue;
    if (!s.empty()) s += "*";
    s += "x" + std::to_string(i + 1);
    if (ex[i] > 1) s += "^" + std::to_string(ex[i]);
  }
  return s;
}

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

Dictionary Dictionary::identity(int n) {
  if (n < 1) throw std::invalid_argument("dictionary: n must be positive");
  Dictionary d = monomials(n, 1);
  d.kind_ = DictionaryKind::identity;
  return d;
}

Dictionary Dictionary::monomials(int n, int degree) {
  if (n < 1) throw std::invalid_argument("dictionary: n must be positive");
  if (degree < 1) throw std::invalid_argument("dictionary: monomial degree must be at least 1");
  Dictionary d;
  d.kind_ = DictionaryKind::monomials;
  d.n_ = n;
  d.degree_ = degree;
  std::vector<int> cur(n, 0);
  for (int k = 1; k <= degree; ++k) exponents_of_degree(n, k, 0, cur, d.exponents_);
  for (const auto& ex : d.exponents_) d.labels_.push_back(monomial_label(ex));
  return d;
}

Dictionary Dictionary::user(int n, const std::vector<std::string>& observables) {
  std::vector<expr::ExprPtr> items;
  for (const auto& s : observables) items.push_back(expr::parse(s));
  return user(n, std::move(items));
}

Dictionary Dictionary::user(int n, std::vector<expr::ExprPtr> observables) {
  if (n < 1) throw std::invalid_argument("dictionary: n must be positive");
  if (static_cast<int>(observables.size()) < n)
    throw ValidationError("dictionary: a state-inclusive dictionary needs at least n observables");
  Dictionary d;
  d.kind_ = DictionaryKind::user_supplied;
  d.n_ = n;
  d.degree_ = 0;
  for (const auto& e : observables) {
    if (expr::input_arity(e) > 0) throw ValidationError("dictionary: observables may not depend on inputs");
    if (expr::state_arity(e) > n) throw ValidationError("dictionary: observable references a state beyond x" + std::to_string(n));
    d.labels_.push_back(expr::to_string(e));
  }
  d.items_ = std::move(observables);
  for (const auto& e : d.items_) {
    std::vector<expr::ExprPtr> row;
    for (int j = 0; j < n; ++j) row.push_back(expr::diff(e, expr::Op::state, j));
    d.jac_items_.push_back(std::move(row));
  }

  const Vector zero = Vector::Zero(n);
  const Vector phi0 = d.eval(zero);
  for (int i = 0; i < d.q(); ++i)
    if (!(std::abs(phi0(i)) <= 1e-12))
      throw ValidationError("dictionary: observable " + d.labels_[i] + " does not vanish at the origin");

  std::mt19937_64 rng(0xd1c7);
  std::uniform_real_distribution<double> box(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(n);
    for (int j = 0; j < n; ++j) x(j) = box(rng);
    const Vector phi = d.eval(x);
    for (int i = 0; i < n; ++i)
      if (phi(i) != x(i))
        throw ValidationError("dictionary: observable " + std::to_string(i + 1) + " must be the coordinate x" +
                              std::to_string(i + 1) + " (state inclusivity)");
    const Matrix j = d.jacobian(x);
    const double h = 1e-6 * (1.0 + x.norm());
    for (int k = 0; k < n; ++k) {
      Vector xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      const Vector fd = (d.eval(xp) - d.eval(xm)) / (2.0 * h);
      for (int i = 0; i < d.q(); ++i) {
        if (!(std::abs(fd(i) - j(i, k)) <= 1e-5 * (1.0 + std::abs(j(i, k))))) {
          std::ostringstream os;
          os << "dictionary: Jacobian of " << d.labels_[i] << " disagrees with finite differences in x" << k + 1;
          throw ValidationError(os.str());
        }
      }
    }
  }
  return d;
}

Vector Dictionary::eval(const Vector& x) const {
  if (x.size() != n_) throw std::invalid_argument("dictionary: state has wrong dimension");
  Vector out(q());
  if (kind_ == DictionaryKind::user_supplied) {
    const Vector none;
    for (int i = 0; i < q(); ++i) out(i) = expr::eval(items_[i], x, none);
    return out;
  }
  for (int i = 0; i < q(); ++i) {
    double v = 1.0;
    for (int j = 0; j < n_; ++j) v *= ipow(x(j), exponents_[i][j]);
    out(i) = v;
  }
  return out;
}

Matrix Dictionary::jacobian(const Vector& x) const {
  if (x.size() != n_) throw std::invalid_argument("dictionary: state has wrong dimension");
  Matrix jac = Matrix::Zero(q(), n_);
  if (kind_ == DictionaryKind::user_supplied) {
    const Vector none;
    for (int i = 0; i < q(); ++i)
      for (int j = 0; j < n_; ++j) jac(i, j) = expr::eval(jac_items_[i][j], x, none);
    return jac;
  }
  for (int i = 0; i < q(); ++i) {
    const auto& ex = exponents_[i];
    for (int k = 0; k < n_; ++k) {
      if (!ex[k]) continue;
      double v = ex[k];
      for (int j = 0; j < n_; ++j) v *= ipow(x(j), j == k ? ex[j] - 1 : ex[j]);
      jac(i, k) = v;
    }
  }
  return jac;
}

Vector Dictionary::lie(const Vector& x, const Vector& dx) const { return jacobian(x) * dx; }

Dictionary build_dictionary(DictionaryKind kind, int n, int degree, const std::vector<std::string>& observables) {
  switch (kind) {
    case DictionaryKind::identity: return Dictionary::identity(n);
    case DictionaryKind::monomials: return Dictionary::monomials(n, degree);
    case DictionaryKind::user_supplied: return Dictionary::user(n, observables);
  }
  throw std::invalid_argument("dictionary: unknown kind");
}

}  // namespace koopgram::koopman
