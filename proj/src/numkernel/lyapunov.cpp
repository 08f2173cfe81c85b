#include "koopgram/errors.hpp"
#include "koopgram/numkernel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace koopgram::numkernel {
namespace {

struct Block {
  Eigen::Index start;
  Eigen::Index size;
};

// 1x1 and 2x2 diagonal blocks of a real quasi-triangular Schur form.
std::vector<Block> schur_blocks(const Matrix& s) {
  std::vector<Block> blocks;
  const Eigen::Index n = s.rows();
  for (Eigen::Index i = 0; i < n;) {
    if (i + 1 < n && s(i + 1, i) != 0.0) {
      blocks.push_back({i, 2});
      i += 2;
    } else {
      blocks.push_back({i, 1});
      i += 1;
    }
  }
  return blocks;
}

void check_schur_spectrum(const Matrix& s, const std::vector<Block>& blocks) {
  for (const auto& b : blocks) {
    double re, im = 0.0;
    if (b.size == 1) {
      re = s(b.start, b.start);
    } else {
      const double p = s(b.start, b.start), q = s(b.start, b.start + 1);
      const double r = s(b.start + 1, b.start), t = s(b.start + 1, b.start + 1);
      re = 0.5 * (p + t);
      const double disc = 0.25 * (p - t) * (p - t) + q * r;
      if (disc >= 0.0) {
        re += std::sqrt(disc);
      } else {
        im = std::sqrt(-disc);
      }
    }
    if (re >= 0.0) {
      std::ostringstream os;
      os.precision(6);
      os << "solve_lyapunov: matrix is not Hurwitz, eigenvalue " << re << " + " << im << "i";
      throw SpectrumError(os.str(), re, im);
    }
  }
}

// Solves S1 Y + Y S2^T = R for blocks of size at most 2 via the Kronecker form.
Matrix small_sylvester(const Matrix& s1, const Matrix& s2, const Matrix& rhs) {
  const Eigen::Index a = s1.rows(), b = s2.rows();
  // Column-major vec: vec(S1 Y) = (I kron S1) vec Y, vec(Y S2^T) = (S2 kron I) vec Y.
  Matrix k = Matrix::Zero(a * b, a * b);
  for (Eigen::Index j = 0; j < b; ++j) k.block(j * a, j * a, a, a) += s1;
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index l = 0; l < b; ++l)
      k.block(j * a, l * a, a, a).diagonal().array() += s2(j, l);
  Vector r = Eigen::Map<const Vector>(rhs.data(), a * b);
  Vector y = k.fullPivLu().solve(r);
  return Eigen::Map<Matrix>(y.data(), a, b);
}

}  // namespace

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  require_finite(a, "solve_lyapunov.a");
  require_finite(q, "solve_lyapunov.q");
  if (a.rows() != a.cols() || q.rows() != a.rows() || q.cols() != a.cols())
    throw std::invalid_argument("solve_lyapunov: a and q must be square of equal size");
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);

  Eigen::RealSchur<Matrix> schur(a);
  const Matrix& s = schur.matrixT();
  const Matrix& u = schur.matrixU();
  const auto blocks = schur_blocks(s);
  check_schur_spectrum(s, blocks);

  const Matrix c = u.transpose() * q * u;
  Matrix y = Matrix::Zero(n, n);
  const auto nb = static_cast<int>(blocks.size());

  // S Y + Y S^T + C = 0; sweep blocks from the bottom-right corner.
  for (int k = nb - 1; k >= 0; --k) {
    const auto [k0, kn] = blocks[k];
    for (int i = nb - 1; i >= 0; --i) {
      const auto [i0, in] = blocks[i];
      Matrix rhs = -c.block(i0, k0, in, kn);
      const Eigen::Index after_i = i0 + in, after_k = k0 + kn;
      if (after_i < n)
        rhs.noalias() -= s.block(i0, after_i, in, n - after_i) * y.block(after_i, k0, n - after_i, kn);
      if (after_k < n)
        rhs.noalias() -= y.block(i0, after_k, in, n - after_k) * s.block(k0, after_k, kn, n - after_k).transpose();
      y.block(i0, k0, in, kn) =
          small_sylvester(s.block(i0, i0, in, in), s.block(k0, k0, kn, kn), rhs);
    }
  }
  Matrix x = u * y * u.transpose();
  return 0.5 * (x + x.transpose());
}

}  // namespace koopgram::numkernel
