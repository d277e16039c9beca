#pragma once

// Dense assembly of the stage-coupled operator and its preconditioner, used as
// brute-force ground truth for the per-mode reductions:
//   A_full = A^{-1} (x) M + tau I (x) K        (stage-major Kronecker ordering)
//   P_full = Atilde (x) M + tau I (x) K        (Atilde defaults to L)
// plus the perfect-shuffle permutation between node-major and stage-major
// layouts and the W1/W2 split P^{-1} A = I + W1^{-1} W2.

#include "stagekron/mode_spectrum.hpp"

#include <optional>
#include <utility>

namespace stagekron {

// Kronecker product, dense (desk scale only).
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Stage-major dense system/preconditioner pair. P is block lower triangular
// when Atilde = L.
struct FullSystem {
  int n = 0, s = 0;
  Eigen::MatrixXd A;       // A^{-1} (x) M + tau I (x) K
  Eigen::MatrixXd P;       // Atilde (x) M + tau I (x) K
  Eigen::MatrixXd Atilde;
  std::string ordering{"stage-major"};
};

inline FullSystem assemble_full(const ButcherTable& tab, const IrkFactorization& f,
                                const SpatialPencil& p,
                                const std::optional<Eigen::MatrixXd>& Atilde = std::nullopt) {
  detail::validate_pencil(p);
  const int n = static_cast<int>(p.M.rows());
  const int s = tab.s;
  detail::require(static_cast<long>(n) * s <= 6000, "assemble_full: n*s exceeds the 6000 guard");
  detail::require(f.Ainv.rows() == s, "assemble_full: tableau/factorization size mismatch");

  FullSystem fs;
  fs.n = n;
  fs.s = s;
  fs.Atilde = Atilde.value_or(f.L);
  detail::require(fs.Atilde.rows() == s && fs.Atilde.cols() == s,
                  "assemble_full: Atilde must be s-by-s");
  const Eigen::MatrixXd IK = kron(Eigen::MatrixXd::Identity(s, s), p.tau * p.K);
  fs.A = kron(f.Ainv, p.M) + IK;
  fs.P = kron(fs.Atilde, p.M) + IK;
  return fs;
}

// Brute-force eigendecomposition of P^{-1} A; S holds the 2-normalized right
// eigenvectors column-aligned with the spectrum.
struct OracleSpectrum {
  ComplexSpectrum spectrum;
  Eigen::MatrixXcd S;
};

inline OracleSpectrum oracle_spectrum(const FullSystem& fs) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fs.P);
  if (!lu.isInvertible()) throw std::runtime_error("oracle_spectrum: singular preconditioner");
  Eigen::MatrixXd T = lu.solve(fs.A);
  OracleSpectrum out;
  out.spectrum = eig_dense(T, &out.S);
  for (Eigen::Index j = 0; j < out.S.cols(); ++j) {
    const double nn = out.S.col(j).norm();
    if (nn > 0.0) out.S.col(j) /= nn;
  }
  return out;
}

// Perfect shuffle between node-major and stage-major block layouts:
// sigma maps the node-major index of (node k, stage i) to the stage-major
// index i*n + k. The associated permutation matrix Pi (with Pi[sigma(q), q] = 1)
// turns a stage-major operator with diagonal n-by-n blocks into a node-major
// block-diagonal one with n blocks of size s under Pi^T X Pi.
struct ShufflePermutation {
  int n = 0, s = 0;
  std::vector<int> sigma;  // node-major index -> stage-major index

  // y = Pi x: scatters a node-major vector into stage-major layout.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(x.size());
    for (Eigen::Index q = 0; q < x.size(); ++q) y(sigma[q]) = x(q);
    return y;
  }

  // x = Pi^T y: gathers back to node-major layout.
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& y) const {
    Eigen::VectorXd x(y.size());
    for (Eigen::Index q = 0; q < y.size(); ++q) x(q) = y(sigma[q]);
    return x;
  }

  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd Pi = Eigen::MatrixXd::Zero(n * s, n * s);
    for (int q = 0; q < n * s; ++q) Pi(sigma[q], q) = 1.0;
    return Pi;
  }
};

inline ShufflePermutation shuffle(int n, int s) {
  detail::require(n >= 1 && s >= 1, "shuffle: n, s must be >= 1");
  ShufflePermutation sp;
  sp.n = n;
  sp.s = s;
  sp.sigma.resize(n * s);
  for (int q = 0; q < n * s; ++q) sp.sigma[q] = (q % s) * n + (q / s);
  return sp;
}

// W1 = I + tau L^{-1} (x) M^{-1} K and W2 = Uhat (x) I, the split with
// P^{-1} A = I + W1^{-1} W2.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> w1w2(const ButcherTable& tab,
                                                        const IrkFactorization& f,
                                                        const SpatialPencil& p) {
  detail::validate_pencil(p);
  const int n = static_cast<int>(p.M.rows());
  const int s = tab.s;
  detail::require(static_cast<long>(n) * s <= 6000, "w1w2: n*s exceeds the 6000 guard");
  Eigen::MatrixXd Linv =
      f.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(s, s));
  Eigen::LLT<Eigen::MatrixXd> llt(p.M);
  if (llt.info() != Eigen::Success) throw std::runtime_error("w1w2: mass matrix not SPD");
  Eigen::MatrixXd MinvK = llt.solve(p.K);
  Eigen::MatrixXd W1 =
      Eigen::MatrixXd::Identity(n * s, n * s) + kron(p.tau * Linv, MinvK);
  Eigen::MatrixXd W2 = kron(f.Uhat, Eigen::MatrixXd::Identity(n, n));
  return {W1, W2};
}

}  // namespace stagekron
