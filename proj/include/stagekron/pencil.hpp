#pragma once

// Generalized eigendecomposition of the SPD pencil tau*K - mu*M: the mode values
// mu_k and an M-orthonormal eigenbasis Q (Q^T M Q = I, tau*K*Q = M*Q*diag(mu)).
// Reduction: Cholesky M = R^T R, symmetric eigensolve of R^{-T} (tau K) R^{-1},
// then Q = R^{-1} V.

#include "stagekron/dense.hpp"

namespace stagekron {

// Mass/stiffness pair with timestep; both matrices symmetric, M positive definite.
struct SpatialPencil {
  Eigen::MatrixXd M;
  Eigen::MatrixXd K;
  double tau = 0.0;
};

// mu ascending and strictly positive; columns of Q are the M-orthonormal
// generalized eigenvectors.
struct PencilEigen {
  Eigen::VectorXd mu;
  Eigen::MatrixXd Q;
};

namespace detail {

inline void validate_pencil(const SpatialPencil& p) {
  const Eigen::Index n = p.M.rows();
  require(n >= 1 && p.M.cols() == n && p.K.rows() == n && p.K.cols() == n,
          "pencil: M, K must be square with matching dimensions");
  require(p.tau > 0.0, "pencil: tau must be positive");
  require_finite(p.M, "pencil M");
  require_finite(p.K, "pencil K");
  const double ms = std::max(1.0, p.M.cwiseAbs().maxCoeff());
  const double ks = std::max(1.0, p.K.cwiseAbs().maxCoeff());
  require((p.M - p.M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * ms,
          "pencil: M not symmetric to 1e-12");
  require((p.K - p.K.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * ks,
          "pencil: K not symmetric to 1e-12");
}

}  // namespace detail

inline PencilEigen eig_pencil(const SpatialPencil& p) {
  detail::validate_pencil(p);
  const Eigen::Index n = p.M.rows();

  Eigen::LLT<Eigen::MatrixXd> llt(p.M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("eig_pencil: mass matrix is not positive definite (Cholesky failed)");

  // B = R^{-T} (tau K) R^{-1} with M = R^T R, R = L^T from Eigen's lower Cholesky.
  Eigen::MatrixXd tmp = llt.matrixL().solve(p.tau * p.K);
  Eigen::MatrixXd B = llt.matrixL().solve(tmp.transpose()).transpose();
  B = 0.5 * (B + B.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_pencil: symmetric eigensolver failed to converge");

  PencilEigen pe;
  pe.mu = es.eigenvalues();
  if (pe.mu(0) <= 0.0)
    throw std::runtime_error("eig_pencil: pencil has a nonpositive eigenvalue (K not positive definite)");
  pe.Q = llt.matrixU().solve(es.eigenvectors());

  // Deterministic column signs: first entry of significant magnitude positive.
  for (Eigen::Index k = 0; k < n; ++k) {
    const double cap = pe.Q.col(k).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(pe.Q(i, k)) > 1e-10 * cap) {
        if (pe.Q(i, k) < 0.0) pe.Q.col(k) = -pe.Q.col(k);
        break;
      }
    }
  }
  return pe;
}

}  // namespace stagekron
