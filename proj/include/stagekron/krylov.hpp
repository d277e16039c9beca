#pragma once

// Matrix-free application of the stage-coupled operator and its block
// lower-triangular preconditioner, right-preconditioned GMRES (MGS Arnoldi +
// Givens, no restart), and the implicit Runge-Kutta time integrator built on
// them. Stage vectors are stage-major: v = [v_1; ...; v_s], blocks of length n.

#include "stagekron/model_problems.hpp"
#include "stagekron/tableau.hpp"

#include <functional>

namespace stagekron {

// Applies v -> (A^{-1} (x) M + tau I (x) K) v blockwise:
// (Av)_i = sum_j Ainv(i,j) M v_j + tau K v_i.
class StageSystemOperator {
 public:
  StageSystemOperator(Eigen::MatrixXd M, Eigen::MatrixXd K, double tau, Eigen::MatrixXd Ainv)
      : M_(std::move(M)), K_(std::move(K)), tau_(tau), Ainv_(std::move(Ainv)) {
    detail::require(M_.rows() == M_.cols() && K_.rows() == M_.rows() && K_.cols() == M_.rows(),
                    "StageSystemOperator: M, K must be square and matching");
    detail::require(Ainv_.rows() == Ainv_.cols() && Ainv_.rows() >= 1,
                    "StageSystemOperator: Ainv must be square");
    detail::require(tau_ > 0.0, "StageSystemOperator: tau must be positive");
  }

  Eigen::Index size() const { return M_.rows() * Ainv_.rows(); }
  Eigen::Index n() const { return M_.rows(); }
  Eigen::Index stages() const { return Ainv_.rows(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    detail::require(v.size() == size(), "StageSystemOperator: dimension mismatch");
    const Eigen::Index nn = n(), s = stages();
    Eigen::Map<const Eigen::MatrixXd> V(v.data(), nn, s);  // column i = stage i
    Eigen::MatrixXd out = M_ * V * Ainv_.transpose() + tau_ * (K_ * V);
    return Eigen::Map<Eigen::VectorXd>(out.data(), nn * s);
  }

 private:
  Eigen::MatrixXd M_, K_;
  double tau_;
  Eigen::MatrixXd Ainv_;
};

// Block forward substitution with the preconditioner L (x) M + tau I (x) K:
// stage i solves (l_ii M + tau K) z_i = r_i - sum_{j<i} l_ij M z_j. Each stage
// block is SPD (requires diag(L) > 0); tridiagonal M, K get a banded LDL^T
// factorization, everything else a dense Cholesky.
class PrecondOperator {
 public:
  PrecondOperator(Eigen::MatrixXd M, Eigen::MatrixXd K, double tau, Eigen::MatrixXd L)
      : M_(std::move(M)), K_(std::move(K)), tau_(tau), L_(std::move(L)) {
    const Eigen::Index nn = M_.rows(), s = L_.rows();
    detail::require(M_.cols() == nn && K_.rows() == nn && K_.cols() == nn,
                    "PrecondOperator: M, K must be square and matching");
    detail::require(L_.cols() == s && s >= 1, "PrecondOperator: L must be square");
    detail::require(tau_ > 0.0, "PrecondOperator: tau must be positive");
    for (Eigen::Index i = 0; i < s; ++i)
      detail::require(L_(i, i) > 0.0, "PrecondOperator: diag(L) must be positive (SPD stage blocks)");

    tridiagonal_ = is_tridiagonal(M_) && is_tridiagonal(K_);
    for (Eigen::Index i = 0; i < s; ++i) {
      Eigen::MatrixXd B = L_(i, i) * M_ + tau_ * K_;
      if (tridiagonal_) {
        band_.push_back(factor_tridiag(B));
      } else {
        Eigen::LLT<Eigen::MatrixXd> llt(B);
        if (llt.info() != Eigen::Success)
          throw std::runtime_error("PrecondOperator: stage block " + std::to_string(i + 1) +
                                   " is not positive definite");
        dense_.push_back(std::move(llt));
      }
    }
  }

  Eigen::Index size() const { return M_.rows() * L_.rows(); }

  // z = P^{-1} r.
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& r) const {
    detail::require(r.size() == size(), "PrecondOperator: dimension mismatch");
    const Eigen::Index nn = M_.rows(), s = L_.rows();
    Eigen::MatrixXd Z(nn, s);
    for (Eigen::Index i = 0; i < s; ++i) {
      Eigen::VectorXd rhs = r.segment(i * nn, nn);
      for (Eigen::Index j = 0; j < i; ++j) rhs.noalias() -= L_(i, j) * (M_ * Z.col(j));
      Z.col(i) = tridiagonal_ ? solve_tridiag(band_[i], rhs) : dense_[i].solve(rhs);
    }
    return Eigen::Map<Eigen::VectorXd>(Z.data(), nn * s);
  }

  // y = P v (for inverse-contract tests).
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    detail::require(v.size() == size(), "PrecondOperator: dimension mismatch");
    const Eigen::Index nn = M_.rows(), s = L_.rows();
    Eigen::Map<const Eigen::MatrixXd> V(v.data(), nn, s);
    Eigen::MatrixXd out = M_ * V * L_.transpose() + tau_ * (K_ * V);
    return Eigen::Map<Eigen::VectorXd>(out.data(), nn * s);
  }

 private:
  struct TridiagLDLT {
    Eigen::VectorXd d;  // pivots
    Eigen::VectorXd e;  // subdiagonal multipliers
  };

  static bool is_tridiagonal(const Eigen::MatrixXd& A) {
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j)
        if (std::abs(i - j) > 1 && A(i, j) != 0.0) return false;
    return true;
  }

  static TridiagLDLT factor_tridiag(const Eigen::MatrixXd& B) {
    const Eigen::Index nn = B.rows();
    TridiagLDLT f;
    f.d.resize(nn);
    f.e.resize(nn > 0 ? nn - 1 : 0);
    f.d(0) = B(0, 0);
    for (Eigen::Index i = 1; i < nn; ++i) {
      if (f.d(i - 1) <= 0.0)
        throw std::runtime_error("PrecondOperator: stage block is not positive definite");
      f.e(i - 1) = B(i, i - 1) / f.d(i - 1);
      f.d(i) = B(i, i) - f.e(i - 1) * B(i, i - 1);
    }
    if (f.d(nn - 1) <= 0.0)
      throw std::runtime_error("PrecondOperator: stage block is not positive definite");
    return f;
  }

  static Eigen::VectorXd solve_tridiag(const TridiagLDLT& f, const Eigen::VectorXd& rhs) {
    const Eigen::Index nn = rhs.size();
    Eigen::VectorXd z = rhs;
    for (Eigen::Index i = 1; i < nn; ++i) z(i) -= f.e(i - 1) * z(i - 1);  // L z = rhs
    for (Eigen::Index i = 0; i < nn; ++i) z(i) /= f.d(i);                // D
    for (Eigen::Index i = nn - 1; i-- > 0;) z(i) -= f.e(i) * z(i + 1);   // L^T
    return z;
  }

  Eigen::MatrixXd M_, K_;
  double tau_;
  Eigen::MatrixXd L_;
  bool tridiagonal_ = false;
  std::vector<TridiagLDLT> band_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> dense_;
};

using ApplyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct GmresResult {
  int iterations = 0;
  std::vector<double> history;  // relative residual norms, history[0] = 1
  bool converged = false;
  Eigen::VectorXd x;
  double true_residual = 0.0;  // ||b - A x|| / ||b|| recomputed at the end
};

// Right-preconditioned GMRES without restart: Arnoldi with twice-iterated
// modified Gram-Schmidt, Givens rotations for the least-squares recurrence.
// With right preconditioning the recurrence residuals are true residuals of
// A x = b, so the history is directly comparable to the spectral bound.
// applyPrec may be empty (identity preconditioner).
inline GmresResult gmres(const ApplyFn& applyOp, const ApplyFn& applyPrec,
                         const Eigen::VectorXd& b, double tol, int maxit) {
  detail::require(static_cast<bool>(applyOp), "gmres: operator is required");
  detail::require(tol > 0.0, "gmres: tol must be positive");
  detail::require(maxit >= 1, "gmres: maxit must be >= 1");
  const Eigen::Index N = b.size();
  maxit = static_cast<int>(std::min<Eigen::Index>(maxit, N));

  GmresResult res;
  res.x = Eigen::VectorXd::Zero(N);
  const double beta = b.norm();
  if (beta == 0.0) {
    res.converged = true;
    res.history = {0.0};
    return res;
  }
  res.history.push_back(1.0);

  std::vector<Eigen::VectorXd> V;
  V.push_back(b / beta);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(maxit + 1, maxit);
  Eigen::VectorXd cs = Eigen::VectorXd::Zero(maxit);
  Eigen::VectorXd sn = Eigen::VectorXd::Zero(maxit);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(maxit + 1);
  g(0) = beta;

  bool breakdown = false;
  for (int k = 0; k < maxit; ++k) {
    Eigen::VectorXd w = applyOp(applyPrec ? applyPrec(V[k]) : V[k]);
    const double wscale = w.norm();
    for (int pass = 0; pass < 2; ++pass)  // MGS, one reorthogonalization pass
      for (int j = 0; j <= k; ++j) {
        const double hjk = V[j].dot(w);
        H(j, k) += hjk;
        w.noalias() -= hjk * V[j];
      }
    const double hnext = w.norm();
    H(k + 1, k) = hnext;

    // Apply accumulated rotations to the new column, append a fresh one.
    for (int j = 0; j < k; ++j) {
      const double t = cs(j) * H(j, k) + sn(j) * H(j + 1, k);
      H(j + 1, k) = -sn(j) * H(j, k) + cs(j) * H(j + 1, k);
      H(j, k) = t;
    }
    const double denom = std::hypot(H(k, k), hnext);
    cs(k) = denom == 0.0 ? 1.0 : H(k, k) / denom;
    sn(k) = denom == 0.0 ? 0.0 : hnext / denom;
    H(k, k) = denom;
    g(k + 1) = -sn(k) * g(k);
    g(k) = cs(k) * g(k);

    res.history.push_back(std::abs(g(k + 1)) / beta);
    res.iterations = k + 1;
    if (hnext <= 1e-14 * wscale) {  // happy breakdown: Krylov space is invariant
      breakdown = true;
      break;
    }
    if (res.history.back() <= tol) break;
    V.push_back(w / hnext);
  }

  // Solve the triangular system for the Krylov coefficients and assemble x.
  const int m = res.iterations;
  if (m > 0) {
    Eigen::VectorXd y = H.topLeftCorner(m, m).triangularView<Eigen::Upper>().solve(g.head(m));
    Eigen::VectorXd z = Eigen::VectorXd::Zero(N);
    for (int j = 0; j < m; ++j) z.noalias() += y(j) * V[j];
    res.x = applyPrec ? applyPrec(z) : z;
  }
  res.converged = res.history.back() <= tol || breakdown;
  res.true_residual = (b - applyOp(res.x)).norm() / beta;
  return res;
}

// One implicit Runge-Kutta step for M u' = -K u + b(t): solve the stage system
// (A^{-1} (x) M + tau I (x) K) kvec = rhs with
// rhs_i = -(A^{-1} 1)_i K u_prev + sum_j Ainv(i,j) b(t_prev + c_j tau),
// then u_next = u_prev + tau sum_i b_i k_i.
struct IrkStepConfig {
  double gmres_tol = 1e-12;
  int gmres_maxit = 0;  // 0: use n*s
};

struct IrkStepResult {
  Eigen::VectorXd u;
  int gmres_iterations = 0;
};

namespace detail {

inline IrkStepResult irk_step_with(const StageSystemOperator& op, const PrecondOperator& pc,
                                   const Eigen::VectorXd& u_prev, double t_prev, double tau,
                                   const ButcherTable& tab, const IrkFactorization& f,
                                   const ModelProblem& problem, const IrkStepConfig& cfg) {
  const int n = problem.n, s = tab.s;
  require(u_prev.size() == n, "irk_step: state dimension mismatch");

  const Eigen::VectorXd w = f.Ainv * Eigen::VectorXd::Ones(s);
  const Eigen::VectorXd Ku = problem.K * u_prev;
  Eigen::MatrixXd F(n, s);
  for (int j = 0; j < s; ++j) F.col(j) = problem.forcing(t_prev + tab.c(j) * tau);
  Eigen::MatrixXd R = F * f.Ainv.transpose();
  for (int i = 0; i < s; ++i) R.col(i) -= w(i) * Ku;
  Eigen::Map<Eigen::VectorXd> rhs(R.data(), static_cast<Eigen::Index>(n) * s);

  const int maxit = cfg.gmres_maxit > 0 ? cfg.gmres_maxit : n * s;
  GmresResult gr = gmres([&op](const Eigen::VectorXd& v) { return op.apply(v); },
                         [&pc](const Eigen::VectorXd& v) { return pc.apply_inverse(v); },
                         rhs, cfg.gmres_tol, maxit);
  if (!gr.converged)
    throw std::runtime_error("irk_step: stage-system GMRES did not converge");

  Eigen::Map<const Eigen::MatrixXd> Kstages(gr.x.data(), n, s);
  IrkStepResult out;
  out.u = u_prev + tau * (Kstages * tab.b);
  out.gmres_iterations = gr.iterations;
  return out;
}

}  // namespace detail

inline IrkStepResult irk_step(const Eigen::VectorXd& u_prev, double t_prev, double tau,
                              const ButcherTable& tab, const IrkFactorization& f,
                              const ModelProblem& problem, const IrkStepConfig& cfg = {}) {
  detail::require(tau > 0.0, "irk_step: tau must be positive");
  StageSystemOperator op(problem.M, problem.K, tau, f.Ainv);
  PrecondOperator pc(problem.M, problem.K, tau, f.L);
  return detail::irk_step_with(op, pc, u_prev, t_prev, tau, tab, f, problem, cfg);
}

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // steps+1 entries, states[0] = u0
  std::vector<double> times;            // matching timepoints
  std::vector<int> gmres_iterations;    // one entry per step
};

inline Trajectory irk_integrate(const Eigen::VectorXd& u0, double T, int steps,
                                const ButcherTable& tab, const IrkFactorization& f,
                                const ModelProblem& problem, const IrkStepConfig& cfg = {}) {
  detail::require(steps >= 0, "irk_integrate: steps must be >= 0");
  detail::require(steps == 0 || T > 0.0, "irk_integrate: T must be positive");
  Trajectory tr;
  tr.states.push_back(u0);
  tr.times.push_back(0.0);
  if (steps == 0) return tr;

  const double tau = T / steps;
  StageSystemOperator op(problem.M, problem.K, tau, f.Ainv);
  PrecondOperator pc(problem.M, problem.K, tau, f.L);
  for (int m = 0; m < steps; ++m) {
    IrkStepResult sr = detail::irk_step_with(op, pc, tr.states.back(), tr.times.back(), tau,
                                             tab, f, problem, cfg);
    tr.states.push_back(std::move(sr.u));
    tr.times.push_back(tau * (m + 1));
    tr.gmres_iterations.push_back(sr.gmres_iterations);
  }
  return tr;
}

// Scalar stability function R(z) = 1 + z b^T (I - z A)^{-1} 1 (for the temporal
// order checks on u' = z u).
inline double stability_function(const ButcherTable& tab, double z) {
  const int s = tab.s;
  Eigen::MatrixXd MzA = Eigen::MatrixXd::Identity(s, s) - z * tab.A;
  Eigen::VectorXd w = MzA.partialPivLu().solve(Eigen::VectorXd::Ones(s));
  return 1.0 + z * tab.b.dot(w);
}

}  // namespace stagekron
