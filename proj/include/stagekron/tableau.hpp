#pragma once

// RadauIIA Butcher tableaux of arbitrary stage count (s <= 10) and the
// lower-triangular/strict-upper split A^{-1} = L (I + Uhat) that defines the
// stage-block preconditioner. Nodes are the roots of P_s(2x-1) - P_{s-1}(2x-1)
// (Legendre P), found via a companion matrix and polished with Newton steps;
// the tableau rows come from one collocation (moment) solve per row.

#include "stagekron/dense.hpp"

#include <cmath>
#include <string>

namespace stagekron {

// Runge-Kutta coefficients (A, b, c). RadauIIA tableaux are stiffly accurate:
// b equals the last row of A and c_s = 1.
struct ButcherTable {
  int s = 0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::string name;  // "radau_iia" for generated tableaux; user tableaux free-form
};

// Factors of A^{-1} = L (I + Uhat): L lower triangular carrying the diagonal,
// Uhat strictly upper triangular. Structurally zero entries are exact zeros.
struct IrkFactorization {
  Eigen::MatrixXd Ainv;
  Eigen::MatrixXd L;
  Eigen::MatrixXd Uhat;
  double uhat_norm2 = 0.0;
};

// Residuals |sum_i b_i c_i^{k-1} - 1/k| for k = 1..kmax (quadrature order conditions).
inline std::vector<double> verify_order(const ButcherTable& tab, int kmax) {
  detail::require(kmax >= 1, "verify_order: kmax must be >= 1");
  std::vector<double> res(kmax);
  for (int k = 1; k <= kmax; ++k) {
    double acc = 0.0;
    for (int i = 0; i < tab.s; ++i) acc += tab.b(i) * std::pow(tab.c(i), k - 1);
    res[k - 1] = std::abs(acc - 1.0 / k);
  }
  return res;
}

namespace detail {

// Ascending monomial coefficients of the degree-s node polynomial
// P_s(2x-1) - P_{s-1}(2x-1), built from the Legendre three-term recurrence
// and the affine substitution x -> 2x-1.
inline std::vector<double> radau_node_poly(int s) {
  // Legendre P_k in the monomial basis on [-1, 1].
  std::vector<std::vector<double>> P(s + 1);
  P[0] = {1.0};
  if (s >= 1) P[1] = {0.0, 1.0};
  for (int k = 1; k < s; ++k) {
    // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
    std::vector<double> xPk = poly_mult({0.0, 1.0}, P[k]);
    std::vector<double> next(k + 2, 0.0);
    for (std::size_t i = 0; i < xPk.size(); ++i) next[i] += (2.0 * k + 1.0) * xPk[i];
    for (std::size_t i = 0; i < P[k - 1].size(); ++i) next[i] -= k * P[k - 1][i];
    for (double& v : next) v /= (k + 1.0);
    P[k + 1] = next;
  }
  // Compose with x -> 2x-1 and subtract: q(x) = P_s(2x-1) - P_{s-1}(2x-1).
  auto shift = [](const std::vector<double>& p) {
    std::vector<double> acc{0.0};
    std::vector<double> pw{1.0};  // (2x-1)^k
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (acc.size() < pw.size()) acc.resize(pw.size(), 0.0);
      for (std::size_t i = 0; i < pw.size(); ++i) acc[i] += p[k] * pw[i];
      pw = poly_mult(pw, {-1.0, 2.0});
    }
    return acc;
  };
  std::vector<double> q = shift(P[s]);
  std::vector<double> qm = shift(P[s - 1]);
  if (q.size() < qm.size()) q.resize(qm.size(), 0.0);
  for (std::size_t i = 0; i < qm.size(); ++i) q[i] -= qm[i];
  q.resize(s + 1);  // degree exactly s
  return q;
}

// Solve the moment system sum_j a_j c_j^k = g_k, k = 0..m-1, for the weights a_j.
// Uses the Lagrange-basis inverse (a_j = sum_k ell_{j,k} g_k with ell_j the j-th
// Lagrange cardinal polynomial) plus one step of iterative refinement; accurate to
// ~1e-13 for the Radau node sets up to s = 10.
inline Eigen::VectorXd moment_solve(const Eigen::VectorXd& c, const Eigen::VectorXd& g) {
  const int m = static_cast<int>(c.size());
  Eigen::MatrixXd Lag(m, m);  // row j = monomial coefficients of ell_j
  for (int j = 0; j < m; ++j) {
    std::vector<double> num{1.0};
    double den = 1.0;
    for (int r = 0; r < m; ++r) {
      if (r == j) continue;
      num = poly_mult(num, {-c(r), 1.0});
      den *= c(j) - c(r);
    }
    for (int k = 0; k < m; ++k) Lag(j, k) = num[k] / den;
  }
  Eigen::VectorXd a = Lag * g;
  // One refinement pass against the moment matrix V(k, j) = c_j^k.
  Eigen::MatrixXd V(m, m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j) V(k, j) = std::pow(c(j), k);
  a += Lag * (g - V * a);
  return a;
}

// Evaluate q(x) = P_s(2x-1) - P_{s-1}(2x-1) and q'(x) via the Legendre
// three-term recurrence. The monomial form of q cancels catastrophically near
// x = 1 for large s (coefficients grow like 4^s while q(1) = 0), so the Newton
// polish must use this stable evaluation instead of polyval.
inline void radau_node_eval(int s, double x, double& qx, double& dqx) {
  const double t = 2.0 * x - 1.0;
  double pkm1 = 1.0, pk = t;    // P_0(t), P_1(t)
  double dkm1 = 0.0, dk = 1.0;  // P_0'(t), P_1'(t)
  for (int k = 1; k < s; ++k) {
    const double pn = ((2.0 * k + 1.0) * t * pk - k * pkm1) / (k + 1.0);
    const double dn = ((2.0 * k + 1.0) * (pk + t * dk) - k * dkm1) / (k + 1.0);
    pkm1 = pk;
    pk = pn;
    dkm1 = dk;
    dk = dn;
  }
  qx = pk - pkm1;
  dqx = 2.0 * (dk - dkm1);  // chain rule for t = 2x - 1
}

}  // namespace detail

// RadauIIA tableau with s stages: right-Radau collocation nodes, classical order
// 2s-1, L-stable, stiffly accurate.
inline ButcherTable radau_iia(int s) {
  detail::require(s >= 1 && s <= 10, "radau_iia: stage count must be in [1, 10]");

  ButcherTable tab;
  tab.s = s;
  tab.name = "radau_iia";

  if (s == 1) {  // backward Euler; nothing to solve
    tab.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
    tab.b = Eigen::VectorXd::Constant(1, 1.0);
    tab.c = Eigen::VectorXd::Constant(1, 1.0);
    return tab;
  }

  const std::vector<double> q = detail::radau_node_poly(s);

  // Companion roots of the monic normalization seed 3 Newton polish steps that
  // use the stable recurrence evaluation (restores the ~1e-16 node accuracy the
  // order conditions at s = 10 need; the monomial coefficients alone lose ~5
  // digits at the right endpoint for s >= 9).
  std::vector<double> monic(q);
  for (double& v : monic) v /= q[s];
  ComplexSpectrum roots = polyroots_companion(monic);

  std::vector<double> nodes;
  for (const Complex& r : roots.values) {
    if (std::abs(r.imag()) > 1e-8)
      throw std::runtime_error("radau_iia: node solve produced a complex root");
    double x = r.real();
    double fx = 0.0, dfx = 0.0;
    for (int it = 0; it < 3; ++it) {
      detail::radau_node_eval(s, x, fx, dfx);
      if (dfx == 0.0) break;
      x -= fx / dfx;
    }
    detail::radau_node_eval(s, x, fx, dfx);
    if (std::abs(fx) > 1e-13)  // recurrence values are O(1) on [0, 1]
      throw std::runtime_error("radau_iia: node solve failed to converge");
    nodes.push_back(x);
  }
  std::sort(nodes.begin(), nodes.end());

  detail::require(nodes.front() > 0.0, "radau_iia: node outside (0, 1]");
  if (std::abs(nodes.back() - 1.0) > 1e-12)
    throw std::runtime_error("radau_iia: last node is not 1");
  nodes.back() = 1.0;  // snap the right-Radau endpoint exactly

  tab.c = Eigen::Map<Eigen::VectorXd>(nodes.data(), s);

  // Row i of A from the collocation conditions sum_j a_ij c_j^{k-1} = c_i^k / k,
  // k = 1..s: a moment solve with g_k = c_i^{k+1} / (k+1) in 0-based powers.
  tab.A.resize(s, s);
  for (int i = 0; i < s; ++i) {
    Eigen::VectorXd g(s);
    for (int k = 0; k < s; ++k) g(k) = std::pow(tab.c(i), k + 1) / (k + 1.0);
    tab.A.row(i) = detail::moment_solve(tab.c, g).transpose();
  }
  tab.b = tab.A.row(s - 1).transpose();

  // Construction-time invariant checks: nodes strictly increasing and the
  // quadrature order conditions up to 2s-1.
  for (int i = 1; i < s; ++i)
    if (!(tab.c(i) > tab.c(i - 1)))
      throw std::runtime_error("radau_iia: nodes not strictly increasing");
  const std::vector<double> res = verify_order(tab, 2 * s - 1);
  for (double r : res)
    if (r > 1e-12)
      throw std::runtime_error("radau_iia: order-condition residual exceeds 1e-12");
  return tab;
}

// Crout elimination of A^{-1} without pivoting: A^{-1} = L (I + Uhat) with the
// diagonal absorbed into L. Pivoting is structurally forbidden (it would change
// the preconditioner), so a vanishing pivot is an error, not a fallback.
inline IrkFactorization factorize(const ButcherTable& tab) {
  const int s = tab.s;
  detail::require(s >= 1 && tab.A.rows() == s && tab.A.cols() == s, "factorize: invalid tableau");

  Eigen::FullPivLU<Eigen::MatrixXd> lu(tab.A);
  if (!lu.isInvertible()) throw std::runtime_error("factorize: singular Butcher matrix A");

  IrkFactorization f;
  f.Ainv = lu.inverse();
  f.L = Eigen::MatrixXd::Zero(s, s);
  f.Uhat = Eigen::MatrixXd::Zero(s, s);

  const double scale = f.Ainv.cwiseAbs().maxCoeff();
  Eigen::MatrixXd U = Eigen::MatrixXd::Identity(s, s);  // unit upper factor
  for (int k = 0; k < s; ++k) {
    for (int i = k; i < s; ++i) {
      double acc = f.Ainv(i, k);
      for (int m = 0; m < k; ++m) acc -= f.L(i, m) * U(m, k);
      f.L(i, k) = acc;
    }
    if (std::abs(f.L(k, k)) <= 1e-14 * scale)
      throw std::runtime_error("factorize: zero pivot at index " + std::to_string(k + 1) +
                               " (unpivoted elimination required)");
    for (int j = k + 1; j < s; ++j) {
      double acc = f.Ainv(k, j);
      for (int m = 0; m < k; ++m) acc -= f.L(k, m) * U(m, j);
      U(k, j) = acc / f.L(k, k);
      f.Uhat(k, j) = U(k, j);
    }
  }

  if (tab.name == "radau_iia") {
    // Empirical structural fact for RadauIIA up to s = 10; the SPD stage solves
    // in the preconditioner rely on it.
    for (int k = 0; k < s; ++k)
      if (f.L(k, k) <= 0.0)
        throw std::runtime_error("factorize: nonpositive diagonal in L for a RadauIIA tableau");
  }

  f.uhat_norm2 = spectral_norm(f.Uhat);
  return f;
}

}  // namespace stagekron
