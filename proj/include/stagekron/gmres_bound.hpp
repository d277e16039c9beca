#pragma once

// The spectral GMRES bound kappa(S) * min_{phi(0)=1, deg<=ell} max_i |phi(lambda_i)|:
// kappa(S) from the matrix of lifted per-mode eigenvectors, and the discrete
// complex Chebyshev problem solved by Lawson-weighted iteratively reweighted
// least squares (classical p = 1 weight update, best-iterate tracking).

#include "stagekron/full_system.hpp"

namespace stagekron {

// Condition number of the eigenvector matrix S whose columns are the lifted,
// 2-normalized per-mode eigenvectors svec_j (x) q_k. Requires a SpectrumResult
// carrying stage eigenvectors (matrix method). Returns +inf when any mode has a
// repeated eigenvalue (defective candidates) or S is numerically singular.
inline double kappa_S(const SpectrumResult& spec, const PencilEigen& pe) {
  const int s = spec.stages;
  const int n = static_cast<int>(pe.mu.size());
  detail::require(static_cast<int>(spec.modes.size()) == n, "kappa_S: mode count mismatch");

  for (const ModeSpectrum& m : spec.modes) {
    detail::require(m.stage_vectors.rows() == s && m.stage_vectors.cols() == s,
                    "kappa_S: spectrum must carry stage eigenvectors (matrix method)");
    double cap = 0.0;
    for (const Complex& v : m.lambdas) cap = std::max(cap, std::abs(v));
    for (int i = 0; i < s; ++i)
      for (int j = i + 1; j < s; ++j)
        if (std::abs(m.lambdas[i] - m.lambdas[j]) <= 1e-12 * std::max(1.0, cap))
          return std::numeric_limits<double>::infinity();
  }

  Eigen::MatrixXcd S(static_cast<Eigen::Index>(n) * s, static_cast<Eigen::Index>(n) * s);
  Eigen::Index col = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < s; ++j) {
      Eigen::VectorXcd v = lift_eigenvector(spec.modes[k].stage_vectors.col(j), pe.Q.col(k));
      const double nn = v.norm();
      if (nn > 0.0) v /= nn;
      S.col(col++) = v;
    }
  return cond2(S);
}

struct LawsonConfig {
  int max_iters = 5000;             // worst-case budget; typical runs stagnate far earlier
  double weight_stagnation = 1e-13; // stop when the weight vector stops moving
};

struct MinmaxResult {
  double value = 0.0;
  std::vector<Complex> phi;  // ascending coefficients, phi[0] = 1
};

namespace detail {

inline std::vector<Complex> dedup_points(const std::vector<Complex>& pts, double tol) {
  std::vector<Complex> sorted = pts;
  std::sort(sorted.begin(), sorted.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<Complex> out;
  for (const Complex& p : sorted) {
    bool dup = false;
    for (const Complex& q : out)
      if (std::abs(p - q) <= tol) { dup = true; break; }
    if (!dup) out.push_back(p);
  }
  return out;
}

}  // namespace detail

// Discrete complex Chebyshev problem: minimize max_i |phi(lambda_i)| over
// polynomials with phi(0) = 1 and degree <= ell. Points are deduplicated at
// 1e-10 (multiplicities do not move the max). When ell >= the number of
// distinct points the interpolating product phi(z) = prod (1 - z/lambda_j)
// gives the exact value 0; otherwise Lawson IRLS with the classical weight
// update w <- w * |r| and best-iterate tracking.
inline MinmaxResult minmax_poly(const std::vector<Complex>& points, int ell,
                                const LawsonConfig& cfg = {}) {
  detail::require(!points.empty(), "minmax_poly: empty point set");
  detail::require(ell >= 0, "minmax_poly: ell must be >= 0");
  for (const Complex& p : points)
    detail::require(std::abs(p) > 0.0, "minmax_poly: points must be nonzero (phi(0) = 1 is fixed)");

  const std::vector<Complex> pts = detail::dedup_points(points, 1e-10);
  const int m = static_cast<int>(pts.size());

  if (ell == 0) return {1.0, {Complex(1.0)}};

  if (ell >= m) {
    std::vector<Complex> phi{Complex(1.0)};
    for (const Complex& p : pts) phi = poly_mult(phi, {Complex(1.0), Complex(-1.0) / p});
    return {0.0, phi};
  }

  // Powers matrix: column j-1 holds lambda_i^j for j = 1..ell.
  Eigen::MatrixXcd Pw(m, ell);
  for (int i = 0; i < m; ++i) {
    Complex acc = 1.0;
    for (int j = 0; j < ell; ++j) {
      acc *= pts[i];
      Pw(i, j) = acc;
    }
  }

  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / m);
  Eigen::VectorXcd best_c = Eigen::VectorXcd::Zero(ell);
  double best_val = 1.0;  // phi = 1 is always feasible
  for (int it = 0; it < cfg.max_iters; ++it) {
    // Weighted least squares for min sum_i w_i |1 + sum_j c_j lambda_i^j|^2.
    Eigen::VectorXd sw = w.cwiseSqrt();
    Eigen::MatrixXcd Aw = sw.cast<Complex>().asDiagonal() * Pw;
    Eigen::VectorXcd rhs = -sw.cast<Complex>();
    Eigen::VectorXcd c = Aw.colPivHouseholderQr().solve(rhs);

    Eigen::VectorXd r = (Pw * c + Eigen::VectorXcd::Ones(m)).cwiseAbs();
    const double val = r.maxCoeff();
    if (val < best_val) {
      best_val = val;
      best_c = c;
    }
    if (val <= 1e-15) break;  // exact interpolation reached

    Eigen::VectorXd wn = (w.array() * r.array()).matrix();
    const double total = wn.sum();
    if (total <= 0.0) break;
    wn /= total;
    if ((wn - w).cwiseAbs().maxCoeff() < cfg.weight_stagnation) {
      w = wn;
      break;
    }
    w = wn;
  }

  MinmaxResult out;
  out.value = best_val;
  out.phi.assign(ell + 1, Complex(0.0));
  out.phi[0] = 1.0;
  for (int j = 0; j < ell; ++j) out.phi[j + 1] = best_c(j);
  return out;
}

// Per-degree bound values kappa(S) * minmax(ell), ell = 0..L. The minmax column
// is made monotone by carrying the previous degree's polynomial forward whenever
// the fresh solve is worse (a lower-degree phi is always feasible).
struct BoundCurve {
  std::vector<double> minmax;  // length L+1
  std::vector<double> bound;   // kappa * minmax (inf when kappa is inf)
  double kappa = 0.0;
  std::vector<Complex> spectrum;  // deduplicated points the solves ran on
};

inline BoundCurve bound_curve(const SpectrumResult& spec, const PencilEigen& pe, int L,
                              const LawsonConfig& cfg = {}) {
  detail::require(L >= 0, "bound_curve: L must be >= 0");
  BoundCurve bc;
  bc.kappa = kappa_S(spec, pe);
  bc.spectrum = detail::dedup_points(spec.all_values().values, 1e-10);

  double prev = std::numeric_limits<double>::infinity();
  for (int ell = 0; ell <= L; ++ell) {
    double v = minmax_poly(bc.spectrum, ell, cfg).value;
    v = std::min(v, prev);
    bc.minmax.push_back(v);
    bc.bound.push_back(std::isinf(bc.kappa) ? std::numeric_limits<double>::infinity()
                                            : bc.kappa * v);
    prev = v;
  }
  return bc;
}

}  // namespace stagekron
