#pragma once

// Small dense kernels shared by every other header: eigensolvers, companion-matrix
// polynomial roots, condition numbers, spectral norms, and the polynomial utilities
// (evaluation, multiplication, interpolation) used by the tableau and charpoly code.
// Matrices here are desk-scale (s <= 10 stage blocks, n*s <= a few thousand), so
// everything is dense and deterministic; Eigen provides the factorization backends.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stagekron {

using Complex = std::complex<double>;

// Multiset of complex eigenvalues. For real source matrices the values are closed
// under conjugation (within the 1e-9 pairing tolerance used by the tests).
struct ComplexSpectrum {
  std::vector<Complex> values;

  std::size_t size() const { return values.size(); }

  // Canonical order for matching/printing: lexicographic by (re, im).
  ComplexSpectrum sorted() const {
    ComplexSpectrum out = *this;
    std::sort(out.values.begin(), out.values.end(),
              [](const Complex& a, const Complex& b) {
                if (a.real() != b.real()) return a.real() < b.real();
                return a.imag() < b.imag();
              });
    return out;
  }
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const Eigen::MatrixXd& m, const char* who) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

inline void require_finite(const Eigen::MatrixXcd& m, const char* who) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

}  // namespace detail

// Eigenvalues of a general real matrix (QR iteration via Eigen::EigenSolver).
inline ComplexSpectrum eig_dense(const Eigen::MatrixXd& m, Eigen::MatrixXcd* eigvecs = nullptr) {
  detail::require(m.rows() >= 1 && m.rows() == m.cols(), "eig_dense: matrix must be square, m >= 1");
  detail::require_finite(m, "eig_dense");
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, eigvecs != nullptr);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_dense: QR iteration failed to converge");
  ComplexSpectrum out;
  out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  if (eigvecs) *eigvecs = es.eigenvectors();
  return out;
}

// Complex-matrix overload (used for companion matrices of complex polynomials).
inline ComplexSpectrum eig_dense(const Eigen::MatrixXcd& m, Eigen::MatrixXcd* eigvecs = nullptr) {
  detail::require(m.rows() >= 1 && m.rows() == m.cols(), "eig_dense: matrix must be square, m >= 1");
  detail::require_finite(m, "eig_dense");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, eigvecs != nullptr);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_dense: QR iteration failed to converge");
  ComplexSpectrum out;
  out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  if (eigvecs) *eigvecs = es.eigenvectors();
  return out;
}

// Roots of a monic polynomial given by ascending coefficients c[0] + c[1] x + ... + x^d,
// computed as the eigenvalues of the companion matrix. The caller normalizes to monic;
// |c.back() - 1| must be <= 1e-12.
inline ComplexSpectrum polyroots_companion(const std::vector<Complex>& coeffs) {
  const std::size_t d = coeffs.empty() ? 0 : coeffs.size() - 1;
  detail::require(d >= 1, "polyroots_companion: degree must be >= 1");
  detail::require(std::abs(coeffs.back() - 1.0) <= 1e-12,
                  "polyroots_companion: leading coefficient must be 1 (normalize first)");

  // Graded scaling: substituting x = sigma*y with sigma = max_k |c_k|^{1/(d-k)}
  // puts every scaled coefficient in [0, 1] in magnitude. Eigen's Schur
  // iterations do not balance, and the raw companion of a strongly graded
  // polynomial (all roots tiny) loses the roots' relative accuracy without it.
  double sigma = 0.0;
  for (std::size_t k = 0; k < d; ++k)
    if (coeffs[k] != 0.0)
      sigma = std::max(sigma, std::pow(std::abs(coeffs[k]), 1.0 / double(d - k)));
  ComplexSpectrum out;
  if (sigma == 0.0) {  // pure power x^d
    out.values.assign(d, Complex(0.0, 0.0));
    return out;
  }
  std::vector<Complex> sc(d);
  double pw = 1.0;
  for (std::size_t j = 1; j <= d; ++j) {
    pw *= sigma;
    sc[d - j] = coeffs[d - j] / pw;
  }

  bool real_coeffs = true;
  for (const Complex& c : coeffs)
    if (c.imag() != 0.0) { real_coeffs = false; break; }

  if (real_coeffs) {
    // Real companion keeps the spectrum exactly conjugate-closed.
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i + 1 < d; ++i) comp(i + 1, i) = 1.0;
    for (std::size_t i = 0; i < d; ++i) comp(i, d - 1) = -sc[i].real();
    out = eig_dense(comp);
  } else {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t i = 0; i + 1 < d; ++i) comp(i + 1, i) = 1.0;
    for (std::size_t i = 0; i < d; ++i) comp(i, d - 1) = -sc[i];
    out = eig_dense(comp);
  }
  for (Complex& v : out.values) v *= sigma;
  return out;
}

inline ComplexSpectrum polyroots_companion(const std::vector<double>& coeffs) {
  std::vector<Complex> c(coeffs.begin(), coeffs.end());
  return polyroots_companion(c);
}

// Symmetric eigendecomposition, values ascending, without positivity checks.
// Internal building block for eig_spd / cond2 / spectral_norm.
struct SymEig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

namespace detail {

inline SymEig sym_eig(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("sym_eig: symmetric eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace detail

// Eigendecomposition of a symmetric positive definite matrix: values ascending,
// vectors orthonormal. Rejects asymmetric input (1e-12 relative) and matrices with
// a negative eigenvalue beyond tolerance.
inline SymEig eig_spd(const Eigen::MatrixXd& m) {
  detail::require(m.rows() >= 1 && m.rows() == m.cols(), "eig_spd: matrix must be square, m >= 1");
  detail::require_finite(m, "eig_spd");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  detail::require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                  "eig_spd: matrix not symmetric to 1e-12");
  SymEig se = detail::sym_eig(0.5 * (m + m.transpose()));
  const double lmax = se.values.maxCoeff();
  if (se.values.minCoeff() < -1e-12 * std::max(1.0, lmax))
    throw std::runtime_error("eig_spd: matrix not positive definite (negative eigenvalue)");
  return se;
}

// 2-norm condition number via the Gram matrix: kappa = sqrt(lmax/lmin) of A^H A.
// Returns +inf when lmin <= 1e-14 * lmax (numerical singularity is a value, not an error).
inline double cond2(const Eigen::MatrixXcd& m) {
  detail::require(m.rows() >= 1 && m.cols() >= 1, "cond2: empty matrix");
  detail::require_finite(m, "cond2");
  Eigen::MatrixXcd gram = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("cond2: symmetric eigensolver failed to converge");
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin <= 1e-14 * lmax || lmax <= 0.0)
    return std::numeric_limits<double>::infinity();
  return std::sqrt(lmax / lmin);
}

inline double cond2(const Eigen::MatrixXd& m) {
  return cond2(Eigen::MatrixXcd(m.cast<Complex>()));
}

// Spectral norm ||A||_2 = sqrt(lmax(A^H A)).
inline double spectral_norm(const Eigen::MatrixXcd& m) {
  detail::require(m.rows() >= 1 && m.cols() >= 1, "spectral_norm: empty matrix");
  detail::require_finite(m, "spectral_norm");
  Eigen::MatrixXcd gram = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_norm: symmetric eigensolver failed to converge");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  return spectral_norm(Eigen::MatrixXcd(m.cast<Complex>()));
}

// Maximum pairwise distance after matching two equal-size spectra in sorted
// (re, im) order. Compared spectra in this codebase agree far better than their
// internal gaps, so the sorted greedy matching is unambiguous.
inline double match_spectra(const ComplexSpectrum& a, const ComplexSpectrum& b) {
  detail::require(a.size() == b.size(), "match_spectra: size mismatch");
  ComplexSpectrum as = a.sorted(), bs = b.sorted();
  double worst = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i)
    worst = std::max(worst, std::abs(as.values[i] - bs.values[i]));
  return worst;
}

// True when every value with nonzero imaginary part has a conjugate partner
// within tol.
inline bool conjugate_closed(const ComplexSpectrum& s, double tol = 1e-9) {
  for (const Complex& v : s.values) {
    if (std::abs(v.imag()) <= tol) continue;
    bool found = false;
    for (const Complex& w : s.values)
      if (std::abs(std::conj(v) - w) <= tol) { found = true; break; }
    if (!found) return false;
  }
  return true;
}

// --- polynomial utilities (ascending coefficient convention) ---

inline double polyval(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

inline Complex polyval(const std::vector<Complex>& coeffs, Complex x) {
  Complex acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

inline std::vector<double> poly_mult(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline std::vector<Complex> poly_mult(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  std::vector<Complex> out(a.size() + b.size() - 1, Complex(0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline std::vector<double> poly_deriv(const std::vector<double>& a) {
  if (a.size() <= 1) return {0.0};
  std::vector<double> out(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) out[i - 1] = static_cast<double>(i) * a[i];
  return out;
}

// Interpolating polynomial through (x_i, f_i), i = 0..d, returned as ascending
// monomial coefficients. Newton divided differences expanded to the monomial
// basis; exact (up to roundoff) for any degree-d data, used with d <= 10 here.
inline std::vector<double> polyfit_points(const std::vector<double>& x, const std::vector<double>& f) {
  detail::require(!x.empty() && x.size() == f.size(), "polyfit_points: need matching nonempty x, f");
  const std::size_t d = x.size() - 1;
  std::vector<double> dd = f;  // divided-difference table, computed in place
  for (std::size_t k = 1; k <= d; ++k)
    for (std::size_t i = d; i >= k; --i) {
      const double denom = x[i] - x[i - k];
      detail::require(denom != 0.0, "polyfit_points: repeated interpolation node");
      dd[i] = (dd[i] - dd[i - 1]) / denom;
    }
  // Horner expansion of the Newton form into monomials.
  std::vector<double> coeffs{dd[d]};
  for (std::size_t k = d; k-- > 0;) {
    coeffs = poly_mult(coeffs, {-x[k], 1.0});
    coeffs[0] += dd[k];
  }
  return coeffs;
}

}  // namespace stagekron
