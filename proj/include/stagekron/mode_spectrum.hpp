#pragma once

// Per-mode spectral analysis of the preconditioned operator. For each pencil
// eigenvalue mu the preconditioned system restricted to that mode is the s-by-s
// matrix X_mu = (L + mu I)^{-1} (A^{-1} + mu I); its eigenvalues over all modes
// constitute the full spectrum. Three equivalent routes are implemented:
//   matrix   - eigendecomposition of X_mu directly,
//   pencil   - generalized problem Uhat s = lambda (I + mu L^{-1}) s, shifted by +1,
//   charpoly - coefficients of det(lambda (I + mu L^{-1}) - Uhat) by determinant
//              interpolation, rooted via the companion matrix, shifted by +1.
// Also here: eigenvector lifting to the full space and eigenvalue-branch tracking
// over a mu-grid with merge-point bisection.

#include "stagekron/pencil.hpp"
#include "stagekron/tableau.hpp"

namespace stagekron {

enum class SpectrumMethod { matrix, pencil, charpoly };

inline const char* to_string(SpectrumMethod m) {
  switch (m) {
    case SpectrumMethod::matrix: return "matrix";
    case SpectrumMethod::pencil: return "pencil";
    case SpectrumMethod::charpoly: return "charpoly";
  }
  return "?";
}

// Eigenvalues attached to one mode, sorted by (re, im). stage_vectors holds the
// corresponding eigenvectors of X_mu column-aligned with lambdas (matrix method
// only; empty otherwise). branch holds continuation labels when produced by
// full_spectrum, else is empty.
struct ModeSpectrum {
  double mu = 0.0;
  std::vector<Complex> lambdas;
  SpectrumMethod method = SpectrumMethod::matrix;
  Eigen::MatrixXcd stage_vectors;
  std::vector<int> branch;
};

namespace detail {

inline void require_mode_inputs(const IrkFactorization& f, double mu) {
  require(f.L.rows() >= 1 && f.L.rows() == f.L.cols(), "mode: invalid factorization");
  require(std::isfinite(mu) && mu >= 0.0, "mode: mu must be finite and >= 0");
}

// Sort eigenvalues (and aligned eigenvector columns) by (re, im).
inline void sort_mode(ModeSpectrum& ms) {
  const int s = static_cast<int>(ms.lambdas.size());
  std::vector<int> idx(s);
  for (int i = 0; i < s; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (ms.lambdas[a].real() != ms.lambdas[b].real())
      return ms.lambdas[a].real() < ms.lambdas[b].real();
    return ms.lambdas[a].imag() < ms.lambdas[b].imag();
  });
  std::vector<Complex> lam(s);
  Eigen::MatrixXcd vecs;
  const bool with_vecs = ms.stage_vectors.cols() == s && ms.stage_vectors.rows() > 0;
  if (with_vecs) vecs.resize(ms.stage_vectors.rows(), s);
  for (int i = 0; i < s; ++i) {
    lam[i] = ms.lambdas[idx[i]];
    if (with_vecs) vecs.col(i) = ms.stage_vectors.col(idx[i]);
  }
  ms.lambdas = std::move(lam);
  if (with_vecs) ms.stage_vectors = std::move(vecs);
}

// Extended-precision scalar for the charpoly determinant samples. The monic
// coefficients grade like cluster-radius^k (the nonunit eigenvalues contract
// toward 1 as mu grows), so double interpolation on [-2, 2] cannot resolve the
// small ones relative to themselves; quad keeps every coefficient accurate to
// double roundoff after conversion.
#if defined(__SIZEOF_FLOAT128__)
using wide_real = __float128;
#else
using wide_real = long double;
#endif

inline wide_real wide_abs(wide_real v) { return v < 0 ? -v : v; }

// Determinant of the dense row-major n-by-n matrix a by in-place LU with
// partial pivoting.
inline wide_real wide_det(std::vector<wide_real>& a, int n) {
  wide_real det = 1;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (wide_abs(a[std::size_t(i) * n + k]) > wide_abs(a[std::size_t(piv) * n + k])) piv = i;
    if (a[std::size_t(piv) * n + k] == 0) return 0;
    if (piv != k) {
      for (int j = 0; j < n; ++j)
        std::swap(a[std::size_t(k) * n + j], a[std::size_t(piv) * n + j]);
      det = -det;
    }
    const wide_real pivot = a[std::size_t(k) * n + k];
    det *= pivot;
    for (int i = k + 1; i < n; ++i) {
      const wide_real m = a[std::size_t(i) * n + k] / pivot;
      for (int j = k + 1; j < n; ++j)
        a[std::size_t(i) * n + j] -= m * a[std::size_t(k) * n + j];
    }
  }
  return det;
}

}  // namespace detail

// X_mu = (L + mu I)^{-1} (A^{-1} + mu I), one triangular solve.
inline Eigen::MatrixXd mode_matrix(const IrkFactorization& f, double mu) {
  detail::require_mode_inputs(f, mu);
  const int s = static_cast<int>(f.L.rows());
  Eigen::MatrixXd shifted = f.L + mu * Eigen::MatrixXd::Identity(s, s);
  for (int i = 0; i < s; ++i)
    if (shifted(i, i) == 0.0)
      throw std::runtime_error("mode_matrix: singular L + mu I");
  return shifted.triangularView<Eigen::Lower>().solve(
      f.Ainv + mu * Eigen::MatrixXd::Identity(s, s));
}

inline ModeSpectrum mode_spectrum_matrix(const IrkFactorization& f, double mu) {
  ModeSpectrum ms;
  ms.mu = mu;
  ms.method = SpectrumMethod::matrix;
  ComplexSpectrum spec = eig_dense(mode_matrix(f, mu), &ms.stage_vectors);
  ms.lambdas = spec.values;
  detail::sort_mode(ms);
  return ms;
}

// I + mu L^{-1}: the lower-triangular pencil factor shared by the pencil and
// charpoly routes.
inline Eigen::MatrixXd mode_pencil_factor(const IrkFactorization& f, double mu) {
  detail::require_mode_inputs(f, mu);
  const int s = static_cast<int>(f.L.rows());
  Eigen::MatrixXd Linv =
      f.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(s, s));
  return Eigen::MatrixXd::Identity(s, s) + mu * Linv;
}

// Generalized eigenvalues of (Uhat, I + mu L^{-1}), returned shifted by +1
// (they are the eigenvalues of X_mu). Reduction: eig of (I + mu L^{-1})^{-1} Uhat.
inline ModeSpectrum mode_spectrum_pencil(const IrkFactorization& f, double mu) {
  Eigen::MatrixXd G = mode_pencil_factor(f, mu);
  Eigen::MatrixXd T = G.triangularView<Eigen::Lower>().solve(f.Uhat);
  ModeSpectrum ms;
  ms.mu = mu;
  ms.method = SpectrumMethod::pencil;
  for (const Complex& v : eig_dense(T).values) ms.lambdas.push_back(v + 1.0);
  detail::sort_mode(ms);
  return ms;
}

// Monic ascending coefficients of p_mu(lambda) = det(lambda (I + mu L^{-1}) - Uhat),
// degree s, by evaluating the determinant at s+1 Chebyshev points on [-2, 2] and
// interpolating. The constant coefficient is analytically det(-Uhat) = 0 and is
// snapped to exact zero.
inline std::vector<double> mode_charpoly(const IrkFactorization& f, double mu) {
  using detail::wide_real;
  Eigen::MatrixXd G = mode_pencil_factor(f, mu);
  const int s = static_cast<int>(G.rows());

  // Determinant samples at the Chebyshev points, carried in extended precision
  // so the strongly graded low-order coefficients survive the interpolation.
  std::vector<wide_real> x(s + 1), d(s + 1);
  std::vector<wide_real> B(std::size_t(s) * s);
  for (int j = 0; j <= s; ++j) {
    const double xj = 2.0 * std::cos(std::numbers::pi * j / s);
    x[j] = xj;
    for (int r = 0; r < s; ++r)
      for (int c = 0; c < s; ++c)
        B[std::size_t(r) * s + c] = wide_real(xj) * wide_real(G(r, c)) - wide_real(f.Uhat(r, c));
    d[j] = detail::wide_det(B, s);
  }

  // Newton divided differences in place, then Horner expansion of the Newton
  // form into ascending monomial coefficients.
  for (int k = 1; k <= s; ++k)
    for (int j = s; j >= k; --j) d[j] = (d[j] - d[j - 1]) / (x[j] - x[j - k]);
  std::vector<wide_real> poly(s + 1, 0);
  poly[0] = d[s];
  for (int j = s - 1, deg = 0; j >= 0; --j) {
    ++deg;
    for (int i = deg; i >= 1; --i) poly[i] = poly[i - 1] - x[j] * poly[i];
    poly[0] = d[j] - x[j] * poly[0];
  }

  const wide_real lead = poly[s];  // det(G) = prod(1 + mu / l_ii) >= 1
  if (lead == 0) throw std::runtime_error("mode_charpoly: vanishing leading coefficient");
  std::vector<double> coeffs(s + 1);
  for (int i = 0; i <= s; ++i) coeffs[i] = static_cast<double>(poly[i] / lead);
  coeffs[s] = 1.0;
  coeffs[0] = 0.0;
  return coeffs;
}

inline ModeSpectrum mode_spectrum_charpoly(const IrkFactorization& f, double mu) {
  std::vector<double> p = mode_charpoly(f, mu);
  const int s = static_cast<int>(p.size()) - 1;
  ModeSpectrum ms;
  ms.mu = mu;
  ms.method = SpectrumMethod::charpoly;
  ms.lambdas.push_back(Complex(1.0, 0.0));  // deflated exact zero root, shifted
  if (s >= 2) {
    std::vector<double> def(p.begin() + 1, p.end());  // p / lambda, still monic
    for (const Complex& r : polyroots_companion(def).values)
      ms.lambdas.push_back(r + 1.0);
  }
  detail::sort_mode(ms);
  return ms;
}

inline ModeSpectrum mode_spectrum(const IrkFactorization& f, double mu, SpectrumMethod method) {
  switch (method) {
    case SpectrumMethod::matrix: return mode_spectrum_matrix(f, mu);
    case SpectrumMethod::pencil: return mode_spectrum_pencil(f, mu);
    case SpectrumMethod::charpoly: return mode_spectrum_charpoly(f, mu);
  }
  throw std::invalid_argument("mode_spectrum: unknown method");
}

// All n*s eigenvalues of the preconditioned operator, one ModeSpectrum per
// pencil eigenvalue, with branch labels assigned by nearest-neighbor
// continuation across the (ascending) mu sequence.
struct SpectrumResult {
  std::vector<ModeSpectrum> modes;
  int stages = 0;
  std::string tableau;
  std::string problem;

  ComplexSpectrum all_values() const {
    ComplexSpectrum out;
    for (const ModeSpectrum& m : modes)
      out.values.insert(out.values.end(), m.lambdas.begin(), m.lambdas.end());
    return out;
  }
};

namespace detail {

inline int im_sign(const Complex& v) {
  if (std::abs(v.imag()) <= 1e-12) return 0;
  return v.imag() > 0.0 ? 1 : -1;
}

// Greedy nearest-neighbor assignment of new values to the previous branch
// values; labels[j] = branch of vals[j]. Distance ties (the conjugate-pair
// ambiguity) are broken toward matching imaginary-part sign.
inline std::vector<int> assign_branches(const std::vector<Complex>& prev,
                                        const std::vector<Complex>& vals) {
  const int s = static_cast<int>(vals.size());
  struct Cand {
    double dist;
    int penalty, b, v;
  };
  std::vector<Cand> cands;
  cands.reserve(s * s);
  for (int b = 0; b < s; ++b)
    for (int v = 0; v < s; ++v) {
      const int sp = im_sign(prev[b]), sv = im_sign(vals[v]);
      const int pen = (sp != 0 && sv != 0 && sp != sv) ? 1 : 0;
      cands.push_back({std::abs(prev[b] - vals[v]), pen, b, v});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& c) {
    if (a.dist != c.dist) return a.dist < c.dist;
    if (a.penalty != c.penalty) return a.penalty < c.penalty;
    if (a.b != c.b) return a.b < c.b;
    return a.v < c.v;
  });
  std::vector<int> labels(s, -1), taken(s, 0);
  int assigned = 0;
  for (const Cand& c : cands) {
    if (assigned == s) break;
    if (taken[c.b] || labels[c.v] >= 0) continue;
    labels[c.v] = c.b;
    taken[c.b] = 1;
    ++assigned;
  }
  return labels;
}

}  // namespace detail

inline SpectrumResult full_spectrum(const IrkFactorization& f, const PencilEigen& pe,
                                    SpectrumMethod method, std::string tableau_name = "",
                                    std::string problem_name = "") {
  SpectrumResult out;
  out.stages = static_cast<int>(f.L.rows());
  out.tableau = std::move(tableau_name);
  out.problem = std::move(problem_name);
  const int s = out.stages;
  std::vector<Complex> prev(s);  // value of each branch at the previous mode
  for (Eigen::Index k = 0; k < pe.mu.size(); ++k) {
    ModeSpectrum ms = mode_spectrum(f, pe.mu(k), method);
    if (k == 0) {
      ms.branch.resize(s);
      for (int j = 0; j < s; ++j) ms.branch[j] = j;
    } else {
      ms.branch = detail::assign_branches(prev, ms.lambdas);
    }
    for (int j = 0; j < s; ++j) prev[ms.branch[j]] = ms.lambdas[j];
    out.modes.push_back(std::move(ms));
  }
  return out;
}

// Lift a stage eigenvector of X_mu_k to the full space: stage-major v with
// blocks v_i = svec_i * q, q the k-th pencil eigenvector. The lifted vector
// satisfies the generalized eigenrelation of the full operator pair.
inline Eigen::VectorXcd lift_eigenvector(const Eigen::VectorXcd& svec, const Eigen::VectorXd& q) {
  const Eigen::Index s = svec.size(), n = q.size();
  detail::require(s >= 1 && n >= 1, "lift_eigenvector: empty input");
  Eigen::VectorXcd v(n * s);
  for (Eigen::Index i = 0; i < s; ++i) v.segment(i * n, n) = svec(i) * q.cast<Complex>();
  return v;
}

// Eigenvalue branches over a mu-grid: s polylines plus the located points where
// a complex-conjugate pair collides on (or lifts off) the real axis.
struct BranchPoint {
  double mu = 0.0;
  Complex lambda;
};

struct BranchSet {
  std::vector<std::vector<BranchPoint>> branches;  // s polylines over the grid
  std::vector<BranchPoint> merges;                 // (mu_hat, lambda_hat), lambda real
};

namespace detail {

// Values of the two tracked branches at mu, identified by nearest-neighbor
// matching against reference values (greedy over all s eigenvalues).
inline std::pair<Complex, Complex> matched_pair(const IrkFactorization& f, double mu,
                                                const std::vector<Complex>& refs, int p, int q) {
  ModeSpectrum ms = mode_spectrum_matrix(f, mu);
  std::vector<int> labels = assign_branches(refs, ms.lambdas);
  Complex a, b;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] == p) a = ms.lambdas[j];
    if (labels[j] == q) b = ms.lambdas[j];
  }
  return {a, b};
}

}  // namespace detail

inline BranchSet track_branches(const IrkFactorization& f, const std::vector<double>& mu_grid) {
  detail::require(mu_grid.size() >= 2, "track_branches: need at least 2 grid points");
  for (std::size_t i = 1; i < mu_grid.size(); ++i)
    detail::require(mu_grid[i] > mu_grid[i - 1], "track_branches: grid must be ascending");

  const int s = static_cast<int>(f.L.rows());
  BranchSet bs;
  bs.branches.assign(s, {});

  std::vector<Complex> prev(s);
  std::vector<std::vector<Complex>> per_branch_prev;  // branch values at each grid point
  for (std::size_t g = 0; g < mu_grid.size(); ++g) {
    ModeSpectrum ms = mode_spectrum_matrix(f, mu_grid[g]);
    std::vector<int> labels;
    if (g == 0) {
      labels.resize(s);
      for (int j = 0; j < s; ++j) labels[j] = j;
    } else {
      labels = detail::assign_branches(prev, ms.lambdas);
    }
    for (int j = 0; j < s; ++j) {
      prev[labels[j]] = ms.lambdas[j];
      bs.branches[labels[j]].push_back({mu_grid[g], ms.lambdas[j]});
    }
    per_branch_prev.push_back(prev);
  }

  // Merge detection: for each branch pair and each grid interval, a conjugate
  // pair on one side and two reals on the other marks a collision; locate it by
  // bisection on the imaginary part crossing 1e-12.
  constexpr double kImTol = 1e-12;
  for (int p = 0; p < s; ++p)
    for (int q = p + 1; q < s; ++q)
      for (std::size_t g = 1; g < mu_grid.size(); ++g) {
        const Complex lp = bs.branches[p][g - 1].lambda, lq = bs.branches[q][g - 1].lambda;
        const Complex rp = bs.branches[p][g].lambda, rq = bs.branches[q][g].lambda;
        const bool left_cplx = std::abs(lp.imag()) > kImTol && std::abs(lq.imag()) > kImTol &&
                               std::abs(std::conj(lp) - lq) <= 1e-6 * (1.0 + std::abs(lp));
        const bool right_cplx = std::abs(rp.imag()) > kImTol && std::abs(rq.imag()) > kImTol &&
                                std::abs(std::conj(rp) - rq) <= 1e-6 * (1.0 + std::abs(rp));
        const bool left_real = std::abs(lp.imag()) <= kImTol && std::abs(lq.imag()) <= kImTol;
        const bool right_real = std::abs(rp.imag()) <= kImTol && std::abs(rq.imag()) <= kImTol;
        if (!((left_cplx && right_real) || (left_real && right_cplx))) continue;

        double lo = mu_grid[g - 1], hi = mu_grid[g];
        // refs follow the complex side so the matching stays anchored.
        std::vector<Complex> refs = per_branch_prev[left_cplx ? g - 1 : g];
        for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::max(1.0, hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          auto [a, b] = detail::matched_pair(f, mid, refs, p, q);
          const bool mid_cplx = std::abs(a.imag()) > kImTol || std::abs(b.imag()) > kImTol;
          if (mid_cplx == left_cplx) lo = mid; else hi = mid;
          if (mid_cplx) {
            refs[p] = a;
            refs[q] = b;
          }
        }
        const double mu_hat = 0.5 * (lo + hi);
        auto [a, b] = detail::matched_pair(f, left_cplx ? hi : lo, refs, p, q);
        bs.merges.push_back({mu_hat, Complex(0.5 * (a.real() + b.real()), 0.0)});
      }
  std::sort(bs.merges.begin(), bs.merges.end(),
            [](const BranchPoint& a, const BranchPoint& b) { return a.mu < b.mu; });
  return bs;
}

}  // namespace stagekron
