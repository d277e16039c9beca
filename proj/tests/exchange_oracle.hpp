#pragma once

// Brute-force oracle for the discrete min-max problem on positive real point
// sets, independent of the Lawson solver under test. The monomials {x..x^ell}
// form a Haar system on (0, inf), so the best phi with phi(0) = 1 equioscillates
// on some (ell+1)-point subset; the optimum equals the maximum over all
// (ell+1)-subsets of the levelled value |t| solving
//   1 + sum_j c_j x_i^j = (-1)^i t,  i = 0..ell.
// Practical up to ~12 points (binomial enumeration).

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

inline double minmax_exchange_oracle(std::vector<double> pts, int ell) {
  if (ell <= 0) return 1.0;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-10; }),
            pts.end());
  const int m = static_cast<int>(pts.size());
  for (double p : pts)
    if (p <= 0.0) throw std::invalid_argument("exchange oracle: points must be positive");
  if (ell >= m) return 0.0;

  const int k = ell + 1;  // subset size
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  double best = 0.0;
  while (true) {
    // Solve the alternation system on pts[idx].
    Eigen::MatrixXd A(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(k, -1.0);
    for (int i = 0; i < k; ++i) {
      double acc = 1.0;
      for (int j = 0; j < ell; ++j) {
        acc *= pts[idx[i]];
        A(i, j) = acc;
      }
      A(i, ell) = (i % 2 == 0) ? -1.0 : 1.0;  // -(-1)^i t term moved left
    }
    Eigen::VectorXd sol = A.fullPivLu().solve(rhs);
    if ((A * sol - rhs).cwiseAbs().maxCoeff() <= 1e-8)
      best = std::max(best, std::abs(sol(ell)));

    // next combination
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == m - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}
