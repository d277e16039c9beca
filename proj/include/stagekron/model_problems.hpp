#pragma once

// Model spatial discretizations of the heat equation with homogeneous Dirichlet
// boundaries, in the sign convention M u' = -K u + b with K symmetric positive
// definite: 1D piecewise-linear finite elements and the 2D 5-point finite
// difference Laplacian. Both produce (M, K) pairs for the SPD pencil plus a
// time-dependent load sampler and a default initial state.

#include "stagekron/pencil.hpp"

#include <functional>
#include <numbers>

namespace stagekron {

enum class ProblemKind { laplace1d_p1, laplace2d_fd };

// Pointwise forcing f(x, t) (1D) or f(x, y, t) (2D); the assembled load applies
// lumped quadrature, so b(t)_i = h * f(x_i, t) in 1D and h^2 * f(x_i, y_i, t) in 2D.
using Forcing1D = std::function<double(double, double)>;
using Forcing2D = std::function<double(double, double, double)>;

struct ModelProblem {
  ProblemKind kind = ProblemKind::laplace1d_p1;
  int n = 0;      // interior degrees of freedom
  double h = 0.0; // mesh width
  Eigen::MatrixXd M;
  Eigen::MatrixXd K;
  std::function<Eigen::VectorXd(double)> forcing;  // load vector b(t)
  Eigen::VectorXd u0;                              // default initial state
  std::string name;

  SpatialPencil pencil(double tau) const {
    detail::require(tau > 0.0, "ModelProblem::pencil: tau must be positive");
    return {M, K, tau};
  }
};

// 1D P1 elements on n interior nodes of [0, 1]: h = 1/(n+1),
// K = (1/h) tridiag(-1, 2, -1), M = (h/6) tridiag(1, 4, 1).
inline ModelProblem assemble_1d(int n, Forcing1D f = nullptr) {
  detail::require(n >= 1, "assemble_1d: n must be >= 1");
  ModelProblem mp;
  mp.kind = ProblemKind::laplace1d_p1;
  mp.n = n;
  mp.h = 1.0 / (n + 1);
  mp.name = "laplace1d";
  mp.K = Eigen::MatrixXd::Zero(n, n);
  mp.M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    mp.K(i, i) = 2.0 / mp.h;
    mp.M(i, i) = 4.0 * mp.h / 6.0;
    if (i + 1 < n) {
      mp.K(i, i + 1) = mp.K(i + 1, i) = -1.0 / mp.h;
      mp.M(i, i + 1) = mp.M(i + 1, i) = mp.h / 6.0;
    }
  }
  const double h = mp.h;
  if (f) {
    mp.forcing = [n, h, f](double t) {
      Eigen::VectorXd b(n);
      for (int i = 0; i < n; ++i) b(i) = h * f((i + 1) * h, t);
      return b;
    };
  } else {
    mp.forcing = [n](double) { return Eigen::VectorXd::Zero(n); };
  }
  mp.u0.resize(n);
  for (int i = 0; i < n; ++i) mp.u0(i) = std::sin(std::numbers::pi * (i + 1) * h);
  return mp;
}

// 2D 5-point finite differences on an nx-by-nx interior grid of the unit square:
// h = 1/(nx+1), K = (5-point stencil)/h^2, M = I. Row-major interior indexing
// p = iy*nx + ix.
inline ModelProblem assemble_2d_fd(int nx, Forcing2D f = nullptr) {
  detail::require(nx >= 1, "assemble_2d_fd: nx must be >= 1");
  ModelProblem mp;
  mp.kind = ProblemKind::laplace2d_fd;
  mp.n = nx * nx;
  mp.h = 1.0 / (nx + 1);
  mp.name = "laplace2d";
  const double ih2 = 1.0 / (mp.h * mp.h);
  mp.K = Eigen::MatrixXd::Zero(mp.n, mp.n);
  mp.M = Eigen::MatrixXd::Identity(mp.n, mp.n);
  for (int iy = 0; iy < nx; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const int p = iy * nx + ix;
      mp.K(p, p) = 4.0 * ih2;
      if (ix + 1 < nx) mp.K(p, p + 1) = mp.K(p + 1, p) = -ih2;
      if (iy + 1 < nx) mp.K(p, p + nx) = mp.K(p + nx, p) = -ih2;
    }
  const double h = mp.h;
  const int n = mp.n;
  if (f) {
    mp.forcing = [nx, n, h, f](double t) {
      Eigen::VectorXd b(n);
      for (int iy = 0; iy < nx; ++iy)
        for (int ix = 0; ix < nx; ++ix)
          b(iy * nx + ix) = h * h * f((ix + 1) * h, (iy + 1) * h, t);
      return b;
    };
  } else {
    mp.forcing = [n](double) { return Eigen::VectorXd::Zero(n); };
  }
  mp.u0.resize(mp.n);
  for (int iy = 0; iy < nx; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      mp.u0(iy * nx + ix) = std::sin(std::numbers::pi * (ix + 1) * h) *
                            std::sin(std::numbers::pi * (iy + 1) * h);
  return mp;
}

// Closed-form pencil eigenvalues of the 1D P1 problem:
// mu_j = tau * (6/h^2) (1 - cos(j pi h)) / (2 + cos(j pi h)), j = 1..n.
inline Eigen::VectorXd analytic_mu_1d(int n, double tau) {
  detail::require(n >= 1, "analytic_mu_1d: n must be >= 1");
  detail::require(tau > 0.0, "analytic_mu_1d: tau must be positive");
  const double h = 1.0 / (n + 1);
  Eigen::VectorXd mu(n);
  for (int j = 1; j <= n; ++j) {
    const double cj = std::cos(j * std::numbers::pi * h);
    mu(j - 1) = tau * (6.0 / (h * h)) * (1.0 - cj) / (2.0 + cj);
  }
  return mu;
}

}  // namespace stagekron
