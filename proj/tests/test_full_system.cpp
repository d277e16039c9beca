#include "stagekron/full_system.hpp"
#include "stagekron/model_problems.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace stagekron;
using Catch::Matchers::WithinAbs;

TEST_CASE("kron hand example", "[full]") {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1.0, 2.0, 3.0, 4.0;
  b << 0.0, 1.0, 1.0, 0.0;
  Eigen::MatrixXd k = kron(a, b);
  REQUIRE(k.rows() == 4);
  CHECK(k(0, 1) == 1.0);
  CHECK(k(0, 0) == 0.0);
  CHECK(k(0, 3) == 2.0);
  CHECK(k(3, 0) == 3.0);
  CHECK(k(2, 3) == 4.0);
  // mixed-product property on small random-ish blocks
  Eigen::MatrixXd c(2, 2), d(2, 2);
  c << 2.0, -1.0, 0.5, 1.0;
  d << 1.0, 3.0, -2.0, 0.25;
  CHECK((kron(a * c, b * d) - kron(a, b) * kron(c, d)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("scalar-space assembly matches the blockwise formula", "[full]") {
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);
  SpatialPencil p;
  p.M = Eigen::MatrixXd::Constant(1, 1, 2.0);
  p.K = Eigen::MatrixXd::Constant(1, 1, 3.0);
  p.tau = 0.5;
  FullSystem fs = assemble_full(tab, f, p);
  CHECK(fs.n == 1);
  CHECK(fs.s == 2);
  CHECK(fs.ordering == "stage-major");
  const double m = 2.0, tk = 0.5 * 3.0;
  Eigen::MatrixXd wantA(2, 2), wantP(2, 2);
  wantA << 1.5 * m + tk, 0.5 * m, -4.5 * m, 2.5 * m + tk;
  wantP << 1.5 * m + tk, 0.0, -4.5 * m, 4.0 * m + tk;
  CHECK((fs.A - wantA).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((fs.P - wantP).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((fs.Atilde - f.L).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("custom Atilde overrides the preconditioner factor", "[full]") {
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);
  ModelProblem mp = assemble_1d(2);
  FullSystem fs = assemble_full(tab, f, mp.pencil(1.0), f.Ainv);
  CHECK((fs.P - fs.A).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK_THROWS_AS(assemble_full(tab, f, mp.pencil(1.0), Eigen::MatrixXd::Identity(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("oracle spectrum equals the per-mode spectrum", "[full]") {
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);
  ModelProblem mp = assemble_1d(6);
  SpatialPencil p = mp.pencil(0.2);
  FullSystem fs = assemble_full(tab, f, p);
  OracleSpectrum os = oracle_spectrum(fs);
  PencilEigen pe = eig_pencil(p);
  SpectrumResult sr = full_spectrum(f, pe, SpectrumMethod::matrix);
  CHECK(match_spectra(os.spectrum, sr.all_values()) <= 1e-10);
  // eigenvector columns are 2-normalized
  for (Eigen::Index j = 0; j < os.S.cols(); ++j)
    CHECK_THAT(os.S.col(j).norm(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("lifted per-mode vectors are eigenvectors of the full operator", "[full]") {
  ButcherTable tab = radau_iia(3);
  IrkFactorization f = factorize(tab);
  ModelProblem mp = assemble_1d(5);
  SpatialPencil p = mp.pencil(0.7);
  FullSystem fs = assemble_full(tab, f, p);
  PencilEigen pe = eig_pencil(p);
  const double scale = spectral_norm(fs.A);
  for (int k = 0; k < 5; ++k) {
    ModeSpectrum ms = mode_spectrum_matrix(f, pe.mu(k));
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXcd v = lift_eigenvector(ms.stage_vectors.col(j), pe.Q.col(k));
      // generalized relation: A v = lambda P v
      const double resid = (fs.A.cast<Complex>() * v - ms.lambdas[j] * (fs.P.cast<Complex>() * v))
                               .norm() / v.norm();
      CHECK(resid <= 1e-8 * scale);
    }
  }
}

TEST_CASE("shuffle permutation formula and round trip", "[full]") {
  ShufflePermutation sp = shuffle(3, 2);
  // (node k, stage i) node-major index q = k*s + i -> stage-major i*n + k
  REQUIRE(sp.sigma.size() == 6);
  CHECK(sp.sigma[0] == 0);  // node 0 stage 0
  CHECK(sp.sigma[1] == 3);  // node 0 stage 1
  CHECK(sp.sigma[2] == 1);  // node 1 stage 0
  CHECK(sp.sigma[3] == 4);
  CHECK(sp.sigma[4] == 2);
  CHECK(sp.sigma[5] == 5);

  Eigen::VectorXd x(6);
  x << 0.0, 1.0, 2.0, 3.0, 4.0, 5.0;
  CHECK((sp.apply_inverse(sp.apply(x)) - x).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd Pi = sp.matrix();
  CHECK((Pi.transpose() * Pi - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((Pi * x - sp.apply(x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shuffle block-diagonalizes diagonal-space stage operators", "[full]") {
  // X = C (x) D with D diagonal: Pi^T X Pi must be block diagonal with n blocks
  // of size s (node-major), block k equal to D(k,k) * C.
  Eigen::MatrixXd C(2, 2);
  C << 1.5, 0.5, -4.5, 2.5;
  Eigen::VectorXd dv(3);
  dv << 2.0, 3.0, 5.0;
  const Eigen::MatrixXd X = kron(C, Eigen::MatrixXd(dv.asDiagonal()));
  ShufflePermutation sp = shuffle(3, 2);
  const Eigen::MatrixXd Pi = sp.matrix();
  const Eigen::MatrixXd Y = Pi.transpose() * X * Pi;
  for (int k = 0; k < 3; ++k)
    CHECK((Y.block(2 * k, 2 * k, 2, 2) - dv(k) * C).cwiseAbs().maxCoeff() <= 1e-13);
  // off-diagonal blocks vanish
  Eigen::MatrixXd mask = Y;
  for (int k = 0; k < 3; ++k) mask.block(2 * k, 2 * k, 2, 2).setZero();
  CHECK(mask.cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("w1w2 split reproduces the preconditioned operator", "[full]") {
  for (int s : {2, 3}) {
    ButcherTable tab = radau_iia(s);
    IrkFactorization f = factorize(tab);
    ModelProblem mp = assemble_1d(4);
    SpatialPencil p = mp.pencil(0.3);
    auto [W1, W2] = w1w2(tab, f, p);
    FullSystem fs = assemble_full(tab, f, p);
    const Eigen::MatrixXd T = fs.P.partialPivLu().solve(fs.A);
    const Eigen::MatrixXd split =
        Eigen::MatrixXd::Identity(4 * s, 4 * s) + W1.partialPivLu().solve(W2);
    CHECK((T - split).cwiseAbs().maxCoeff() <= 1e-9 * spectral_norm(T));
  }
}

TEST_CASE("assembly guard rejects oversized systems", "[full]") {
  ButcherTable tab = radau_iia(10);
  IrkFactorization f = factorize(tab);
  ModelProblem mp = assemble_1d(601);  // n*s = 6010 > 6000
  CHECK_THROWS_AS(assemble_full(tab, f, mp.pencil(1.0)), std::invalid_argument);
}
