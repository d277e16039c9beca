#include "stagekron/full_system.hpp"
#include "stagekron/krylov.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace stagekron;
using Catch::Matchers::WithinAbs;

namespace {

Eigen::VectorXd seeded_vector(Eigen::Index size, unsigned seed) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i)
    v(i) = 2.0 * ((rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
  return v;
}

ModelProblem scalar_decay_problem() {
  ModelProblem mp;
  mp.n = 1;
  mp.h = 1.0;
  mp.M = Eigen::MatrixXd::Identity(1, 1);
  mp.K = Eigen::MatrixXd::Identity(1, 1);
  mp.forcing = [](double) { return Eigen::VectorXd::Zero(1); };
  mp.u0 = Eigen::VectorXd::Ones(1);
  mp.name = "scalar";
  return mp;
}

}  // namespace

TEST_CASE("matrix-free operator matches the dense assembly", "[krylov]") {
  ButcherTable tab = radau_iia(3);
  IrkFactorization f = factorize(tab);
  ModelProblem mp = assemble_1d(7);
  const double tau = 0.4;
  FullSystem fs = assemble_full(tab, f, mp.pencil(tau));
  StageSystemOperator op(mp.M, mp.K, tau, f.Ainv);
  CHECK(op.size() == 21);
  CHECK(op.n() == 7);
  CHECK(op.stages() == 3);
  const Eigen::VectorXd v = seeded_vector(21, 5);
  CHECK((op.apply(v) - fs.A * v).cwiseAbs().maxCoeff() <= 1e-12 * fs.A.norm());
  CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(20)), std::invalid_argument);
}

TEST_CASE("preconditioner apply and apply_inverse are mutual inverses", "[krylov]") {
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);

  SECTION("tridiagonal path (1d mass/stiffness)") {
    ModelProblem mp = assemble_1d(9);
    const double tau = 0.05;
    FullSystem fs = assemble_full(tab, f, mp.pencil(tau));
    PrecondOperator pc(mp.M, mp.K, tau, f.L);
    const Eigen::VectorXd r = seeded_vector(18, 9);
    CHECK((pc.apply(r) - fs.P * r).cwiseAbs().maxCoeff() <= 1e-12 * fs.P.norm());
    const Eigen::VectorXd z = pc.apply_inverse(r);
    CHECK((fs.P * z - r).cwiseAbs().maxCoeff() <= 1e-10 * r.norm() * fs.P.norm());
    CHECK((pc.apply(pc.apply_inverse(r)) - r).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SECTION("dense path (2d stiffness is pentadiagonal)") {
    ModelProblem mp = assemble_2d_fd(3);
    const double tau = 0.1;
    FullSystem fs = assemble_full(tab, f, mp.pencil(tau));
    PrecondOperator pc(mp.M, mp.K, tau, f.L);
    const Eigen::VectorXd r = seeded_vector(18, 10);
    const Eigen::VectorXd z = pc.apply_inverse(r);
    CHECK((fs.P * z - r).cwiseAbs().maxCoeff() <= 1e-10 * r.norm() * fs.P.norm());
  }
}

TEST_CASE("preconditioner rejects non-positive stage diagonals", "[krylov]") {
  ModelProblem mp = assemble_1d(3);
  Eigen::MatrixXd L(1, 1);
  L << -2.0;
  CHECK_THROWS_AS(PrecondOperator(mp.M, mp.K, 1.0, L), std::invalid_argument);
}

TEST_CASE("gmres solves a dense SPD system to tolerance", "[krylov]") {
  const int n = 24;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 3.0 + 0.1 * i;
    if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -1.0;
  }
  const Eigen::VectorXd b = seeded_vector(n, 33);
  GmresResult r = gmres([&A](const Eigen::VectorXd& v) { return A * v; }, nullptr, b, 1e-11, n);
  CHECK(r.converged);
  CHECK(r.history.front() == 1.0);
  CHECK(r.history.back() <= 1e-11);
  CHECK(static_cast<int>(r.history.size()) == r.iterations + 1);
  CHECK(r.true_residual <= 1e-9);
  const Eigen::VectorXd direct = A.partialPivLu().solve(b);
  CHECK((r.x - direct).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("gmres edge cases", "[krylov]") {
  const Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
  auto idop = [&I3](const Eigen::VectorXd& v) { return I3 * v; };

  SECTION("identity operator converges in one iteration") {
    GmresResult r = gmres(idop, nullptr, Eigen::VectorXd::Ones(3), 1e-12, 10);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK((r.x - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SECTION("zero right-hand side") {
    GmresResult r = gmres(idop, nullptr, Eigen::VectorXd::Zero(3), 1e-12, 10);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    REQUIRE(r.history.size() == 1);
    CHECK(r.history[0] == 0.0);
    CHECK(r.x.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("exact-inverse preconditioner converges in one iteration") {
    Eigen::MatrixXd A(3, 3);
    A << 4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0;
    const Eigen::MatrixXd Ainv = A.inverse();
    GmresResult r = gmres([&A](const Eigen::VectorXd& v) { return A * v; },
                          [&Ainv](const Eigen::VectorXd& v) { return Ainv * v; },
                          seeded_vector(3, 4), 1e-12, 10);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
  }

  SECTION("iteration starvation reports non-convergence") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(12, 12);
    for (int i = 0; i < 12; ++i) A(i, i) = 1.0 + 10.0 * i;
    GmresResult r = gmres([&A](const Eigen::VectorXd& v) { return A * v; }, nullptr,
                          seeded_vector(12, 6), 1e-14, 2);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
  }

  SECTION("maxit is capped by the problem dimension") {
    GmresResult r = gmres(idop, nullptr, Eigen::VectorXd::Ones(3), 1e-30, 500);
    CHECK(r.iterations <= 3);
  }

  SECTION("argument validation") {
    CHECK_THROWS_AS(gmres(nullptr, nullptr, Eigen::VectorXd::Ones(2), 1e-10, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(gmres(idop, nullptr, Eigen::VectorXd::Ones(3), 0.0, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(gmres(idop, nullptr, Eigen::VectorXd::Ones(3), 1e-10, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("gmres history matches the recomputed residual under right preconditioning",
          "[krylov]") {
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);
  ModelProblem mp = assemble_1d(15);
  const double tau = 0.02;
  StageSystemOperator op(mp.M, mp.K, tau, f.Ainv);
  PrecondOperator pc(mp.M, mp.K, tau, f.L);
  const Eigen::VectorXd b = seeded_vector(30, 1);
  GmresResult r = gmres([&op](const Eigen::VectorXd& v) { return op.apply(v); },
                        [&pc](const Eigen::VectorXd& v) { return pc.apply_inverse(v); },
                        b, 1e-10, 30);
  CHECK(r.converged);
  CHECK_THAT(r.true_residual, WithinAbs(r.history.back(), 1e-9));
}

TEST_CASE("one scalar step reproduces the stability function", "[krylov]") {
  ModelProblem mp = scalar_decay_problem();
  for (int s : {1, 2, 3}) {
    ButcherTable tab = radau_iia(s);
    IrkFactorization f = factorize(tab);
    IrkStepResult r = irk_step(mp.u0, 0.0, 0.1, tab, f, mp);
    CHECK_THAT(r.u(0), WithinAbs(stability_function(tab, -0.1), 1e-13));
  }
}

TEST_CASE("stability function values", "[krylov]") {
  ButcherTable be = radau_iia(1);
  CHECK_THAT(stability_function(be, -0.1), WithinAbs(1.0 / 1.1, 1e-15));
  ButcherTable two = radau_iia(2);
  CHECK_THAT(stability_function(two, 0.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(stability_function(two, -0.1), WithinAbs(0.9048361934477379, 1e-14));
  // far into the left half-plane the scheme is strongly damping
  CHECK(std::abs(stability_function(two, -1e6)) <= 1e-5);
}

TEST_CASE("integrator damps the first sine mode at the discrete rate", "[krylov]") {
  // u0 is an exact eigenvector of the (M, K) pair, so the trajectory is scalar:
  // u(m tau) = R(-omega tau)^m u0 with omega the smallest pencil ratio.
  const int n = 11;
  ModelProblem mp = assemble_1d(n);
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);
  const int steps = 5;
  const double T = 0.5, tau = T / steps;
  Trajectory tr = irk_integrate(mp.u0, T, steps, tab, f, mp);
  REQUIRE(tr.states.size() == steps + 1);
  REQUIRE(tr.gmres_iterations.size() == steps);
  CHECK_THAT(tr.times.back(), WithinAbs(T, 1e-15));
  const double omega = analytic_mu_1d(n, 1.0)(0);
  const double factor = std::pow(stability_function(tab, -omega * tau), steps);
  CHECK((tr.states.back() - factor * mp.u0).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("integrator handles forcing and zero steps", "[krylov]") {
  ModelProblem mp = assemble_1d(6, [](double x, double t) { return std::sin(M_PI * x) * (1.0 + t); });
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);
  Trajectory none = irk_integrate(mp.u0, 1.0, 0, tab, f, mp);
  CHECK(none.states.size() == 1);
  CHECK(none.gmres_iterations.empty());

  // forced trajectory stays finite and differs from the unforced one
  Trajectory forced = irk_integrate(mp.u0, 0.4, 4, tab, f, mp);
  ModelProblem quiet = assemble_1d(6);
  Trajectory free_run = irk_integrate(quiet.u0, 0.4, 4, tab, f, quiet);
  CHECK(forced.states.back().allFinite());
  CHECK((forced.states.back() - free_run.states.back()).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("temporal order: two-stage error shrinks eighth-fold per halving", "[krylov]") {
  // scalar u' = -u, exact e^{-1} at T = 1; order 3 means ratio ~ 8
  ModelProblem mp = scalar_decay_problem();
  ButcherTable tab = radau_iia(2);
  IrkFactorization f = factorize(tab);
  const double exact = std::exp(-1.0);
  const double e1 = std::abs(irk_integrate(mp.u0, 1.0, 10, tab, f, mp).states.back()(0) - exact);
  const double e2 = std::abs(irk_integrate(mp.u0, 1.0, 20, tab, f, mp).states.back()(0) - exact);
  CHECK(e1 / e2 > 6.4);
  CHECK(e1 / e2 < 9.6);
}
