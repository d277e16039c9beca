// Command-line front end: tableaux, pencil eigenvalues, preconditioned-system
// spectra, eigenvalue branches, reduction-vs-oracle verification, GMRES runs,
// time integration, and the spectral convergence bound. All emitters are
// deterministic: identical arguments (and seed) produce byte-identical output.
//
// Exit codes: 0 success, 1 numerical-tolerance failure (verify) or runtime
// error, 2 usage error.

#include "stagekron/stagekron.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>

namespace {

using namespace stagekron;

// 17 significant digits: enough to round-trip any double.
std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Stream selector for --out: file when given, stdout otherwise.
struct OutStream {
  explicit OutStream(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& get() { return file.is_open() ? file : std::cout; }
  std::ofstream file;
};

ModelProblem make_problem(const std::string& name, int n) {
  if (name == "laplace1d") return assemble_1d(n);
  if (name == "laplace2d") return assemble_2d_fd(n);  // n = interior nodes per dimension
  throw std::runtime_error("unknown problem: " + name);
}

void print_matrix(std::ostream& os, const std::string& label, const Eigen::MatrixXd& m) {
  os << label << "=\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << (j ? "," : "") << fmt17(m(i, j));
    os << "\n";
  }
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// Deterministic uniform[-1, 1] draws independent of library distributions.
Eigen::VectorXd random_vector(Eigen::Index size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i)
    v(i) = 2.0 * ((rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
  return v;
}

int run_tableau(int stages, bool as_json) {
  ButcherTable tab = radau_iia(stages);
  IrkFactorization f = factorize(tab);
  const double frob = f.Uhat.norm();
  if (as_json) {
    nlohmann::ordered_json j;
    j["stages"] = stages;
    j["c"] = vector_json(tab.c);
    j["b"] = vector_json(tab.b);
    j["A"] = matrix_json(tab.A);
    j["L"] = matrix_json(f.L);
    j["Uhat"] = matrix_json(f.Uhat);
    j["Uhat_norm2"] = f.uhat_norm2;
    j["Uhat_normF"] = frob;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "stages=" << stages << "\n";
    std::cout << "c=";
    for (int i = 0; i < stages; ++i) std::cout << (i ? "," : "") << fmt17(tab.c(i));
    std::cout << "\nb=";
    for (int i = 0; i < stages; ++i) std::cout << (i ? "," : "") << fmt17(tab.b(i));
    std::cout << "\n";
    print_matrix(std::cout, "A", tab.A);
    print_matrix(std::cout, "L", f.L);
    print_matrix(std::cout, "Uhat", f.Uhat);
    std::cout << "Uhat_norm2=" << fmt17(f.uhat_norm2) << "\n";
    std::cout << "Uhat_normF=" << fmt17(frob) << "\n";
  }
  return 0;
}

int run_pencil(const std::string& problem, int n, double tau, const std::string& out) {
  ModelProblem mp = make_problem(problem, n);
  PencilEigen pe = eig_pencil(mp.pencil(tau));
  OutStream os(out);
  os.get() << "k,mu\n";
  for (Eigen::Index k = 0; k < pe.mu.size(); ++k)
    os.get() << (k + 1) << "," << fmt17(pe.mu(k)) << "\n";
  return 0;
}

int run_spectrum(const std::string& problem, int n, double tau, int stages,
                 const std::string& method, const std::string& out) {
  ModelProblem mp = make_problem(problem, n);
  ButcherTable tab = radau_iia(stages);
  IrkFactorization f = factorize(tab);
  PencilEigen pe = eig_pencil(mp.pencil(tau));
  SpectrumMethod sm = method == "pencil" ? SpectrumMethod::pencil
                    : method == "charpoly" ? SpectrumMethod::charpoly
                                           : SpectrumMethod::matrix;
  SpectrumResult sr = full_spectrum(f, pe, sm, tab.name, mp.name);
  OutStream os(out);
  os.get() << "k,mu,re,im,branch\n";
  for (std::size_t k = 0; k < sr.modes.size(); ++k) {
    const ModeSpectrum& m = sr.modes[k];
    for (std::size_t j = 0; j < m.lambdas.size(); ++j)
      os.get() << (k + 1) << "," << fmt17(m.mu) << "," << fmt17(m.lambdas[j].real()) << ","
               << fmt17(m.lambdas[j].imag()) << "," << (m.branch[j] + 1) << "\n";
  }
  return 0;
}

int run_branches(int stages, double mu_min, double mu_max, int grid, const std::string& out) {
  if (mu_max <= mu_min) throw std::runtime_error("branches: require mu-max > mu-min");
  ButcherTable tab = radau_iia(stages);
  IrkFactorization f = factorize(tab);
  std::vector<double> mus(grid);
  const double a = std::log(mu_min), b = std::log(mu_max);
  for (int i = 0; i < grid; ++i) mus[i] = std::exp(a + (b - a) * i / (grid - 1));
  BranchSet bs = track_branches(f, mus);
  OutStream os(out);
  os.get() << "k,mu,re,im,branch\n";
  for (int i = 0; i < grid; ++i)
    for (int br = 0; br < stages; ++br) {
      const BranchPoint& p = bs.branches[br][i];
      os.get() << (i + 1) << "," << fmt17(p.mu) << "," << fmt17(p.lambda.real()) << ","
               << fmt17(p.lambda.imag()) << "," << (br + 1) << "\n";
    }
  for (const BranchPoint& mp : bs.merges)
    std::cerr << "merge mu=" << fmt17(mp.mu) << " lambda=" << fmt17(mp.lambda.real()) << "\n";
  return 0;
}

int run_verify(const std::string& problem, int n, double tau, int stages) {
  ModelProblem mp = make_problem(problem, n);
  ButcherTable tab = radau_iia(stages);
  IrkFactorization f = factorize(tab);
  PencilEigen pe = eig_pencil(mp.pencil(tau));
  FullSystem fs = assemble_full(tab, f, mp.pencil(tau));
  OracleSpectrum oracle = oracle_spectrum(fs);

  double worst = 0.0;
  for (SpectrumMethod m :
       {SpectrumMethod::matrix, SpectrumMethod::pencil, SpectrumMethod::charpoly}) {
    const double d = match_spectra(full_spectrum(f, pe, m).all_values(), oracle.spectrum);
    std::cout << to_string(m) << "_mismatch=" << fmt17(d) << "\n";
    worst = std::max(worst, d);
  }
  int at_one = 0;
  for (const Complex& v : oracle.spectrum.values)
    if (std::abs(v - Complex(1.0, 0.0)) <= 1e-9) ++at_one;
  std::cout << "eigs_at_one=" << at_one << "\n";
  std::cout << "max_mismatch=" << fmt17(worst) << "\n";
  return (worst <= 1e-8 && at_one >= mp.n) ? 0 : 1;
}

int run_gmres(const std::string& problem, int n, double tau, int stages, double tol, int maxit,
              const std::string& precond, std::uint64_t seed) {
  ModelProblem mp = make_problem(problem, n);
  ButcherTable tab = radau_iia(stages);
  IrkFactorization f = factorize(tab);
  StageSystemOperator op(mp.M, mp.K, tau, f.Ainv);
  std::unique_ptr<PrecondOperator> pc;
  if (precond == "on") pc = std::make_unique<PrecondOperator>(mp.M, mp.K, tau, f.L);

  const Eigen::Index N = op.size();
  Eigen::VectorXd b = random_vector(N, seed);
  if (maxit <= 0) maxit = static_cast<int>(N);
  ApplyFn prec;
  if (pc) prec = [&](const Eigen::VectorXd& v) { return pc->apply_inverse(v); };
  GmresResult gr = gmres([&](const Eigen::VectorXd& v) { return op.apply(v); }, prec, b, tol, maxit);

  nlohmann::ordered_json j;
  j["iterations"] = gr.iterations;
  j["history"] = gr.history;
  j["converged"] = gr.converged;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_integrate(const std::string& problem, int n, int stages, double T, int steps, double tol,
                  const std::string& out) {
  ModelProblem mp = make_problem(problem, n);
  ButcherTable tab = radau_iia(stages);
  IrkFactorization f = factorize(tab);
  IrkStepConfig cfg;
  cfg.gmres_tol = tol;
  Trajectory tr = irk_integrate(mp.u0, T, steps, tab, f, mp, cfg);
  OutStream os(out);
  os.get() << "step,t,iterations";
  for (int i = 1; i <= mp.n; ++i) os.get() << ",u" << i;
  os.get() << "\n";
  for (std::size_t m = 0; m < tr.states.size(); ++m) {
    os.get() << m << "," << fmt17(tr.times[m]) << ","
             << (m == 0 ? 0 : tr.gmres_iterations[m - 1]);
    for (int i = 0; i < mp.n; ++i) os.get() << "," << fmt17(tr.states[m](i));
    os.get() << "\n";
  }
  return 0;
}

int run_bound(const std::string& problem, int n, double tau, int stages, int L,
              const std::string& out) {
  ModelProblem mp = make_problem(problem, n);
  ButcherTable tab = radau_iia(stages);
  IrkFactorization f = factorize(tab);
  PencilEigen pe = eig_pencil(mp.pencil(tau));
  SpectrumResult sr = full_spectrum(f, pe, SpectrumMethod::matrix, tab.name, mp.name);
  BoundCurve bc = bound_curve(sr, pe, L);
  OutStream os(out);
  os.get() << "kappa_S=" << fmt17(bc.kappa) << "\n";
  os.get() << "ell,minmax,bound\n";
  for (int ell = 0; ell <= L; ++ell)
    os.get() << ell << "," << fmt17(bc.minmax[ell]) << "," << fmt17(bc.bound[ell]) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stage-coupled implicit Runge-Kutta systems: spectra, preconditioning, bounds"};
  app.require_subcommand(1);

  std::string problem = "laplace1d", method = "matrix", precond = "on", out;
  int n = 10, stages = 2, grid = 200, maxit = 0, steps = 10, L = 10;
  double tau = 1.0, tol = 1e-10, mu_min = 1e-2, mu_max = 1e3, T = 1.0;
  bool as_json = false;
  std::uint64_t seed = 1;

  auto add_problem = [&](CLI::App* cmd) {
    cmd->add_option("--problem", problem, "spatial problem")
        ->check(CLI::IsMember({"laplace1d", "laplace2d"}));
    cmd->add_option("--n", n, "interior nodes (per dimension for laplace2d)")
        ->check(CLI::PositiveNumber);
  };
  auto add_stages = [&](CLI::App* cmd, bool required = false) {
    CLI::Option* o = cmd->add_option("--stages", stages, "stage count")->check(CLI::Range(1, 10));
    if (required) o->required();
  };
  auto add_tau = [&](CLI::App* cmd) {
    cmd->add_option("--tau", tau, "timestep")->check(CLI::PositiveNumber);
  };
  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "output file (default stdout)");
  };

  CLI::App* c_tab = app.add_subcommand("tableau", "RadauIIA tableau and its L, Uhat factors");
  add_stages(c_tab, true);
  c_tab->add_flag("--json", as_json, "emit JSON instead of text");

  CLI::App* c_pen = app.add_subcommand("pencil", "generalized eigenvalues of the SPD pencil");
  add_problem(c_pen);
  add_tau(c_pen);
  add_out(c_pen);

  CLI::App* c_spec = app.add_subcommand("spectrum", "eigenvalues of the preconditioned system");
  add_problem(c_spec);
  add_tau(c_spec);
  add_stages(c_spec);
  c_spec->add_option("--method", method, "per-mode reduction")
      ->check(CLI::IsMember({"matrix", "pencil", "charpoly"}));
  add_out(c_spec);

  CLI::App* c_br = app.add_subcommand("branches", "eigenvalue branches over a mu-grid");
  add_stages(c_br, true);
  c_br->add_option("--mu-min", mu_min, "grid start")->check(CLI::PositiveNumber);
  c_br->add_option("--mu-max", mu_max, "grid end")->check(CLI::PositiveNumber);
  c_br->add_option("--grid", grid, "number of log-spaced grid points")
      ->check(CLI::Range(2, 1000000));
  add_out(c_br);

  CLI::App* c_ver = app.add_subcommand("verify", "per-mode reductions vs the dense oracle");
  add_problem(c_ver);
  add_tau(c_ver);
  add_stages(c_ver);

  CLI::App* c_gm = app.add_subcommand("gmres", "GMRES on the stage system, random right-hand side");
  add_problem(c_gm);
  add_tau(c_gm);
  add_stages(c_gm);
  c_gm->add_option("--tol", tol, "relative residual tolerance")->check(CLI::PositiveNumber);
  c_gm->add_option("--maxit", maxit, "max iterations (default n*s)");
  c_gm->add_option("--precond", precond, "preconditioning")->check(CLI::IsMember({"on", "off"}));
  c_gm->add_option("--seed", seed, "seed for the right-hand side");

  CLI::App* c_int = app.add_subcommand("integrate", "implicit Runge-Kutta time integration");
  add_problem(c_int);
  add_stages(c_int);
  c_int->add_option("--T", T, "final time")->check(CLI::PositiveNumber);
  c_int->add_option("--steps", steps, "number of steps")->check(CLI::PositiveNumber);
  c_int->add_option("--tol", tol, "stage-solver tolerance")->check(CLI::PositiveNumber);
  add_out(c_int);

  CLI::App* c_bnd = app.add_subcommand("bound", "spectral GMRES bound kappa(S) * minmax");
  add_problem(c_bnd);
  add_tau(c_bnd);
  add_stages(c_bnd);
  c_bnd->add_option("--L", L, "maximum polynomial degree")->check(CLI::NonNegativeNumber);
  add_out(c_bnd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(c_tab)) return run_tableau(stages, as_json);
    if (app.got_subcommand(c_pen)) return run_pencil(problem, n, tau, out);
    if (app.got_subcommand(c_spec)) return run_spectrum(problem, n, tau, stages, method, out);
    if (app.got_subcommand(c_br)) return run_branches(stages, mu_min, mu_max, grid, out);
    if (app.got_subcommand(c_ver)) return run_verify(problem, n, tau, stages);
    if (app.got_subcommand(c_gm)) return run_gmres(problem, n, tau, stages, tol, maxit, precond, seed);
    if (app.got_subcommand(c_int)) return run_integrate(problem, n, stages, T, steps, tol, out);
    if (app.got_subcommand(c_bnd)) return run_bound(problem, n, tau, stages, L, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
