#pragma once

#include "hho/assembly.hpp"
#include "hho/basis.hpp"
#include "hho/mesh.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hho {

/// Closed-form solution of -Laplace(u) = f on the unit square, u = 0 on the boundary.
struct ManufacturedCase {
  std::string name;
  ScalarFunction u;
  VectorFunction grad_u;
  ScalarFunction f;
  std::string regularity;
};

/// "sine" or "bubble"; throws std::invalid_argument otherwise.
const ManufacturedCase& manufactured_case(std::string_view name);
std::vector<std::string> case_names();

/// Local interpolate of u on every element (boundary faces included).
std::vector<Eigen::VectorXd> interpolate_all(const Discretization& disc, const ScalarFunction& u);

/// ||I_h u - u_h||_{1,h}.
double energy_error(const Discretization& disc, const ScalarFunction& u, const Eigen::VectorXd& solution);
/// ||v||_{1,h} of a global vector.
double discrete_h1_norm(const Discretization& disc, const Eigen::VectorXd& values);
/// ||u - v_h||_{L2}, v_h built from the cell values.
double l2_error(const Discretization& disc, const ScalarFunction& u, const Eigen::VectorXd& solution);

/// Moments l(v) = int f v_h - a_h(I_h u, v) for every global unknown.
Eigen::VectorXd consistency_functional(const Discretization& disc, const ManufacturedCase& c);
double consistency_dual_norm(const Discretization& disc, const ManufacturedCase& c,
                             const SparseMatrix& norm_gram);

/// (Sum_T s_T(I_T u, I_T u))^{1/2}.
double stab_consistency(const Discretization& disc, const ScalarFunction& u);

/// Largest per-element eta.
double measured_eta(const PolyMesh& mesh, const Discretization& disc);

struct PoincareResult {
  double constant = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // Rayleigh quotients
};

/// sqrt(lambda_max) of M v = lambda N v by power iteration on N^{-1} M.
PoincareResult poincare_constant(const SparseMatrix& norm_gram, const SparseMatrix& mass, double tol = 1e-10,
                                 int max_iterations = 5000);
PoincareResult poincare_constant(const Discretization& disc, double tol = 1e-10, int max_iterations = 5000);

/// Least-squares slope of log(err) against log(h) over the last `points` entries.
double fit_eoc(std::span<const double> h, std::span<const double> err, std::size_t points = 3);

struct RateSeries {
  std::vector<double> h;
  std::vector<double> values;
  double eoc = 0.0;
};

RateSeries stab_consistency_rate(const MeshFamily& family, int k, const ManufacturedCase& c);

struct ProjectorRates {
  std::vector<double> h;
  std::vector<double> l2;        // ||v - pi^l v||_{L2}
  std::vector<double> trace;     // (Sum_T h_T ||v - pi^l v||^2_{dT})^{1/2}
  std::vector<double> elliptic;  // (Sum_T h_T ||grad(v - pi_el^{k+1} v)||^2_{dT})^{1/2}, with k = l
  double eoc_l2 = 0.0;
  double eoc_trace = 0.0;
  double eoc_elliptic = 0.0;
};

ProjectorRates projector_rate_suite(const MeshFamily& family, int ell, const ManufacturedCase& c);

struct StudyOptions {
  bool deterministic = false;
  SolverOptions solver;
  bool condensation = true;
  double poincare_tol = 1e-10;
  int poincare_max_iterations = 5000;
};

struct StudyRow {
  int level = 0;
  double h = 0.0;
  std::size_t n_dofs = 0;
  double energy_err = 0.0;
  double eoc = 0.0;  // against the previous row, NaN on the first
  double consist_dual = 0.0;
  double stab_consist = 0.0;
  double l2_err = 0.0;
  double cp = 0.0;
  bool cp_converged = false;
  double eta = 0.0;
  double seconds = 0.0;
  double residual = 0.0;
  double solution_norm = 0.0;  // ||u_h||_{1,h}
  double f_norm = 0.0;         // ||f||_{L2}
  // Static condensation (k >= 1): relative gap and reduced size.
  double condensation_gap = 0.0;
  std::size_t reduced_dofs = 0;
};

struct ConvergenceReport {
  std::string family;
  int k = 0;
  std::string case_name;
  std::vector<StudyRow> rows;
  double eoc_energy = 0.0;
  double eoc_consist = 0.0;
  double eoc_stab = 0.0;
  double eoc_l2 = 0.0;
};

ConvergenceReport run_study(const MeshFamily& family, int k, const ManufacturedCase& c,
                            const StudyOptions& options = {});

inline constexpr std::string_view csv_header =
    "family,k,h,n_dofs,energy_err,eoc,consist_dual,stab_consist,CP,eta,seconds";

/// Stable CSV; `deterministic` writes 0 for the timings.
std::string to_csv(const ConvergenceReport& report, bool deterministic = false);
std::string to_markdown(const ConvergenceReport& report, bool deterministic = false);

/// Random-polygon corpus: triangles, jittered quadrilaterals and pentagons
/// (squares with a hanging node on one side), each as a one-element mesh
/// embedded in a small patch.
std::vector<PolyMesh> polygon_corpus(std::size_t count, std::uint64_t seed);

struct ExactnessResult {
  double reconstruction_error = 0.0;  // relative, worst case
  double idempotency_error = 0.0;
  double st2_ratio = 0.0;  // ||S I w|| / (||S|| ||I w||), worst case
  int rank_failures = 0;
};

/// Reconstructs random v in P^{k+1}(T) and checks ST2 on every element of the mesh.
ExactnessResult polynomial_exactness(const PolyMesh& mesh, int k, std::mt19937_64& rng, int samples = 3);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Property suite on a single mesh: polynomial consistency, ST1, ST2, magic
/// formula, CR equality (triangles only) and the Poincare iteration.
std::vector<CheckResult> run_checks(const PolyMesh& mesh, int k, std::uint64_t seed = 1);

/// Relative Frobenius gap between the HHO k = 0 and CR stiffness matrices.
double cr_hho_gap(const PolyMesh& mesh);

}  // namespace hho
