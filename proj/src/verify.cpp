#include "hho/verify.hpp"

#include "hho/classics.hpp"
#include "hho/errors.hpp"
#include "hho/parallel.hpp"
#include "hho/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hho {

namespace {

using Eigen::Index;
constexpr double pi = std::numbers::pi;

std::vector<ManufacturedCase> make_cases() {
  std::vector<ManufacturedCase> cases;
  cases.push_back({"sine",
                   [](const Point& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); },
                   [](const Point& x) {
                     return Point(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                                  pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
                   },
                   [](const Point& x) { return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()); },
                   "analytic"});
  cases.push_back({"bubble",
                   [](const Point& x) { return x.x() * (1.0 - x.x()) * x.y() * (1.0 - x.y()); },
                   [](const Point& x) {
                     return Point((1.0 - 2.0 * x.x()) * x.y() * (1.0 - x.y()),
                                  x.x() * (1.0 - x.x()) * (1.0 - 2.0 * x.y()));
                   },
                   [](const Point& x) { return 2.0 * (x.x() * (1.0 - x.x()) + x.y() * (1.0 - x.y())); },
                   "polynomial of degree 4"});
  return cases;
}

const std::vector<ManufacturedCase>& registry() {
  static const std::vector<ManufacturedCase> cases = make_cases();
  return cases;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double operator_norm(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Sum over all elements of a per-element scalar computed in parallel, reduced in element order.
template <class Fn>
double element_sum(std::size_t n, Fn&& fn) {
  std::vector<double> parts(n, 0.0);
  parallel_for(n, [&](std::size_t e, unsigned) { parts[e] = fn(e); });
  double s = 0.0;
  for (double p : parts) s += p;
  return s;
}

PolyMesh apply_affine(const PolyMesh& m, const Eigen::Matrix2d& A, const Point& b) {
  std::vector<Point> v;
  v.reserve(m.num_vertices());
  for (const Point& p : m.vertices()) v.push_back(A * p + b);
  std::vector<std::vector<std::size_t>> loops;
  for (const Element& el : m.elements()) loops.push_back(el.vertices);
  return PolyMesh::from_polygons(std::move(v), std::move(loops));
}

}  // namespace

const ManufacturedCase& manufactured_case(std::string_view name) {
  for (const auto& c : registry())
    if (c.name == name) return c;
  throw std::invalid_argument("unknown case '" + std::string(name) + "'");
}

std::vector<std::string> case_names() {
  std::vector<std::string> names;
  for (const auto& c : registry()) names.push_back(c.name);
  return names;
}

std::vector<Eigen::VectorXd> interpolate_all(const Discretization& disc, const ScalarFunction& u) {
  std::vector<Eigen::VectorXd> out(disc.mesh->num_elements());
  parallel_for(out.size(), [&](std::size_t e, unsigned) { out[e] = interpolate(*disc.mesh, e, disc.k, u).values; });
  return out;
}

double energy_error(const Discretization& disc, const ScalarFunction& u, const Eigen::VectorXd& solution) {
  const GlobalHhoVector uh{&disc.dofs, solution};
  return std::sqrt(element_sum(disc.mesh->num_elements(), [&](std::size_t e) {
    const Eigen::VectorXd err = interpolate(*disc.mesh, e, disc.k, u).values - uh.gather(*disc.mesh, e);
    return err.dot(disc.ops[e].norm_gram * err);
  }));
}

double discrete_h1_norm(const Discretization& disc, const Eigen::VectorXd& values) {
  const GlobalHhoVector v{&disc.dofs, values};
  return std::sqrt(element_sum(disc.mesh->num_elements(), [&](std::size_t e) {
    const Eigen::VectorXd loc = v.gather(*disc.mesh, e);
    return loc.dot(disc.ops[e].norm_gram * loc);
  }));
}

double l2_error(const Discretization& disc, const ScalarFunction& u, const Eigen::VectorXd& solution) {
  const GlobalHhoVector uh{&disc.dofs, solution};
  return std::sqrt(element_sum(disc.mesh->num_elements(), [&](std::size_t e) {
    const Eigen::VectorXd loc = uh.gather(*disc.mesh, e);
    const QuadRule q = cell_quadrature(*disc.mesh, e, smooth_order(disc.k));
    return q.integrate([&](const Point& x) {
      const double d = u(x) - cell_value(disc.ops[e], loc, x);
      return d * d;
    });
  }));
}

Eigen::VectorXd consistency_functional(const Discretization& disc, const ManufacturedCase& c) {
  const PolyMesh& mesh = *disc.mesh;
  Eigen::VectorXd ell = assemble_load(disc, c.f);
  const auto iu = interpolate_all(disc, c.u);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Eigen::VectorXd a = disc.ops[e].stiffness * iu[e];
    const auto map = disc.dofs.local_to_global(mesh, e);
    for (std::size_t i = 0; i < map.size(); ++i)
      if (map[i] != npos) ell[Index(map[i])] -= a[Index(i)];
  }
  return ell;
}

double consistency_dual_norm(const Discretization& disc, const ManufacturedCase& c, const SparseMatrix& norm_gram) {
  return riesz_dual_norm(norm_gram, consistency_functional(disc, c));
}

double stab_consistency(const Discretization& disc, const ScalarFunction& u) {
  return std::sqrt(element_sum(disc.mesh->num_elements(), [&](std::size_t e) {
    const Eigen::VectorXd iu = interpolate(*disc.mesh, e, disc.k, u).values;
    return std::max(0.0, iu.dot(disc.ops[e].stabilization * iu));
  }));
}

double measured_eta(const PolyMesh& mesh, const Discretization& disc) {
  std::vector<double> eta(mesh.num_elements(), 0.0);
  parallel_for(mesh.num_elements(), [&](std::size_t e, unsigned) { eta[e] = eta_bounds(mesh, disc.ops[e]).eta(); });
  return eta.empty() ? 0.0 : *std::max_element(eta.begin(), eta.end());
}

PoincareResult poincare_constant(const SparseMatrix& norm_gram, const SparseMatrix& mass, double tol,
                                 int max_iterations) {
  PoincareResult res;
  const Index n = norm_gram.rows();
  if (n == 0) {
    res.converged = true;
    return res;
  }
  Eigen::SimplicialLLT<SparseMatrix> llt(norm_gram);
  if (llt.info() != Eigen::Success) throw NumericalError("Poincare: norm Gram is not positive definite");
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = dist(rng);
  double lambda = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd y = llt.solve(mass * x);
    const double ny = std::sqrt(std::max(0.0, y.dot(norm_gram * y)));
    if (!(ny > 0.0)) throw NumericalError("Poincare: iterate collapsed to the kernel of the mass matrix");
    x = y / ny;
    const double next = x.dot(mass * x);  // Rayleigh quotient, x is N-normalized
    res.history.push_back(next);
    res.iterations = it;
    if (it > 1 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      res.converged = true;
      break;
    }
    lambda = next;
  }
  res.constant = std::sqrt(std::max(0.0, lambda));
  return res;
}

PoincareResult poincare_constant(const Discretization& disc, double tol, int max_iterations) {
  return poincare_constant(assemble_form(disc, LocalForm::norm_gram), assemble_form(disc, LocalForm::cell_mass), tol,
                           max_iterations);
}

double fit_eoc(std::span<const double> h, std::span<const double> err, std::size_t points) {
  if (h.size() != err.size()) throw std::invalid_argument("fit_eoc: size mismatch");
  const std::size_t n = std::min(points, h.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t first = h.size() - n;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = first; i < h.size(); ++i) {
    mx += std::log(h[i]);
    my += std::log(err[i]);
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = first; i < h.size(); ++i) {
    const double dx = std::log(h[i]) - mx;
    sxy += dx * (std::log(err[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

RateSeries stab_consistency_rate(const MeshFamily& family, int k, const ManufacturedCase& c) {
  RateSeries s;
  for (const PolyMesh& mesh : family.meshes) {
    const Discretization disc = discretize(mesh, k);
    s.h.push_back(mesh.meshsize());
    s.values.push_back(stab_consistency(disc, c.u));
  }
  s.eoc = fit_eoc(s.h, s.values);
  return s;
}

ProjectorRates projector_rate_suite(const MeshFamily& family, int ell, const ManufacturedCase& c) {
  ProjectorRates r;
  const int order = 2 * ell + 8;
  for (const PolyMesh& mesh : family.meshes) {
    std::vector<std::array<double, 3>> parts(mesh.num_elements());
    parallel_for(mesh.num_elements(), [&](std::size_t e, unsigned) {
      const Element& el = mesh.element(e);
      const CellBasis basis(mesh, e, ell);
      const Eigen::VectorXd pv = l2_project_cell(mesh, e, basis, c.u, order);
      const Reconstruction rec = build_reconstruction(mesh, e, ell);
      const Eigen::VectorXd pel = rec.matrix * interpolate(mesh, e, ell, c.u, order).values;
      auto& p = parts[e];
      p[0] = cell_quadrature(mesh, e, order).integrate([&](const Point& x) {
        const double d = c.u(x) - basis.evaluate(pv, x);
        return d * d;
      });
      p[1] = p[2] = 0.0;
      for (const ElementFace& ef : el.faces) {
        const QuadRule q = face_quadrature(mesh, ef.face, order);
        p[1] += el.diameter * q.integrate([&](const Point& x) {
          const double d = c.u(x) - basis.evaluate(pv, x);
          return d * d;
        });
        p[2] += el.diameter * q.integrate([&](const Point& x) {
          return (c.grad_u(x) - rec.basis.evaluate_gradient(pel, x)).squaredNorm();
        });
      }
    });
    double s[3] = {0.0, 0.0, 0.0};
    for (const auto& p : parts)
      for (int i = 0; i < 3; ++i) s[i] += p[std::size_t(i)];
    r.h.push_back(mesh.meshsize());
    r.l2.push_back(std::sqrt(s[0]));
    r.trace.push_back(std::sqrt(s[1]));
    r.elliptic.push_back(std::sqrt(s[2]));
  }
  r.eoc_l2 = fit_eoc(r.h, r.l2);
  r.eoc_trace = fit_eoc(r.h, r.trace);
  r.eoc_elliptic = fit_eoc(r.h, r.elliptic);
  return r;
}

ConvergenceReport run_study(const MeshFamily& family, int k, const ManufacturedCase& c, const StudyOptions& options) {
  ConvergenceReport rep;
  rep.family = to_string(family.tag);
  rep.k = k;
  rep.case_name = c.name;
  const AssemblyOptions aopt{options.deterministic};
  for (std::size_t level = 0; level < family.meshes.size(); ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    const PolyMesh& mesh = family.meshes[level];
    StudyRow row;
    row.level = level < family.levels.size() ? family.levels[level] : int(level);
    row.h = mesh.meshsize();

    const Discretization disc = discretize(mesh, k);
    const SparseSpdSystem sys = assemble(disc, c.f, aopt);
    const SolveReport sol = solve(sys, options.solver);
    const SparseMatrix N = assemble_form(disc, LocalForm::norm_gram, aopt);
    const SparseMatrix M = assemble_form(disc, LocalForm::cell_mass, aopt);

    row.n_dofs = sys.dofs.num_dofs;
    row.residual = sol.relative_residual;
    row.energy_err = energy_error(disc, c.u, sol.solution);
    row.consist_dual = riesz_dual_norm(N, consistency_functional(disc, c));
    row.stab_consist = stab_consistency(disc, c.u);
    row.l2_err = l2_error(disc, c.u, sol.solution);
    row.eta = measured_eta(mesh, disc);
    const PoincareResult cp = poincare_constant(N, M, options.poincare_tol, options.poincare_max_iterations);
    row.cp = cp.constant;
    row.cp_converged = cp.converged;
    row.solution_norm = std::sqrt(std::max(0.0, sol.solution.dot(N * sol.solution)));
    row.f_norm = std::sqrt(element_sum(mesh.num_elements(), [&](std::size_t e) {
      return cell_quadrature(mesh, e, smooth_order(k)).integrate([&](const Point& x) { return c.f(x) * c.f(x); });
    }));
    if (options.condensation && k >= 1) {
      const StaticCondensation sc = static_condense(sys);
      const SolveReport red = solve(sc.reduced, sc.reduced_rhs, options.solver);
      const Eigen::VectorXd full = sc.recover(red.solution);
      const double nx = sol.solution.norm();
      row.condensation_gap = nx > 0.0 ? (full - sol.solution).norm() / nx : (full - sol.solution).norm();
      row.reduced_dofs = std::size_t(sc.reduced.rows());
    }
    row.eoc = rep.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : std::log(row.energy_err / rep.rows.back().energy_err) /
                                     std::log(row.h / rep.rows.back().h);
    row.seconds = seconds_since(t0);
    rep.rows.push_back(row);
  }
  std::vector<double> h, e, cd, st, l2;
  for (const StudyRow& r : rep.rows) {
    h.push_back(r.h);
    e.push_back(r.energy_err);
    cd.push_back(r.consist_dual);
    st.push_back(r.stab_consist);
    l2.push_back(r.l2_err);
  }
  if (rep.rows.size() >= 3) {
    rep.eoc_energy = fit_eoc(h, e);
    rep.eoc_consist = fit_eoc(h, cd);
    rep.eoc_stab = fit_eoc(h, st);
    rep.eoc_l2 = fit_eoc(h, l2);
  } else {
    rep.eoc_energy = rep.eoc_consist = rep.eoc_stab = rep.eoc_l2 = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

std::vector<std::vector<std::string>> table(const ConvergenceReport& report, bool deterministic) {
  std::vector<std::vector<std::string>> rows;
  for (const StudyRow& r : report.rows) {
    char eoc[32] = "";
    if (!std::isnan(r.eoc)) std::snprintf(eoc, sizeof eoc, "%.4f", r.eoc);
    rows.push_back({report.family, std::to_string(report.k), num(r.h), std::to_string(r.n_dofs), num(r.energy_err),
                    eoc, num(r.consist_dual), num(r.stab_consist), num(r.cp), num(r.eta),
                    deterministic ? "0" : num(r.seconds)});
  }
  return rows;
}

}  // namespace

std::string to_csv(const ConvergenceReport& report, bool deterministic) {
  std::ostringstream out;
  out << csv_header << '\n';
  for (const auto& row : table(report, deterministic)) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

std::string to_markdown(const ConvergenceReport& report, bool deterministic) {
  std::ostringstream out;
  out << "## " << report.family << ", k = " << report.k << ", case " << report.case_name << "\n\n|";
  std::string_view header = csv_header;
  std::size_t columns = 0;
  while (!header.empty()) {
    const auto comma = header.find(',');
    out << ' ' << header.substr(0, comma) << " |";
    ++columns;
    header = comma == std::string_view::npos ? std::string_view{} : header.substr(comma + 1);
  }
  out << "\n|";
  for (std::size_t i = 0; i < columns; ++i) out << " --- |";
  out << '\n';
  for (const auto& row : table(report, deterministic)) {
    out << '|';
    for (const auto& cell : row) out << ' ' << cell << " |";
    out << '\n';
  }
  out << "\nFitted EOC over the finest three meshes: energy " << num(report.eoc_energy) << ", consistency "
      << num(report.eoc_consist) << ", stabilization " << num(report.eoc_stab) << ".\n";
  return out.str();
}

std::vector<PolyMesh> polygon_corpus(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<PolyMesh> corpus;
  auto random_affine = [&]() {
    Eigen::Matrix2d A;
    // Rotation times a moderate stretch and shear keeps the cells well shaped.
    const double t = 2.0 * pi * u01(rng);
    Eigen::Matrix2d R;
    R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    Eigen::Matrix2d D;
    D << 0.5 + u01(rng), 0.4 * (u01(rng) - 0.5), 0.0, 0.5 + u01(rng);
    A = std::pow(10.0, -2.0 * u01(rng)) * R * D;
    return A;
  };
  while (corpus.size() < count) {
    const Eigen::Matrix2d A = random_affine();
    const Point b(u01(rng) - 0.5, u01(rng) - 0.5);
    switch (corpus.size() % 4) {
      case 0: {  // triangle
        std::vector<Point> v{{0.0, 0.0}, {1.0, 0.0}, {0.2 + 0.6 * u01(rng), 0.3 + 0.7 * u01(rng)}};
        corpus.push_back(apply_affine(PolyMesh::from_polygons(v, {{0, 1, 2}}), A, b));
        break;
      }
      case 1: {  // jittered quadrilateral
        std::vector<Point> v{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
        for (Point& p : v) p += 0.2 * Point(u01(rng) - 0.5, u01(rng) - 0.5);
        corpus.push_back(apply_affine(PolyMesh::from_polygons(v, {{0, 1, 2, 3}}), A, b));
        break;
      }
      case 2: {  // convex pentagon on a perturbed circle
        std::vector<Point> v;
        for (int i = 0; i < 5; ++i) {
          const double t = 2.0 * pi * (i + 0.3 * (u01(rng) - 0.5)) / 5.0;
          v.emplace_back(std::cos(t), std::sin(t));
        }
        corpus.push_back(apply_affine(PolyMesh::from_polygons(v, {{0, 1, 2, 3, 4}}), A, b));
        break;
      }
      default: {  // squares next to a refined cell: pentagons with a hanging node
        const PolyMesh base = generate(MeshKind::cartesian, 2);
        const std::size_t marked[] = {std::size_t(rng() % 4)};
        corpus.push_back(apply_affine(refine_nonconforming(base, marked), A, b));
        break;
      }
    }
  }
  return corpus;
}

ExactnessResult polynomial_exactness(const PolyMesh& mesh, int k, std::mt19937_64& rng, int samples) {
  ExactnessResult res;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    LocalOperators ops;
    try {
      ops = build_local_operators(mesh, e, k);
    } catch (const NumericalError&) {
      ++res.rank_failures;
      continue;
    }
    const Element& el = mesh.element(e);
    const QuadRule q = cell_quadrature(mesh, e, 2 * (k + 1));
    // When s_T vanishes identically (k = 0 on triangles) its computed norm is
    // pure rounding; floor it at the stiffness scale so the ratio stays meaningful.
    const double snorm = std::max(operator_norm(ops.stabilization), 1e-14 * operator_norm(ops.stiffness));
    for (int s = 0; s < samples; ++s) {
      // Random polynomial in physical coordinates around an off-centre point.
      const Point x0 = el.centroid + el.diameter * Point(gauss(rng), gauss(rng));
      std::vector<std::array<double, 3>> terms;
      for (int d = 0; d <= k + 1; ++d)
        for (int j = 0; j <= d; ++j) terms.push_back({double(d - j), double(j), gauss(rng)});
      const ScalarFunction v = [terms, x0, h = el.diameter](const Point& x) {
        const Point y = (x - x0) / h;
        double r = 0.0;
        for (const auto& t : terms) r += t[2] * std::pow(y.x(), t[0]) * std::pow(y.y(), t[1]);
        return r;
      };
      const Eigen::VectorXd iv = interpolate(mesh, e, k, v, 2 * (k + 1)).values;
      const Eigen::VectorXd p = ops.reconstruction.matrix * iv;
      double err = 0.0, ref = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double d = ops.reconstruction.basis.evaluate(p, q.points[i]) - v(q.points[i]);
        err += q.weights[i] * d * d;
        ref += q.weights[i] * v(q.points[i]) * v(q.points[i]);
      }
      res.reconstruction_error = std::max(res.reconstruction_error, std::sqrt(err / ref));

      const double iv_norm = iv.norm();
      if (snorm > 0.0 && iv_norm > 0.0)
        res.st2_ratio = std::max(res.st2_ratio, (ops.stabilization * iv).norm() / (snorm * iv_norm));

      // Idempotency of P I on its own range, starting from a smooth function.
      const ScalarFunction smooth = [&](const Point& x) {
        return std::sin(x.x() / el.diameter + 0.3) * std::exp((x.y() - el.centroid.y()) / el.diameter);
      };
      const Eigen::VectorXd first = elliptic_project(mesh, ops, smooth, smooth_order(k + 2));
      const ScalarFunction w = [&](const Point& x) { return ops.reconstruction.basis.evaluate(first, x); };
      const Eigen::VectorXd second = ops.reconstruction.matrix * interpolate(mesh, e, k, w, 2 * (k + 1)).values;
      const double fn = first.norm();
      res.idempotency_error = std::max(res.idempotency_error, (second - first).norm() / (fn > 0.0 ? fn : 1.0));
    }
  }
  return res;
}

double cr_hho_gap(const PolyMesh& mesh) {
  const Discretization disc = discretize(mesh, 0);
  const SparseMatrix A = assemble_form(disc, LocalForm::stiffness, {true});
  const CrSystem cr = cr_assemble(mesh, [](const Point&) { return 0.0; });
  const double ref = cr.stiffness.norm();
  const double gap = SparseMatrix(A - cr.stiffness).norm();
  return ref > 0.0 ? gap / ref : gap;
}

std::vector<CheckResult> run_checks(const PolyMesh& mesh, int k, std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto record = [&](std::string name, auto&& body) {
    CheckResult r{std::move(name), false, ""};
    try {
      body(r);
    } catch (const std::exception& ex) {
      r.passed = false;
      r.detail = ex.what();
    }
    out.push_back(std::move(r));
  };
  auto fmt = [](double v) { return num(v); };
  std::mt19937_64 rng(seed);

  ExactnessResult ex;
  record("polynomial_consistency", [&](CheckResult& r) {
    ex = polynomial_exactness(mesh, k, rng);
    r.passed = ex.rank_failures == 0 && ex.reconstruction_error <= 1e-10 && ex.idempotency_error <= 1e-10;
    r.detail = "max_rel_err=" + fmt(ex.reconstruction_error) + " idempotency=" + fmt(ex.idempotency_error) +
               " rank_failures=" + std::to_string(ex.rank_failures);
  });
  record("st2", [&](CheckResult& r) {
    r.passed = ex.rank_failures == 0 && ex.st2_ratio <= 1e-10;
    r.detail = "max_ratio=" + fmt(ex.st2_ratio);
  });

  const Discretization disc = discretize(mesh, k);
  record("st1", [&](CheckResult& r) {
    const double eta = measured_eta(mesh, disc);
    r.passed = std::isfinite(eta) && eta > 0.0;
    r.detail = "eta=" + fmt(eta);
  });
  record("symmetry", [&](CheckResult& r) {
    const SparseMatrix A = assemble_form(disc, LocalForm::stiffness, {true});
    const double gap = SparseMatrix(A - SparseMatrix(A.transpose())).norm();
    r.passed = gap <= 1e-13 * A.norm();
    r.detail = "asymmetry=" + fmt(gap);
  });

  record("magic_formula", [&](CheckResult& r) {
    std::uniform_real_distribution<double> u11(-1.0, 1.0);
    std::vector<double> values(mesh.num_faces(), 0.0);
    std::size_t interior = npos;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      if (mesh.face(f).boundary) continue;
      values[f] = u11(rng);
      if (interior == npos) interior = f;
    }
    const VectorFunction tau = [](const Point& x) {
      return Point(std::sin(2.0 * x.x() + x.y()), std::cos(x.x() - 3.0 * x.y()));
    };
    if (mesh.is_triangular()) {
      const NormalFluxes fluxes = rtn_normal_fluxes(mesh, rtn_interpolate(mesh, tau));
      const double scale = std::max(magic_scale(mesh, fluxes, values), 1e-300);
      const double res = magic_residual(mesh, fluxes, values);
      bool control = true;
      if (interior != npos) {
        NormalFluxes flipped = fluxes;
        const std::size_t e = mesh.face(interior).elements[0];
        std::size_t i = 0;
        while (mesh.element(e).faces[i].face != interior) ++i;
        flipped[e][i] = -flipped[e][i];
        const double expected = -2.0 * mesh.face(interior).length * fluxes[e][i] * values[interior];
        control = std::abs(magic_residual(mesh, flipped, values) - expected) <= 1e-12 * scale &&
                  std::abs(expected) > 1e-12 * scale;
      }
      r.passed = std::abs(res) <= 1e-12 * scale && control;
      r.detail = "relative_residual=" + fmt(std::abs(res) / scale) + (control ? "" : " negative_control_missed");
    } else {
      const VectorFunction grad = [](const Point& x) {
        return Point(std::cos(x.x()) * std::exp(x.y()), std::sin(x.x()) * std::exp(x.y()));
      };
      const double res = magic_residual(mesh, grad, values);
      double scale = 0.0;
      for (std::size_t e = 0; e < mesh.num_elements(); ++e)
        for (const ElementFace& ef : mesh.element(e).faces)
          scale += std::abs(values[ef.face]) * face_quadrature(mesh, ef.face, 8).integrate([&](const Point& x) {
            return std::abs(grad(x).dot(ef.normal));
          });
      r.passed = std::abs(res) <= 1e-12 * std::max(scale, 1e-300);
      r.detail = "relative_residual=" + fmt(std::abs(res) / std::max(scale, 1e-300));
    }
  });

  record("cr_equality", [&](CheckResult& r) {
    if (!mesh.is_triangular()) {
      r.passed = true;
      r.detail = "skipped: not a conforming triangle mesh";
      return;
    }
    const double gap = cr_hho_gap(mesh);
    r.passed = gap <= 1e-12;
    r.detail = "relative_gap=" + fmt(gap);
  });

  record("poincare", [&](CheckResult& r) {
    const PoincareResult cp = poincare_constant(disc);
    r.passed = cp.converged && std::isfinite(cp.constant) && cp.constant >= 0.0;
    r.detail = "CP=" + fmt(cp.constant) + " iterations=" + std::to_string(cp.iterations);
  });
  return out;
}

}  // namespace hho
