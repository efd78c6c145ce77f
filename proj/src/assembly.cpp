#include "hho/assembly.hpp"

#include "hho/errors.hpp"
#include "hho/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hho {

namespace {

using Eigen::Index;
using Triplet = Eigen::Triplet<double>;

const Eigen::MatrixXd& pick(const LocalOperators& ops, LocalForm form) {
  switch (form) {
    case LocalForm::stiffness: return ops.stiffness;
    case LocalForm::norm_gram: return ops.norm_gram;
    case LocalForm::cell_mass: return ops.cell_mass;
    case LocalForm::stabilization: return ops.stabilization;
  }
  throw std::logic_error("unknown local form");
}

void stage(const Eigen::MatrixXd& local, const std::vector<std::size_t>& map, std::vector<Triplet>& out) {
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] == npos) continue;
    for (std::size_t j = 0; j < map.size(); ++j) {
      if (map[j] == npos) continue;
      const double v = local(Index(i), Index(j));
      if (v != 0.0) out.emplace_back(Index(map[i]), Index(map[j]), v);
    }
  }
}

}  // namespace

std::vector<std::size_t> DofMap::local_to_global(const PolyMesh& mesh, std::size_t element) const {
  const Element& el = mesh.element(element);
  std::vector<std::size_t> map;
  map.reserve(cell_block() + el.faces.size() * face_block());
  for (std::size_t i = 0; i < cell_block(); ++i) map.push_back(cell_offset[element] + i);
  for (const ElementFace& ef : el.faces) {
    const std::size_t off = face_offset[ef.face];
    for (std::size_t i = 0; i < face_block(); ++i) map.push_back(off == npos ? npos : off + i);
  }
  return map;
}

DofMap build_dof_map(const PolyMesh& mesh, int k) {
  if (k < 0) throw std::invalid_argument("build_dof_map: k must be >= 0");
  DofMap d;
  d.k = k;
  d.face_offset.assign(mesh.num_faces(), npos);
  std::size_t next = 0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (mesh.face(f).boundary) continue;
    d.face_offset[f] = next;
    next += d.face_block();
  }
  d.num_face_dofs = next;
  d.cell_offset.assign(mesh.num_elements(), npos);
  if (d.cell_block() > 0) {
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      d.cell_offset[e] = next;
      next += d.cell_block();
    }
  }
  d.num_dofs = next;
  return d;
}

Discretization discretize(const PolyMesh& mesh, int k) {
  Discretization disc;
  disc.mesh = &mesh;
  disc.k = k;
  disc.dofs = build_dof_map(mesh, k);
  disc.ops.resize(mesh.num_elements());
  parallel_for(mesh.num_elements(), [&](std::size_t e, unsigned) { disc.ops[e] = build_local_operators(mesh, e, k); });
  return disc;
}

SparseMatrix assemble_form(const Discretization& disc, LocalForm form, const AssemblyOptions& options) {
  const PolyMesh& mesh = *disc.mesh;
  const std::size_t ne = mesh.num_elements();
  std::vector<Triplet> all;
  if (options.deterministic) {
    // One buffer per element, concatenated in element order.
    std::vector<std::vector<Triplet>> per_element(ne);
    parallel_for(ne, [&](std::size_t e, unsigned) {
      stage(pick(disc.ops[e], form), disc.dofs.local_to_global(mesh, e), per_element[e]);
    });
    std::size_t total = 0;
    for (const auto& v : per_element) total += v.size();
    all.reserve(total);
    for (const auto& v : per_element) all.insert(all.end(), v.begin(), v.end());
  } else {
    std::vector<std::vector<Triplet>> per_worker(std::max(1u, thread_count()));
    parallel_for(
        ne,
        [&](std::size_t e, unsigned w) {
          stage(pick(disc.ops[e], form), disc.dofs.local_to_global(mesh, e), per_worker[w]);
        },
        false);
    for (const auto& v : per_worker) all.insert(all.end(), v.begin(), v.end());
  }
  const auto n = Index(disc.dofs.num_dofs);
  SparseMatrix A(n, n);
  A.setFromTriplets(all.begin(), all.end());
  return A;
}

Eigen::VectorXd assemble_load(const Discretization& disc, const ScalarFunction& f, int order) {
  const PolyMesh& mesh = *disc.mesh;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(Index(disc.dofs.num_dofs));
  std::vector<Eigen::VectorXd> local(mesh.num_elements());
  parallel_for(mesh.num_elements(), [&](std::size_t e, unsigned) { local[e] = local_load(mesh, disc.ops[e], f, order); });
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto map = disc.dofs.local_to_global(mesh, e);
    for (std::size_t i = 0; i < map.size(); ++i)
      if (map[i] != npos) b[Index(map[i])] += local[e][Index(i)];
  }
  return b;
}

SparseSpdSystem assemble(const Discretization& disc, const ScalarFunction& f, const AssemblyOptions& options) {
  SparseSpdSystem sys;
  sys.dofs = disc.dofs;
  sys.num_elements = disc.mesh->num_elements();
  sys.matrix = assemble_form(disc, LocalForm::stiffness, options);
  sys.rhs = assemble_load(disc, f);
  sys.nnz = std::size_t(sys.matrix.nonZeros());

  const Eigen::VectorXd diag = sys.matrix.diagonal();
  for (Index i = 0; i < diag.size(); ++i) {
    if (diag[i] > 0.0) continue;
    std::size_t culprit = npos;
    for (std::size_t e = 0; e < disc.mesh->num_elements() && culprit == npos; ++e)
      for (std::size_t g : disc.dofs.local_to_global(*disc.mesh, e))
        if (g == std::size_t(i)) culprit = e;
    throw NumericalError("kernel leak: non-positive diagonal at unknown " + std::to_string(i) + " (element " +
                         std::to_string(culprit) + ")");
  }
  return sys;
}

Eigen::VectorXd GlobalHhoVector::gather(const PolyMesh& mesh, std::size_t element) const {
  const auto map = dofs->local_to_global(mesh, element);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Index(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] != npos) out[Index(i)] = values[Index(map[i])];
  return out;
}

LocalHhoVector GlobalHhoVector::local(const PolyMesh& mesh, std::size_t element) const {
  return LocalHhoVector{local_layout(mesh, element, dofs->k), gather(mesh, element)};
}

void GlobalHhoVector::scatter(const PolyMesh& mesh, std::size_t element, const Eigen::VectorXd& local) {
  const auto map = dofs->local_to_global(mesh, element);
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] != npos) values[Index(map[i])] = local[Index(i)];
}

double relative_residual(const SparseMatrix& matrix, const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) {
  const double nb = rhs.norm();
  const double r = (rhs - matrix * x).norm();
  return nb > 0.0 ? r / nb : r;
}

SolveReport solve(const SparseMatrix& matrix, const Eigen::VectorXd& rhs, const SolverOptions& options) {
  SolveReport rep;
  const Index n = matrix.rows();
  if (n == 0) {
    rep.solution.resize(0);
    rep.method = "empty";
    return rep;
  }
  if (options.kind == SolverKind::direct) {
    rep.method = "cholesky";
    Eigen::SimplicialLLT<SparseMatrix> llt(matrix);
    if (llt.info() != Eigen::Success)
      throw NumericalError("Cholesky factorization failed (n = " + std::to_string(n) + ")");
    rep.solution = llt.solve(rhs);
    rep.relative_residual = relative_residual(matrix, rep.solution, rhs);
    // A few rounds of refinement cover ill-conditioned high-order systems.
    for (int it = 0; it < 3 && rep.relative_residual > options.tolerance; ++it) {
      rep.solution += llt.solve(rhs - matrix * rep.solution);
      rep.relative_residual = relative_residual(matrix, rep.solution, rhs);
      rep.iterations = it + 1;
    }
    if (!(rep.relative_residual <= options.tolerance))
      throw NumericalError("Cholesky solve residual " + std::to_string(rep.relative_residual) + " above tolerance");
    return rep;
  }
  rep.method = "cg";
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(options.tolerance);
  cg.setMaxIterations(options.max_iterations_factor * n);
  cg.compute(matrix);
  rep.solution = cg.solve(rhs);
  rep.iterations = int(cg.iterations());
  rep.relative_residual = relative_residual(matrix, rep.solution, rhs);
  if (cg.info() != Eigen::Success || !(rep.relative_residual <= options.tolerance * 10.0))
    throw NumericalError("CG did not converge: " + std::to_string(rep.iterations) + " iterations, residual " +
                         std::to_string(rep.relative_residual));
  return rep;
}

SolveReport solve(const SparseSpdSystem& system, const SolverOptions& options) {
  return solve(system.matrix, system.rhs, options);
}

Eigen::VectorXd StaticCondensation::recover(const Eigen::VectorXd& faces) const {
  Eigen::VectorXd full(faces.size() + cell_rhs.size());
  full.head(faces.size()) = faces;
  full.tail(cell_rhs.size()) = cell_inverse * (cell_rhs - cell_face * faces);
  return full;
}

StaticCondensation static_condense(const SparseSpdSystem& system) {
  const DofMap& d = system.dofs;
  if (d.cell_block() == 0) throw std::invalid_argument("static condensation needs k >= 1");
  const auto nf = Index(d.num_face_dofs);
  const auto nc = Index(d.num_cell_dofs());
  const auto cb = Index(d.cell_block());

  const SparseMatrix& A = system.matrix;
  const SparseMatrix Aff = A.topLeftCorner(nf, nf);
  const SparseMatrix Afc = A.topRightCorner(nf, nc);
  StaticCondensation sc;
  sc.cell_face = A.bottomLeftCorner(nc, nf);
  sc.cell_rhs = system.rhs.tail(nc);
  sc.nnz_before = std::size_t(A.nonZeros());

  std::vector<Triplet> inv;
  inv.reserve(std::size_t(nc * cb));
  for (Index start = 0; start < nc; start += cb) {
    const Eigen::MatrixXd block = Eigen::MatrixXd(A.block(nf + start, nf + start, cb, cb));
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success)
      throw NumericalError("ST1 violation: singular cell block at cell unknown " + std::to_string(start));
    const Eigen::MatrixXd binv = llt.solve(Eigen::MatrixXd::Identity(cb, cb));
    for (Index i = 0; i < cb; ++i)
      for (Index j = 0; j < cb; ++j) inv.emplace_back(start + i, start + j, binv(i, j));
  }
  sc.cell_inverse.resize(nc, nc);
  sc.cell_inverse.setFromTriplets(inv.begin(), inv.end());

  const SparseMatrix correction = Afc * sc.cell_inverse * sc.cell_face;
  sc.reduced = Aff - correction;
  sc.reduced.prune(0.0);
  sc.reduced_rhs = system.rhs.head(nf) - Afc * (sc.cell_inverse * sc.cell_rhs);
  sc.nnz_after = std::size_t(sc.reduced.nonZeros());
  return sc;
}

double riesz_dual_norm(const SparseMatrix& norm_gram, const Eigen::VectorXd& functional, const SolverOptions& options) {
  if (functional.size() == 0 || functional.isZero(0.0)) return 0.0;
  SolverOptions opts = options;
  // The dual norm only needs a few significant digits; loosen the residual gate.
  opts.tolerance = std::max(opts.tolerance, 1e-10);
  const SolveReport rep = solve(norm_gram, functional, opts);
  return std::sqrt(std::max(0.0, functional.dot(rep.solution)));
}

void write_matrix(std::ostream& out, const SparseMatrix& matrix) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out.precision(17);
  for (Index c = 0; c < matrix.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(matrix, c); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace hho
