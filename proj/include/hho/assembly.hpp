#pragma once

#include "hho/basis.hpp"
#include "hho/local.hpp"
#include "hho/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace hho {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Global numbering: interior face blocks first (by face id), then cell
/// blocks (by element id). Boundary faces are eliminated.
struct DofMap {
  int k = 0;
  std::vector<std::size_t> face_offset;  // npos on boundary faces
  std::vector<std::size_t> cell_offset;  // npos when k = 0
  std::size_t num_face_dofs = 0;
  std::size_t num_dofs = 0;

  std::size_t face_block() const { return static_cast<std::size_t>(k + 1); }
  std::size_t cell_block() const { return poly_dim(k - 1); }
  std::size_t num_cell_dofs() const { return num_dofs - num_face_dofs; }

  /// Global index of every local unknown of the element (npos when eliminated).
  std::vector<std::size_t> local_to_global(const PolyMesh& mesh, std::size_t element) const;
};

DofMap build_dof_map(const PolyMesh& mesh, int k);

struct AssemblyOptions {
  /// Merge per-element contributions in element order so that two runs give
  /// bit-identical matrices regardless of thread scheduling.
  bool deterministic = false;
};

/// Local operators of every element plus the global numbering.
struct Discretization {
  const PolyMesh* mesh = nullptr;
  int k = 0;
  DofMap dofs;
  std::vector<LocalOperators> ops;
};

/// Builds every LocalOperators concurrently. The mesh must outlive the result.
Discretization discretize(const PolyMesh& mesh, int k);
Discretization discretize(const PolyMesh&& mesh, int k) = delete;

struct SparseSpdSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  DofMap dofs;
  std::size_t num_elements = 0;
  std::size_t nnz = 0;
};

/// Which local matrix to scatter.
enum class LocalForm { stiffness, norm_gram, cell_mass, stabilization };

SparseMatrix assemble_form(const Discretization& disc, LocalForm form, const AssemblyOptions& options = {});

/// Global load vector; int_T f v_T per element.
Eigen::VectorXd assemble_load(const Discretization& disc, const ScalarFunction& f, int order = -1);

/// Stiffness plus load. Throws NumericalError naming an element when an
/// assembled diagonal entry is not positive.
SparseSpdSystem assemble(const Discretization& disc, const ScalarFunction& f, const AssemblyOptions& options = {});

/// Coefficient vector of the global hybrid space; boundary faces read as zero.
struct GlobalHhoVector {
  const DofMap* dofs = nullptr;
  Eigen::VectorXd values;

  Eigen::VectorXd gather(const PolyMesh& mesh, std::size_t element) const;
  LocalHhoVector local(const PolyMesh& mesh, std::size_t element) const;
  /// Writes the non-eliminated entries of a local vector.
  void scatter(const PolyMesh& mesh, std::size_t element, const Eigen::VectorXd& local);
};

enum class SolverKind { direct, cg };

struct SolverOptions {
  SolverKind kind = SolverKind::direct;
  double tolerance = 1e-12;
  int max_iterations_factor = 10;
};

struct SolveReport {
  Eigen::VectorXd solution;
  double relative_residual = 0.0;
  int iterations = 0;
  std::string method;
};

/// Direct sparse Cholesky (with residual refinement) or Jacobi-preconditioned
/// CG. Throws NumericalError on factorization failure or non-convergence.
SolveReport solve(const SparseMatrix& matrix, const Eigen::VectorXd& rhs, const SolverOptions& options = {});
SolveReport solve(const SparseSpdSystem& system, const SolverOptions& options = {});

double relative_residual(const SparseMatrix& matrix, const Eigen::VectorXd& x, const Eigen::VectorXd& rhs);

/// Face-only Schur complement of a system whose trailing cell blocks are
/// block diagonal.
struct StaticCondensation {
  SparseMatrix reduced;
  Eigen::VectorXd reduced_rhs;
  SparseMatrix cell_inverse;  // block diagonal (A_cc)^{-1}
  SparseMatrix cell_face;     // A_cf
  Eigen::VectorXd cell_rhs;
  std::size_t nnz_before = 0;
  std::size_t nnz_after = 0;

  /// Full solution from the face unknowns: cells = A_cc^{-1} (b_c - A_cf x_f).
  Eigen::VectorXd recover(const Eigen::VectorXd& faces) const;
};

/// Throws std::invalid_argument for k = 0 and NumericalError (ST1 violation)
/// on a singular cell block.
StaticCondensation static_condense(const SparseSpdSystem& system);

/// sqrt(l^T N^{-1} l).
double riesz_dual_norm(const SparseMatrix& norm_gram, const Eigen::VectorXd& functional,
                       const SolverOptions& options = {});

/// Coordinate text dump: one %%MatrixMarket header line, then `i j value`
/// per stored entry with 0-based indices.
void write_matrix(std::ostream& out, const SparseMatrix& matrix);

}  // namespace hho
