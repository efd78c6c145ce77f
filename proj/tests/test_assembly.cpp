#include "hho/assembly.hpp"

#include "hho/errors.hpp"
#include "hho/verify.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

using namespace hho;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

const ScalarFunction sine_f = [](const Point& x) {
  return 2 * M_PI * M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
};

}  // namespace

TEST(DofMap, Counts) {
  const PolyMesh m = generate(MeshKind::cartesian, 2);
  const DofMap d1 = build_dof_map(m, 1);
  EXPECT_EQ(d1.num_face_dofs, 8u);
  EXPECT_EQ(d1.num_cell_dofs(), 4u);
  EXPECT_EQ(d1.num_dofs, 12u);
  const DofMap d0 = build_dof_map(m, 0);
  EXPECT_EQ(d0.num_dofs, m.num_interior_faces());
  const DofMap d2 = build_dof_map(generate_agglomerated(8, 2), 2);
  const PolyMesh a = generate_agglomerated(8, 2);
  EXPECT_EQ(d2.num_dofs, 3 * a.num_interior_faces() + 3 * a.num_elements());
  EXPECT_EQ(build_dof_map(generate(MeshKind::cartesian, 1), 0).num_dofs, 0u);
}

TEST(DofMap, FacesFirstThenCells) {
  const PolyMesh m = generate(MeshKind::triangular, 3);
  const DofMap d = build_dof_map(m, 2);
  std::size_t expected = 0;
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    if (m.face(f).boundary) {
      EXPECT_EQ(d.face_offset[f], npos);
      continue;
    }
    EXPECT_EQ(d.face_offset[f], expected);
    expected += 3;
  }
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    EXPECT_EQ(d.cell_offset[e], expected);
    expected += 3;
  }
  EXPECT_EQ(expected, d.num_dofs);
}

TEST(Assembly, SymmetricAndPositiveDefinite) {
  for (int k = 0; k <= 2; ++k) {
    const PolyMesh m = generate_nonconforming(4, 0.5);
    const Discretization disc = discretize(m, k);
    const SparseSpdSystem s = assemble(disc, sine_f);
    const Eigen::MatrixXd A(s.matrix);
    EXPECT_LT((A - A.transpose()).norm(), 1e-13 * A.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_EQ(s.nnz, static_cast<std::size_t>(s.matrix.nonZeros()));
  }
}

TEST(Assembly, ZeroSourceGivesZeroSolution) {
  const PolyMesh mesh = generate(MeshKind::cartesian, 4);
  const Discretization disc = discretize(mesh, 1);
  const SparseSpdSystem s = assemble(disc, [](const Point&) { return 0.0; });
  EXPECT_EQ(s.rhs.norm(), 0.0);
  EXPECT_EQ(solve(s).solution.norm(), 0.0);
}

TEST(Assembly, DeterministicModeIsBitIdentical) {
  const PolyMesh mesh = generate_agglomerated(16, 4);
  const Discretization disc = discretize(mesh, 2);
  const SparseSpdSystem a = assemble(disc, sine_f, {true});
  const SparseSpdSystem b = assemble(disc, sine_f, {true});
  ASSERT_EQ(a.matrix.nonZeros(), b.matrix.nonZeros());
  for (Eigen::Index i = 0; i < a.matrix.nonZeros(); ++i) {
    EXPECT_EQ(a.matrix.valuePtr()[i], b.matrix.valuePtr()[i]);
    EXPECT_EQ(a.matrix.innerIndexPtr()[i], b.matrix.innerIndexPtr()[i]);
  }
  EXPECT_EQ(a.rhs, b.rhs);
  // The threaded path builds the same matrix up to summation order.
  const SparseSpdSystem c = assemble(disc, sine_f, {false});
  EXPECT_LT(SparseMatrix(a.matrix - c.matrix).norm(), 1e-13 * a.matrix.norm());
}

TEST(GlobalVector, GatherScatterRoundTrip) {
  const PolyMesh m = generate_nonconforming(4, 0.5);
  const DofMap d = build_dof_map(m, 2);
  GlobalHhoVector v{&d, random_vector(static_cast<Eigen::Index>(d.num_dofs), 1)};
  GlobalHhoVector w{&d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.num_dofs))};
  for (std::size_t e = 0; e < m.num_elements(); ++e) w.scatter(m, e, v.gather(m, e));
  EXPECT_EQ(v.values, w.values);
  // Boundary faces read as zero.
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const LocalHhoVector l = v.local(m, e);
    for (std::size_t f = 0; f < m.element(e).faces.size(); ++f)
      if (m.face(m.element(e).faces[f].face).boundary) EXPECT_EQ(l.face(f).norm(), 0.0);
  }
}

TEST(Solve, DirectAndCgReachTheirTolerances) {
  const PolyMesh mesh = generate(MeshKind::triangular, 8);
  const Discretization disc = discretize(mesh, 2);
  const SparseSpdSystem s = assemble(disc, sine_f);
  const SolveReport d = solve(s);
  EXPECT_EQ(d.method, "cholesky");
  EXPECT_LE(d.relative_residual, 1e-12);
  EXPECT_NEAR(relative_residual(s.matrix, d.solution, s.rhs), d.relative_residual, 1e-15);
  const SolveReport c = solve(s, SolverOptions{SolverKind::cg, 1e-10});
  EXPECT_EQ(c.method, "cg");
  EXPECT_GT(c.iterations, 0);
  EXPECT_LE(c.relative_residual, 1e-9);
  EXPECT_LT((c.solution - d.solution).norm(), 1e-6 * d.solution.norm());
}

TEST(Solve, EmptySystem) {
  const PolyMesh mesh = generate(MeshKind::cartesian, 1);
  const Discretization disc = discretize(mesh, 0);
  const SolveReport r = solve(assemble(disc, sine_f));
  EXPECT_EQ(r.method, "empty");
  EXPECT_EQ(r.solution.size(), 0);
}

TEST(StaticCondensation, SmallCartesianSizesAndAgreement) {
  const PolyMesh mesh = generate(MeshKind::cartesian, 2);
  const Discretization disc = discretize(mesh, 1);
  const SparseSpdSystem s = assemble(disc, sine_f);
  const StaticCondensation sc = static_condense(s);
  EXPECT_EQ(sc.reduced.rows(), 8);
  const Eigen::VectorXd faces = solve(sc.reduced, sc.reduced_rhs).solution;
  const Eigen::VectorXd full = solve(s).solution;
  EXPECT_LE((sc.recover(faces) - full).norm(), 1e-11 * full.norm());
}

TEST(StaticCondensation, AgreesOnPolygonalMeshes) {
  for (int k = 1; k <= 3; ++k) {
    const PolyMesh mesh = generate_agglomerated(8, 2);
    const Discretization disc = discretize(mesh, k);
    const SparseSpdSystem s = assemble(disc, sine_f);
    const StaticCondensation sc = static_condense(s);
    EXPECT_EQ(static_cast<std::size_t>(sc.reduced.rows()), s.dofs.num_face_dofs);
    const Eigen::VectorXd full = solve(s).solution;
    const Eigen::VectorXd cond = sc.recover(solve(sc.reduced, sc.reduced_rhs).solution);
    EXPECT_LE((cond - full).norm(), 1e-11 * full.norm()) << "k=" << k;
  }
}

TEST(StaticCondensation, RejectsLowestOrder) {
  const PolyMesh mesh = generate(MeshKind::cartesian, 2);
  const Discretization disc = discretize(mesh, 0);
  EXPECT_THROW(static_condense(assemble(disc, sine_f)), std::invalid_argument);
}

TEST(RieszNorm, ZeroAndRepresentedFunctionals) {
  const PolyMesh mesh = generate(MeshKind::triangular, 4);
  const Discretization disc = discretize(mesh, 1);
  const SparseMatrix N = assemble_form(disc, LocalForm::norm_gram);
  const Eigen::VectorXd v = random_vector(N.rows(), 3);
  EXPECT_EQ(riesz_dual_norm(N, Eigen::VectorXd::Zero(N.rows())), 0.0);
  // l = N v has dual norm sqrt(v^T N v).
  EXPECT_NEAR(riesz_dual_norm(N, N * v), std::sqrt(v.dot(N * v)), 1e-9 * std::sqrt(v.dot(N * v)));
}

TEST(Coercivity, GlobalFormIsBoundedByEtaOnBothSides) {
  for (int k = 0; k <= 2; ++k) {
    const PolyMesh m = generate_agglomerated(8, 2);
    const Discretization disc = discretize(m, k);
    const SparseMatrix A = assemble_form(disc, LocalForm::stiffness);
    const SparseMatrix N = assemble_form(disc, LocalForm::norm_gram);
    const double eta = measured_eta(m, disc);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Eigen::VectorXd v = random_vector(A.rows(), seed);
      const double a = v.dot(A * v), n = v.dot(N * v);
      EXPECT_GE(a, n / eta * (1 - 1e-12));
      EXPECT_LE(a, eta * n * (1 + 1e-12));
    }
  }
}

TEST(WriteMatrix, CoordinateFormat) {
  const PolyMesh mesh = generate(MeshKind::cartesian, 2);
  const Discretization disc = discretize(mesh, 0);
  const SparseSpdSystem s = assemble(disc, sine_f);
  std::ostringstream out;
  write_matrix(out, s.matrix);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "%%MatrixMarket matrix coordinate real general");
  SparseMatrix back(s.matrix.rows(), s.matrix.cols());
  long i, j;
  double v;
  std::size_t count = 0;
  while (in >> i >> j >> v) {
    back.coeffRef(i, j) = v;
    ++count;
  }
  EXPECT_EQ(count, s.nnz);
  EXPECT_EQ(SparseMatrix(back - s.matrix).norm(), 0.0);
}
