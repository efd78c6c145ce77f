#include "hho/local.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace hho;

namespace {

PolyMesh pentagon(double scale = 1.0) {
  std::vector<Point> v{{0, 0}, {1, 0}, {1.3, 0.7}, {0.5, 1.2}, {-0.2, 0.6}};
  for (Point& p : v) p *= scale;
  return PolyMesh::from_polygons(v, {{0, 1, 2, 3, 4}});
}

PolyMesh triangle() { return PolyMesh::from_polygons({{0, 0}, {1, 0.1}, {0.3, 0.9}}, {{0, 1, 2}}); }

std::vector<PolyMesh> shapes() {
  std::vector<PolyMesh> out{pentagon(), triangle(), generate(MeshKind::cartesian, 1)};
  const std::size_t marked[] = {0};
  const PolyMesh refined = refine_nonconforming(generate(MeshKind::cartesian, 2), marked);
  // Keep only the element with a split side.
  for (std::size_t e = 0; e < refined.num_elements(); ++e)
    if (refined.element(e).faces.size() == 5) {
      std::vector<Point> v;
      std::vector<std::size_t> loop;
      for (std::size_t i : refined.element(e).vertices) {
        loop.push_back(v.size());
        v.push_back(refined.vertex(i));
      }
      out.push_back(PolyMesh::from_polygons(v, {loop}));
      break;
    }
  return out;
}

// Raw monomial (x - c)^a (y - c)^b and its gradient.
struct Monomials {
  Point c;
  int degree;
  std::vector<std::array<int, 2>> exps;
  Monomials(Point center, int d) : c(center), degree(d) {
    for (int t = 0; t <= d; ++t)
      for (int b = 0; b <= t; ++b) exps.push_back({t - b, b});
  }
  double pw(double x, int e) const { return e <= 0 ? (e == 0 ? 1.0 : 0.0) : std::pow(x, e); }
  double value(std::size_t i, const Point& x) const {
    return pw(x.x() - c.x(), exps[i][0]) * pw(x.y() - c.y(), exps[i][1]);
  }
  Point grad(std::size_t i, const Point& x) const {
    const auto [a, b] = exps[i];
    const double dx = x.x() - c.x(), dy = x.y() - c.y();
    return {a * pw(dx, a - 1) * pw(dy, b), b * pw(dx, a) * pw(dy, b - 1)};
  }
  double laplacian(std::size_t i, const Point& x) const {
    const auto [a, b] = exps[i];
    const double dx = x.x() - c.x(), dy = x.y() - c.y();
    return a * (a - 1) * pw(dx, a - 2) * pw(dy, b) + b * (b - 1) * pw(dx, a) * pw(dy, b - 2);
  }
};

// Independent reconstruction of I_T v in raw monomials, using the second
// integration-by-parts form:
//   int grad p . grad w = -int v_T lap w + sum_F int_F v_F grad w . n,
// closed by the same mean condition. Returns a point evaluator for p.
std::function<double(const Point&)> oracle_reconstruction(const PolyMesh& m, int k, const ScalarFunction& v,
                                                         const LocalOperators& ops, const LocalHhoVector& iv) {
  const Element& el = m.element(0);
  const Monomials mono(el.centroid, k + 1);
  const auto n = static_cast<Eigen::Index>(mono.exps.size());
  const QuadRule qc = cell_quadrature(m, 0, 2 * k + 4);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  for (std::size_t q = 0; q < qc.size(); ++q) {
    const Point& x = qc.points[q];
    const double vt = cell_value(ops, iv.values, x);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      for (Eigen::Index j = 0; j < n; ++j)
        G(i, j) += qc.weights[q] * mono.grad(si, x).dot(mono.grad(static_cast<std::size_t>(j), x));
      rhs(i) -= qc.weights[q] * vt * mono.laplacian(si, x);
      G(n, i) += qc.weights[q] * mono.value(si, x);
    }
    if (k >= 1) rhs(n) += qc.weights[q] * vt;
  }
  for (std::size_t f = 0; f < el.faces.size(); ++f) {
    const ElementFace& ef = el.faces[f];
    const FaceBasis fb(m, ef.face, k);
    const QuadRule qf = face_quadrature(m, ef.face, 2 * k + 4);
    for (std::size_t q = 0; q < qf.size(); ++q) {
      const double vf = fb.evaluate(iv.face(f), qf.points[q]);
      for (Eigen::Index i = 0; i < n; ++i)
        rhs(i) += qf.weights[q] * vf * mono.grad(static_cast<std::size_t>(i), qf.points[q]).dot(ef.normal);
      if (k == 0) rhs(n) += 0.5 * ef.distance * qf.weights[q] * vf;
    }
  }
  G.col(n).head(n) = G.row(n).head(n).transpose();
  const Eigen::VectorXd c = G.fullPivLu().solve(rhs);
  (void)v;
  return [mono, c, n](const Point& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += c(i) * mono.value(static_cast<std::size_t>(i), x);
    return s;
  };
}

std::size_t numerical_rank(const Eigen::MatrixXd& A, double rel = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) > rel * top) ++r;
  return r;
}

}  // namespace

TEST(Layout, SizesAndOffsets) {
  const LocalLayout l{2, 5};
  EXPECT_EQ(l.cell_size(), 3u);
  EXPECT_EQ(l.face_size(), 3u);
  EXPECT_EQ(l.face_offset(0), 3u);
  EXPECT_EQ(l.face_offset(4), 15u);
  EXPECT_EQ(l.size(), 18u);
  EXPECT_EQ((LocalLayout{0, 4}).size(), 4u);
}

TEST(Reconstruction, MatchesLaplacianFormOracle) {
  const auto v = [](const Point& x) { return std::sin(2 * x.x() + 0.5) * std::exp(-x.y()); };
  for (const PolyMesh& m : shapes())
    for (int k = 0; k <= 3; ++k) {
      const LocalOperators ops = build_local_operators(m, 0, k);
      const LocalHhoVector iv = interpolate(m, 0, k, v);
      const Eigen::VectorXd p = ops.reconstruction.matrix * iv.values;
      const auto oracle = oracle_reconstruction(m, k, v, ops, iv);
      const QuadRule q = cell_quadrature(m, 0, 6);
      for (const Point& x : q.points)
        EXPECT_NEAR(ops.reconstruction.basis.evaluate(p, x), oracle(x), 1e-11) << "k=" << k;
    }
}

TEST(Reconstruction, UnitSquareLowestOrderGivesX) {
  // Face means of x: 0 on the left, 1 on the right, 1/2 on the horizontal sides.
  const PolyMesh m = generate(MeshKind::cartesian, 1);
  const LocalOperators ops = build_local_operators(m, 0, 0);
  Eigen::VectorXd faces(4);
  for (std::size_t f = 0; f < 4; ++f) faces(static_cast<Eigen::Index>(f)) = m.face(m.element(0).faces[f].face).midpoint.x();
  const Eigen::VectorXd p = ops.reconstruction.matrix * faces;
  for (const Point& x : {Point(0.1, 0.2), Point(0.7, 0.9), Point(0.5, 0.5)})
    EXPECT_NEAR(ops.reconstruction.basis.evaluate(p, x), x.x(), 1e-14);
  EXPECT_NEAR(cell_value(ops, faces, Point(0.3, 0.3)), 0.5, 1e-15);
}

TEST(Reconstruction, ReproducesPolynomialsOfDegreeKPlusOne) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const PolyMesh& m : shapes())
    for (int k = 0; k <= 3; ++k) {
      const LocalOperators ops = build_local_operators(m, 0, k);
      const Monomials mono(Point(0.2, -0.1), k + 1);
      std::vector<double> c(mono.exps.size());
      for (double& ci : c) ci = u(rng);
      const ScalarFunction poly = [&](const Point& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * mono.value(i, x);
        return s;
      };
      const Eigen::VectorXd p = elliptic_project(m, ops, poly);
      const QuadRule q = cell_quadrature(m, 0, 4);
      double tail = 0.0;
      for (const Point& x : q.points) {
        const double d = ops.reconstruction.basis.evaluate(p, x) - poly(x);
        tail = std::max(tail, std::abs(d));
      }
      // Equal up to a constant for k = 0; exactly for k >= 1 (the mean is pinned).
      if (k == 0) {
        const double d0 = ops.reconstruction.basis.evaluate(p, q.points[0]) - poly(q.points[0]);
        for (const Point& x : q.points)
          EXPECT_NEAR(ops.reconstruction.basis.evaluate(p, x) - poly(x), d0, 1e-12);
      } else {
        EXPECT_LT(tail, 1e-11) << "k=" << k;
      }
    }
}

TEST(Reconstruction, ConstantsMapToConstants) {
  for (const PolyMesh& m : shapes())
    for (int k = 0; k <= 2; ++k) {
      const LocalOperators ops = build_local_operators(m, 0, k);
      const Eigen::VectorXd one = interpolate(m, 0, k, [](const Point&) { return 1.0; }).values;
      const Eigen::VectorXd p = ops.reconstruction.matrix * one;
      EXPECT_NEAR(p(0), 1.0, 1e-13);
      EXPECT_LT(p.tail(p.size() - 1).norm(), 1e-13);
    }
}

TEST(EllipticProjection, GradientOrthogonalityAndMean) {
  const auto v = [](const Point& x) { return std::cos(3 * x.x()) * (1 + x.y() * x.y()); };
  const auto gv = [](const Point& x) {
    return Point(-3 * std::sin(3 * x.x()) * (1 + x.y() * x.y()), 2 * x.y() * std::cos(3 * x.x()));
  };
  for (const PolyMesh& m : shapes())
    for (int k = 0; k <= 3; ++k) {
      const LocalOperators ops = build_local_operators(m, 0, k);
      const CellBasis& b = ops.reconstruction.basis;
      const Eigen::VectorXd p = elliptic_project(m, ops, v, 24);
      const QuadRule q = cell_quadrature(m, 0, 24);
      Eigen::VectorXd moments = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size()));
      double mean_gap = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const Point& x = q.points[i];
        moments += q.weights[i] * (b.gradients(x) * (b.evaluate_gradient(p, x) - gv(x)));
        mean_gap += q.weights[i] * (b.evaluate(p, x) - v(x));
      }
      EXPECT_LT(moments.norm(), 1e-11) << "k=" << k;
      if (k >= 1) EXPECT_NEAR(mean_gap, 0.0, 1e-12) << "k=" << k;
    }
}

TEST(Stabilization, VanishesOnTrianglesForLowestOrder) {
  const PolyMesh m = triangle();
  const LocalOperators ops = build_local_operators(m, 0, 0);
  EXPECT_LT(ops.stabilization.norm(), 1e-13 * ops.stiffness.norm());
}

TEST(Stabilization, RankOneOnSquareForLowestOrder) {
  const PolyMesh m = generate(MeshKind::cartesian, 1);
  const LocalOperators ops = build_local_operators(m, 0, 0);
  EXPECT_EQ(numerical_rank(ops.stabilization), 1u);
  // The kernel of a_T on the square is only the constants.
  EXPECT_EQ(numerical_rank(ops.stiffness), 3u);
}

TEST(Stabilization, PolynomialConsistency) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const PolyMesh& m : shapes())
    for (int k = 0; k <= 3; ++k) {
      const LocalOperators ops = build_local_operators(m, 0, k);
      const Monomials mono(Point(0.5, 0.5), k + 1);
      std::vector<double> c(mono.exps.size());
      for (double& ci : c) ci = u(rng);
      const Eigen::VectorXd ip = interpolate(m, 0, k, [&](const Point& x) {
                                   double s = 0.0;
                                   for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * mono.value(i, x);
                                   return s;
                                 }).values;
      EXPECT_LT((ops.stabilization * ip).norm(), 1e-11 * ops.stiffness.norm() * ip.norm()) << "k=" << k;
    }
}

TEST(LocalForms, SymmetricSemidefiniteWithConstantKernel) {
  for (const PolyMesh& m : shapes())
    for (int k = 0; k <= 3; ++k) {
      const LocalOperators ops = build_local_operators(m, 0, k);
      const auto n = ops.stiffness.rows();
      EXPECT_LT((ops.stiffness - ops.stiffness.transpose()).norm(), 1e-13 * ops.stiffness.norm());
      EXPECT_EQ(numerical_rank(ops.stiffness), static_cast<std::size_t>(n - 1)) << "k=" << k;
      EXPECT_EQ(numerical_rank(ops.norm_gram), static_cast<std::size_t>(n - 1)) << "k=" << k;
      const Eigen::VectorXd one = interpolate(m, 0, k, [](const Point&) { return 1.0; }).values;
      EXPECT_LT((ops.stiffness * one).norm(), 1e-12 * ops.stiffness.norm());
      EXPECT_LT((ops.norm_gram * one).norm(), 1e-12 * ops.norm_gram.norm());
    }
}

TEST(EtaBounds, FiniteAndScaleInvariant) {
  for (int k = 0; k <= 3; ++k) {
    const PolyMesh a = pentagon(1.0);
    const PolyMesh b = pentagon(2.0);
    const EtaBounds ea = eta_bounds(a, build_local_operators(a, 0, k));
    const EtaBounds eb = eta_bounds(b, build_local_operators(b, 0, k));
    EXPECT_TRUE(std::isfinite(ea.eta()));
    EXPECT_GE(ea.eta(), 1.0);
    EXPECT_NEAR(ea.lambda_min, eb.lambda_min, 1e-9 * ea.lambda_min);
    EXPECT_NEAR(ea.lambda_max, eb.lambda_max, 1e-9 * ea.lambda_max);
  }
}

TEST(LocalLoad, ConstantSourceIntegratesAgainstCellValue) {
  const PolyMesh m = pentagon();
  for (int k = 0; k <= 2; ++k) {
    const LocalOperators ops = build_local_operators(m, 0, k);
    const Eigen::VectorXd one = interpolate(m, 0, k, [](const Point&) { return 1.0; }).values;
    const Eigen::VectorXd b = local_load(m, ops, [](const Point&) { return 2.0; });
    // int_T 2 * 1 = 2 |T|
    EXPECT_NEAR(b.dot(one), 2.0 * m.element(0).area, 1e-13);
  }
}
