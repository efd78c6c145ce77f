#include "hho/basis.hpp"

#include "hho/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hho {

namespace {

std::vector<std::array<int, 2>> monomial_exponents(int degree) {
  std::vector<std::array<int, 2>> e;
  for (int d = 0; d <= degree; ++d)
    for (int j = 0; j <= d; ++j) e.push_back({d - j, j});
  return e;
}

// Powers 0..n of t, with t^-1 and t^-2 read as 0 (they only ever multiply
// a vanishing exponent factor).
std::vector<double> powers(double t, int n) {
  std::vector<double> p(static_cast<std::size_t>(n + 1), 1.0);
  for (int i = 1; i <= n; ++i) p[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i - 1)] * t;
  return p;
}

}  // namespace

CellBasis::CellBasis(const PolyMesh& mesh, std::size_t element, int degree, Orthonormalization mode)
    : degree_(degree),
      center_(mesh.element(element).centroid),
      scale_(mesh.element(element).diameter),
      exponents_(monomial_exponents(degree)) {
  const bool ortho = mode == Orthonormalization::always ||
                     (mode == Orthonormalization::automatic && degree >= 4);
  if (!ortho || degree < 0) return;
  const QuadRule q = cell_quadrature(mesh, element, 2 * degree);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size(), size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Eigen::VectorXd phi = values(q.points[i]);
    M.noalias() += q.weights[i] * phi * phi.transpose();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw NumericalError("cell basis: monomial mass matrix not positive definite on element " +
                         std::to_string(element));
  const Eigen::MatrixXd L = llt.matrixL();
  transform_ = L.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size())));
}

Eigen::VectorXd CellBasis::values(const Point& x) const {
  const Point xi = (x - center_) / scale_;
  const auto px = powers(xi.x(), degree_);
  const auto py = powers(xi.y(), degree_);
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    const auto [a, b] = exponents_[i];
    v[static_cast<Eigen::Index>(i)] = px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b)];
  }
  if (transform_.size() != 0) return transform_ * v;
  return v;
}

Eigen::MatrixX2d CellBasis::gradients(const Point& x) const {
  const Point xi = (x - center_) / scale_;
  const auto px = powers(xi.x(), degree_);
  const auto py = powers(xi.y(), degree_);
  Eigen::MatrixX2d g(size(), 2);
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    const auto [a, b] = exponents_[i];
    const auto r = static_cast<Eigen::Index>(i);
    g(r, 0) = a > 0 ? a * px[static_cast<std::size_t>(a - 1)] * py[static_cast<std::size_t>(b)] / scale_ : 0.0;
    g(r, 1) = b > 0 ? b * px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b - 1)] / scale_ : 0.0;
  }
  if (transform_.size() != 0) return transform_ * g;
  return g;
}

Eigen::VectorXd CellBasis::laplacians(const Point& x) const {
  const Point xi = (x - center_) / scale_;
  const auto px = powers(xi.x(), degree_);
  const auto py = powers(xi.y(), degree_);
  const double s2 = scale_ * scale_;
  Eigen::VectorXd l(size());
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    const auto [a, b] = exponents_[i];
    double v = 0.0;
    if (a > 1) v += a * (a - 1) * px[static_cast<std::size_t>(a - 2)] * py[static_cast<std::size_t>(b)];
    if (b > 1) v += b * (b - 1) * px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b - 2)];
    l[static_cast<Eigen::Index>(i)] = v / s2;
  }
  if (transform_.size() != 0) return transform_ * l;
  return l;
}

FaceBasis::FaceBasis(const PolyMesh& mesh, std::size_t face, int degree)
    : degree_(degree),
      midpoint_(mesh.face(face).midpoint),
      tangent_(mesh.face(face).tangent),
      length_(mesh.face(face).length) {}

Eigen::VectorXd FaceBasis::values(const Point& x) const {
  const double s = coordinate(x);
  Eigen::VectorXd v(size());
  double p = 1.0;
  for (int j = 0; j <= degree_; ++j, p *= s) v[j] = p;
  return v;
}

Grams grams(const PolyMesh& mesh, std::size_t element, const CellBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Grams g{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  const QuadRule q = cell_quadrature(mesh, element, 2 * std::max(basis.degree(), 0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Eigen::VectorXd phi = basis.values(q.points[i]);
    const Eigen::MatrixX2d dphi = basis.gradients(q.points[i]);
    g.mass.noalias() += q.weights[i] * phi * phi.transpose();
    g.stiffness.noalias() += q.weights[i] * dphi * dphi.transpose();
  }
  return g;
}

Grams grams(const PolyMesh& mesh, std::size_t element, int degree) {
  return grams(mesh, element, CellBasis(mesh, element, degree));
}

Eigen::MatrixXd face_mass(const PolyMesh& mesh, std::size_t face, const FaceBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const QuadRule q = face_quadrature(mesh, face, 2 * basis.degree());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Eigen::VectorXd psi = basis.values(q.points[i]);
    M.noalias() += q.weights[i] * psi * psi.transpose();
  }
  return M;
}

Eigen::VectorXd l2_project_cell(const PolyMesh& mesh, std::size_t element, const CellBasis& basis,
                                const ScalarFunction& v, int order) {
  if (order < 0) order = projection_order(basis.degree());
  const Grams g = grams(mesh, element, basis);
  const QuadRule q = cell_quadrature(mesh, element, order);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < q.size(); ++i) rhs += q.weights[i] * v(q.points[i]) * basis.values(q.points[i]);
  Eigen::LLT<Eigen::MatrixXd> llt(g.mass);
  if (llt.info() != Eigen::Success)
    throw NumericalError("l2_project_cell: singular mass matrix on element " + std::to_string(element));
  return llt.solve(rhs);
}

Eigen::VectorXd l2_project_cell(const PolyMesh& mesh, std::size_t element, int degree,
                                const ScalarFunction& v, int order) {
  return l2_project_cell(mesh, element, CellBasis(mesh, element, degree), v, order);
}

Eigen::VectorXd l2_project_face(const PolyMesh& mesh, std::size_t face, int degree,
                                const ScalarFunction& v, int order) {
  if (order < 0) order = projection_order(degree);
  const FaceBasis basis(mesh, face, degree);
  const QuadRule q = face_quadrature(mesh, face, order);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < q.size(); ++i) rhs += q.weights[i] * v(q.points[i]) * basis.values(q.points[i]);
  Eigen::LLT<Eigen::MatrixXd> llt(face_mass(mesh, face, basis));
  if (llt.info() != Eigen::Success)
    throw NumericalError("l2_project_face: singular mass matrix on face " + std::to_string(face));
  return llt.solve(rhs);
}

}  // namespace hho
