#pragma once

#include "hho/mesh.hpp"
#include "hho/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

namespace hho {

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Point(const Point&)>;

/// Dimension of P^degree in two variables (0 for negative degrees).
constexpr std::size_t poly_dim(int degree) {
  return degree < 0 ? 0 : static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
}

enum class Orthonormalization { automatic, never, always };

/// Basis of P^degree(T): scaled monomials ((x - x_T) / h_T)^alpha ordered by
/// total degree, so that the first poly_dim(l) functions span P^l(T) for
/// every l <= degree. Optionally L2-orthonormalized through the inverse
/// Cholesky factor of the monomial mass matrix, which keeps that hierarchy.
/// The automatic mode orthonormalizes from degree 4 on.
class CellBasis {
 public:
  CellBasis() = default;
  CellBasis(const PolyMesh& mesh, std::size_t element, int degree,
            Orthonormalization mode = Orthonormalization::automatic);

  int degree() const { return degree_; }
  std::size_t size() const { return exponents_.size(); }
  bool orthonormalized() const { return transform_.size() != 0; }
  const std::vector<std::array<int, 2>>& exponents() const { return exponents_; }
  const Point& center() const { return center_; }
  double scale() const { return scale_; }

  Eigen::VectorXd values(const Point& x) const;
  /// Row i holds the gradient of basis function i.
  Eigen::MatrixX2d gradients(const Point& x) const;
  Eigen::VectorXd laplacians(const Point& x) const;

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Point& x) const {
    return coeffs.dot(values(x).head(coeffs.size()));
  }
  Point evaluate_gradient(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Point& x) const {
    return gradients(x).topRows(coeffs.size()).transpose() * coeffs;
  }

 private:
  int degree_ = -1;
  Point center_ = Point::Zero();
  double scale_ = 1.0;
  std::vector<std::array<int, 2>> exponents_;
  Eigen::MatrixXd transform_;  // lower triangular, empty when raw monomials
};

/// Basis of P^degree(F): powers s^j of the arc-length coordinate s in [-1, 1],
/// oriented by the global face tangent so both neighbours agree.
class FaceBasis {
 public:
  FaceBasis(const PolyMesh& mesh, std::size_t face, int degree);

  int degree() const { return degree_; }
  std::size_t size() const { return static_cast<std::size_t>(degree_ + 1); }
  double coordinate(const Point& x) const { return 2.0 * (x - midpoint_).dot(tangent_) / length_; }
  Eigen::VectorXd values(const Point& x) const;

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Point& x) const {
    return coeffs.dot(values(x).head(coeffs.size()));
  }

 private:
  int degree_;
  Point midpoint_;
  Point tangent_;
  double length_;
};

struct Grams {
  Eigen::MatrixXd mass;       // int_T phi_i phi_j
  Eigen::MatrixXd stiffness;  // int_T grad phi_i . grad phi_j
};

/// Mass and stiffness matrices of a cell basis (exact quadrature by default).
Grams grams(const PolyMesh& mesh, std::size_t element, const CellBasis& basis);
Grams grams(const PolyMesh& mesh, std::size_t element, int degree);

Eigen::MatrixXd face_mass(const PolyMesh& mesh, std::size_t face, const FaceBasis& basis);

/// Default integration order for projecting a non-polynomial function onto P^l.
constexpr int projection_order(int degree) { return 2 * degree + degree + 2; }

/// Coefficients of the L2-orthogonal projection onto P^degree(T) in
/// CellBasis(mesh, element, degree). Throws NumericalError on a singular mass.
Eigen::VectorXd l2_project_cell(const PolyMesh& mesh, std::size_t element, int degree,
                                const ScalarFunction& v, int order = -1);
Eigen::VectorXd l2_project_cell(const PolyMesh& mesh, std::size_t element, const CellBasis& basis,
                                const ScalarFunction& v, int order = -1);

/// Coefficients of the L2-orthogonal projection onto P^degree(F) in FaceBasis.
Eigen::VectorXd l2_project_face(const PolyMesh& mesh, std::size_t face, int degree,
                                const ScalarFunction& v, int order = -1);

}  // namespace hho
