#pragma once

#include "hho/mesh.hpp"

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hho {

/// Quadrature nodes in physical coordinates with positive weights.
struct QuadRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;  // algebraic exactness

  std::size_t size() const { return points.size(); }

  template <class Fn>
  double integrate(Fn&& f) const {
    double s = 0.0;
    for (std::size_t q = 0; q < points.size(); ++q) s += weights[q] * f(points[q]);
    return s;
  }
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Highest degree served by a fully symmetric triangle rule; above it a
/// collapsed (Duffy) Gauss product rule is used.
inline constexpr int max_symmetric_triangle_degree = 19;
inline constexpr int max_quadrature_degree = 60;

/// n-point Gauss-Legendre rule on [-1, 1] (nodes ascending).
std::vector<std::pair<double, double>> gauss_legendre(int npoints);

/// Rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
QuadRule reference_triangle_rule(int order);

QuadRule triangle_rule(const Point& a, const Point& b, const Point& c, int order);

/// Sub-triangulates the element by fanning from its centroid over the face
/// loop and applies a triangle rule of the requested exactness on each piece.
QuadRule cell_quadrature(const PolyMesh& mesh, std::size_t element, int order);

/// Gauss-Legendre rule on a mesh face.
QuadRule face_quadrature(const PolyMesh& mesh, std::size_t face, int order);

}  // namespace hho
