#pragma once

#include "hho/basis.hpp"
#include "hho/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <vector>

namespace hho {

/// Crouzeix-Raviart system on a conforming triangle mesh. One unknown per
/// interior face, numbered by increasing face id.
struct CrSystem {
  std::vector<std::size_t> dof_of_face;  // npos on boundary faces
  std::vector<std::size_t> face_of_dof;
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd load;
  Eigen::VectorXd solution;  // empty until cr_solve

  std::size_t size() const { return face_of_dof.size(); }
};

/// Local CR stiffness |T| grad(phi_i) . grad(phi_j), rows in face-loop order.
Eigen::Matrix3d cr_local_stiffness(const PolyMesh& mesh, std::size_t element);

/// Value of the CR basis function attached to local face i at x.
double cr_basis_value(const PolyMesh& mesh, std::size_t element, std::size_t local_face, const Point& x);

/// Throws MeshError unless every element is a triangle and no node hangs.
void require_conforming_triangles(const PolyMesh& mesh);

CrSystem cr_assemble(const PolyMesh& mesh, const ScalarFunction& f, int order = 6);
/// Sparse Cholesky solve; throws NumericalError on failure.
void cr_solve(CrSystem& system);

/// Broken energy error ||grad_h(u - u_h)||.
double cr_energy_error(const PolyMesh& mesh, const CrSystem& system, const VectorFunction& grad_u,
                       int order = 6);

/// L2 Gram of piecewise-affine CR functions on the interior-face unknowns.
Eigen::SparseMatrix<double> cr_mass(const PolyMesh& mesh, const CrSystem& system);

/// Lowest-order Raviart-Thomas field tau = abar + (x - x_T) q on each triangle.
struct RtnField {
  std::vector<Point> abar;
  std::vector<double> q;
  std::vector<Point> anchor;  // x_T, the centroid

  Point value(std::size_t element, const Point& x) const { return abar[element] + (x - anchor[element]) * q[element]; }
  double divergence(std::size_t element) const { return 2.0 * q[element]; }
};

/// Matches the three face fluxes of tau on every triangle. Throws
/// NumericalError on a degenerate local system.
RtnField rtn_interpolate(const PolyMesh& mesh, const VectorFunction& tau, int order = 8);

/// Per element, per local face: the constant normal trace tau_h . n_TF.
using NormalFluxes = std::vector<std::vector<double>>;

NormalFluxes rtn_normal_fluxes(const PolyMesh& mesh, const RtnField& field);

/// Sum_T Sum_F |F| (tau . n_TF) v_F for face-constant fluxes and face values.
double magic_residual(const PolyMesh& mesh, const NormalFluxes& fluxes, const std::vector<double>& face_values);

/// Same sum with a general field: the flux integrals are taken by face
/// quadrature, so any polygonal mesh works.
double magic_residual(const PolyMesh& mesh, const VectorFunction& tau, const std::vector<double>& face_values,
                      int order = 8);

/// Scale used to make magic residuals relative: Sum |F| |tau . n| |v_F|.
double magic_scale(const PolyMesh& mesh, const NormalFluxes& fluxes, const std::vector<double>& face_values);

}  // namespace hho
