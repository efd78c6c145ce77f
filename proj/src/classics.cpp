#include "hho/classics.hpp"

#include "hho/errors.hpp"
#include "hho/quadrature.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <string>

namespace hho {

namespace {

using Eigen::Index;
using Triplet = Eigen::Triplet<double>;

// grad phi_F = |F| n_TF / |T|: phi_F is 1 on F (on average) and -1 at the opposite vertex.
Point cr_gradient(const PolyMesh& mesh, const Element& el, std::size_t i) {
  return mesh.face(el.faces[i].face).length / el.area * el.faces[i].normal;
}

}  // namespace

void require_conforming_triangles(const PolyMesh& mesh) {
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    if (el.vertices.size() != 3) throw MeshError("Crouzeix-Raviart needs triangles", e);
    if (el.faces.size() != 3) throw MeshError("hanging node on a Crouzeix-Raviart element", e);
  }
}

Eigen::Matrix3d cr_local_stiffness(const PolyMesh& mesh, std::size_t element) {
  const Element& el = mesh.element(element);
  Eigen::Matrix3d K;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      K(Index(i), Index(j)) = el.area * cr_gradient(mesh, el, i).dot(cr_gradient(mesh, el, j));
  return K;
}

double cr_basis_value(const PolyMesh& mesh, std::size_t element, std::size_t local_face, const Point& x) {
  const Element& el = mesh.element(element);
  return 1.0 + cr_gradient(mesh, el, local_face).dot(x - mesh.face(el.faces[local_face].face).midpoint);
}

CrSystem cr_assemble(const PolyMesh& mesh, const ScalarFunction& f, int order) {
  require_conforming_triangles(mesh);
  CrSystem sys;
  sys.dof_of_face.assign(mesh.num_faces(), npos);
  for (std::size_t fc = 0; fc < mesh.num_faces(); ++fc) {
    if (mesh.face(fc).boundary) continue;
    sys.dof_of_face[fc] = sys.face_of_dof.size();
    sys.face_of_dof.push_back(fc);
  }
  const auto n = Index(sys.size());
  sys.load = Eigen::VectorXd::Zero(n);
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    const Eigen::Matrix3d K = cr_local_stiffness(mesh, e);
    const QuadRule q = cell_quadrature(mesh, e, order);
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t gi = sys.dof_of_face[el.faces[i].face];
      if (gi == npos) continue;
      sys.load[Index(gi)] += q.integrate([&](const Point& x) { return f(x) * cr_basis_value(mesh, e, i, x); });
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t gj = sys.dof_of_face[el.faces[j].face];
        if (gj != npos) triplets.emplace_back(Index(gi), Index(gj), K(Index(i), Index(j)));
      }
    }
  }
  sys.stiffness.resize(n, n);
  sys.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

void cr_solve(CrSystem& system) {
  if (system.size() == 0) {
    system.solution.resize(0);
    return;
  }
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(system.stiffness);
  if (llt.info() != Eigen::Success) throw NumericalError("Crouzeix-Raviart: Cholesky factorization failed");
  system.solution = llt.solve(system.load);
}

double cr_energy_error(const PolyMesh& mesh, const CrSystem& system, const VectorFunction& grad_u, int order) {
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    Point gh = Point::Zero();
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t g = system.dof_of_face[el.faces[i].face];
      if (g != npos) gh += system.solution[Index(g)] * cr_gradient(mesh, el, i);
    }
    sum += cell_quadrature(mesh, e, order).integrate([&](const Point& x) { return (grad_u(x) - gh).squaredNorm(); });
  }
  return std::sqrt(sum);
}

Eigen::SparseMatrix<double> cr_mass(const PolyMesh& mesh, const CrSystem& system) {
  std::vector<Triplet> triplets;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    const QuadRule q = cell_quadrature(mesh, e, 2);
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t gi = system.dof_of_face[el.faces[i].face];
      if (gi == npos) continue;
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t gj = system.dof_of_face[el.faces[j].face];
        if (gj == npos) continue;
        triplets.emplace_back(Index(gi), Index(gj), q.integrate([&](const Point& x) {
          return cr_basis_value(mesh, e, i, x) * cr_basis_value(mesh, e, j, x);
        }));
      }
    }
  }
  Eigen::SparseMatrix<double> M(Index(system.size()), Index(system.size()));
  M.setFromTriplets(triplets.begin(), triplets.end());
  return M;
}

RtnField rtn_interpolate(const PolyMesh& mesh, const VectorFunction& tau, int order) {
  RtnField field;
  const std::size_t ne = mesh.num_elements();
  field.abar.resize(ne);
  field.q.resize(ne);
  field.anchor.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const Element& el = mesh.element(e);
    if (el.faces.size() != 3) throw MeshError("RTN interpolation needs triangles", e);
    // |F| (abar . n + q d_TF) = int_F tau . n on each face.
    Eigen::Matrix3d A;
    Eigen::Vector3d b;
    for (std::size_t i = 0; i < 3; ++i) {
      const ElementFace& ef = el.faces[i];
      const double len = mesh.face(ef.face).length;
      A.row(Index(i)) << len * ef.normal.x(), len * ef.normal.y(), len * ef.distance;
      b[Index(i)] = face_quadrature(mesh, ef.face, order).integrate([&](const Point& x) {
        return tau(x).dot(ef.normal);
      });
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
    if (!lu.isInvertible())
      throw NumericalError("RTN interpolation: degenerate triangle " + std::to_string(e));
    const Eigen::Vector3d c = lu.solve(b);
    field.abar[e] = c.head<2>();
    field.q[e] = c[2];
    field.anchor[e] = el.centroid;
  }
  return field;
}

NormalFluxes rtn_normal_fluxes(const PolyMesh& mesh, const RtnField& field) {
  NormalFluxes out(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    for (const ElementFace& ef : el.faces)
      out[e].push_back(field.abar[e].dot(ef.normal) + field.q[e] * ef.distance);
  }
  return out;
}

double magic_residual(const PolyMesh& mesh, const NormalFluxes& fluxes, const std::vector<double>& face_values) {
  double r = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    for (std::size_t i = 0; i < el.faces.size(); ++i) {
      const std::size_t fc = el.faces[i].face;
      r += mesh.face(fc).length * fluxes[e][i] * face_values[fc];
    }
  }
  return r;
}

double magic_residual(const PolyMesh& mesh, const VectorFunction& tau, const std::vector<double>& face_values,
                      int order) {
  double r = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    for (const ElementFace& ef : mesh.element(e).faces) {
      const double flux =
          face_quadrature(mesh, ef.face, order).integrate([&](const Point& x) { return tau(x).dot(ef.normal); });
      r += flux * face_values[ef.face];
    }
  }
  return r;
}

double magic_scale(const PolyMesh& mesh, const NormalFluxes& fluxes, const std::vector<double>& face_values) {
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.element(e);
    for (std::size_t i = 0; i < el.faces.size(); ++i) {
      const std::size_t fc = el.faces[i].face;
      s += mesh.face(fc).length * std::abs(fluxes[e][i] * face_values[fc]);
    }
  }
  return s;
}

}  // namespace hho
