#pragma once

#include "hho/basis.hpp"
#include "hho/mesh.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace hho {

/// Index layout of the unknowns attached to one element: the cell block
/// (P^{k-1}(T), empty for k = 0) followed by one P^k(F) block per face, in the
/// order of the element's face loop.
struct LocalLayout {
  int k = 0;
  std::size_t num_faces = 0;

  std::size_t cell_size() const { return poly_dim(k - 1); }
  std::size_t face_size() const { return static_cast<std::size_t>(k + 1); }
  std::size_t face_offset(std::size_t local_face) const { return cell_size() + local_face * face_size(); }
  std::size_t size() const { return cell_size() + num_faces * face_size(); }
};

/// A local hybrid vector: flat coefficients plus the layout to address its blocks.
struct LocalHhoVector {
  LocalLayout layout;
  Eigen::VectorXd values;

  auto cell() { return values.segment(0, static_cast<Eigen::Index>(layout.cell_size())); }
  auto cell() const { return values.segment(0, static_cast<Eigen::Index>(layout.cell_size())); }
  auto face(std::size_t i) {
    return values.segment(static_cast<Eigen::Index>(layout.face_offset(i)),
                          static_cast<Eigen::Index>(layout.face_size()));
  }
  auto face(std::size_t i) const {
    return values.segment(static_cast<Eigen::Index>(layout.face_offset(i)),
                          static_cast<Eigen::Index>(layout.face_size()));
  }
};

/// Quadrature order used by every local HHO form of degree k.
constexpr int form_order(int k) { return 2 * (k + 1); }
/// Quadrature order used when projecting smooth (non-polynomial) data.
constexpr int smooth_order(int k) { return 2 * k + 4; }

/// Potential reconstruction on one element. The basis has degree k+1; the
/// cell unknowns live on its first poly_dim(k-1) functions.
struct Reconstruction {
  int k = 0;
  LocalLayout layout;
  CellBasis basis;
  Grams grams;
  Eigen::VectorXd basis_integrals;  // int_T phi_j
  Eigen::MatrixXd matrix;           // local unknowns -> P^{k+1}(T) coefficients
  /// For k = 0: the functional giving the cell value v_T from the face values
  /// (weighted face average with weights d_TF |F| / (2 |T|)). Empty for k >= 1.
  Eigen::RowVectorXd cell_value;
};

struct LocalOperators {
  std::size_t element = 0;
  int k = 0;
  Reconstruction reconstruction;
  Eigen::MatrixXd stabilization;  // S_T
  Eigen::MatrixXd stiffness;      // A_T = P^T G P + S_T
  Eigen::MatrixXd norm_gram;      // N_T, Gram of the discrete H1 norm
  Eigen::MatrixXd cell_mass;      // Gram of v_T in L2(T), in local unknowns

  const LocalLayout& layout() const { return reconstruction.layout; }
};

LocalLayout local_layout(const PolyMesh& mesh, std::size_t element, int k);

/// Local interpolator: cell block pi_T^{k-1} v, face blocks pi_F^k v.
LocalHhoVector interpolate(const PolyMesh& mesh, std::size_t element, int k, const ScalarFunction& v,
                           int order = -1);

/// Solves the reconstruction problem for all local unknowns at once: the
/// stiffness Gram of P^{k+1}(T) bordered by the mean-value constraint.
/// Throws NumericalError if the bordered system is singular.
Reconstruction build_reconstruction(const PolyMesh& mesh, std::size_t element, int k);

/// s_T from the cell and face differences between the unknowns and the
/// interpolate of their own reconstruction.
Eigen::MatrixXd build_stabilization(const PolyMesh& mesh, std::size_t element,
                                    const Reconstruction& rec);

struct LocalForms {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd norm_gram;
  Eigen::MatrixXd cell_mass;
};

LocalForms build_local_forms(const PolyMesh& mesh, std::size_t element, const Reconstruction& rec,
                             const Eigen::MatrixXd& stabilization);

LocalOperators build_local_operators(const PolyMesh& mesh, std::size_t element, int k);

struct EtaBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  /// Smallest eta satisfying both coercivity and boundedness on this element.
  double eta() const { return std::max(1.0 / lambda_min, lambda_max); }
};

/// Extreme generalized eigenvalues of A_T v = lambda N_T v on the complement
/// of the shared kernel span{I_T^k 1}. Throws NumericalError (reported as an
/// ST1 violation) when N_T is not definite there.
EtaBounds eta_bounds(const PolyMesh& mesh, const LocalOperators& ops);

/// Elliptic projection P_T(I_T^k v), coefficients in the reconstruction basis.
Eigen::VectorXd elliptic_project(const PolyMesh& mesh, const LocalOperators& ops,
                                 const ScalarFunction& v, int order = -1);

/// Cell value v_T at x (constant d_TF-weighted face average when k = 0).
double cell_value(const LocalOperators& ops, const Eigen::VectorXd& local, const Point& x);

/// Right-hand side int_T f v_T for every local unknown.
Eigen::VectorXd local_load(const PolyMesh& mesh, const LocalOperators& ops, const ScalarFunction& f,
                           int order = -1);

}  // namespace hho
