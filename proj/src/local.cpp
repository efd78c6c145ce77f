#include "hho/local.hpp"

#include "hho/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace hho {

namespace {

using Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

std::string on_element(std::size_t e) { return " on element " + std::to_string(e); }

}  // namespace

LocalLayout local_layout(const PolyMesh& mesh, std::size_t element, int k) {
  return LocalLayout{k, mesh.element(element).faces.size()};
}

LocalHhoVector interpolate(const PolyMesh& mesh, std::size_t element, int k, const ScalarFunction& v,
                           int order) {
  if (order < 0) order = smooth_order(k);
  const Element& el = mesh.element(element);
  LocalHhoVector out{local_layout(mesh, element, k), {}};
  out.values = Eigen::VectorXd::Zero(idx(out.layout.size()));
  if (k >= 1) {
    // Project on the prefix of the reconstruction basis that spans P^{k-1}(T).
    const CellBasis basis(mesh, element, k + 1);
    const Index nc = idx(out.layout.cell_size());
    const QuadRule q = cell_quadrature(mesh, element, std::max(order, 2 * (k + 1)));
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nc);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Eigen::VectorXd phi = basis.values(q.points[i]).head(nc);
      M.noalias() += q.weights[i] * phi * phi.transpose();
      rhs += q.weights[i] * v(q.points[i]) * phi;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError("interpolate: singular cell mass" + on_element(element));
    out.cell() = llt.solve(rhs);
  }
  for (std::size_t f = 0; f < el.faces.size(); ++f)
    out.face(f) = l2_project_face(mesh, el.faces[f].face, k, v, order);
  return out;
}

Reconstruction build_reconstruction(const PolyMesh& mesh, std::size_t element, int k) {
  if (k < 0) throw std::invalid_argument("build_reconstruction: k must be >= 0");
  const Element& el = mesh.element(element);
  Reconstruction rec;
  rec.k = k;
  rec.layout = local_layout(mesh, element, k);
  rec.basis = CellBasis(mesh, element, k + 1);
  rec.grams = grams(mesh, element, rec.basis);

  const Index nr = idx(rec.basis.size());
  const Index nc = idx(rec.layout.cell_size());
  const Index nt = idx(rec.layout.size());
  const int order = form_order(k);

  rec.basis_integrals = Eigen::VectorXd::Zero(nr);
  {
    const QuadRule q = cell_quadrature(mesh, element, k + 1);
    for (std::size_t i = 0; i < q.size(); ++i) rec.basis_integrals += q.weights[i] * rec.basis.values(q.points[i]);
  }

  // Right-hand side of the gradient equation, one column per local unknown,
  // with the cell term integrated by parts:
  //   int_T grad v_T . grad w + sum_F int_F (v_F - v_T) grad w . n_TF.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nr, nt);
  rhs.leftCols(nc) = rec.grams.stiffness.leftCols(nc);
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(nt);
  if (k == 0) rec.cell_value = Eigen::RowVectorXd::Zero(nt);

  for (std::size_t f = 0; f < el.faces.size(); ++f) {
    const ElementFace& ef = el.faces[f];
    const FaceBasis fb(mesh, ef.face, k);
    const QuadRule q = face_quadrature(mesh, ef.face, order);
    const Index off = idx(rec.layout.face_offset(f));
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Eigen::VectorXd phi = rec.basis.values(q.points[i]);
      const Eigen::VectorXd dn = rec.basis.gradients(q.points[i]) * ef.normal;
      const Eigen::VectorXd psi = fb.values(q.points[i]);
      rhs.block(0, off, nr, idx(fb.size())).noalias() += q.weights[i] * dn * psi.transpose();
      if (nc > 0) rhs.leftCols(nc).noalias() -= q.weights[i] * dn * phi.head(nc).transpose();
      if (k == 0) mean.segment(off, idx(fb.size())) += (0.5 * ef.distance * q.weights[i]) * psi.transpose();
    }
    if (k == 0) rec.cell_value(off) = mean(off) / el.area;
  }
  if (k >= 1) mean.head(nc) = rec.basis_integrals.head(nc).transpose();

  // Bordered system [G m; m^T 0]: G is singular on constants only.
  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(nr + 1, nr + 1);
  bordered.topLeftCorner(nr, nr) = rec.grams.stiffness;
  bordered.topRightCorner(nr, 1) = rec.basis_integrals;
  bordered.bottomLeftCorner(1, nr) = rec.basis_integrals.transpose();
  Eigen::MatrixXd full_rhs(nr + 1, nt);
  full_rhs.topRows(nr) = rhs;
  full_rhs.bottomRows(1) = mean;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(bordered);
  if (!lu.isInvertible())
    throw NumericalError("reconstruction: singular bordered system" + on_element(element));
  rec.matrix = lu.solve(full_rhs).topRows(nr);
  return rec;
}

Eigen::MatrixXd build_stabilization(const PolyMesh& mesh, std::size_t element, const Reconstruction& rec) {
  const Element& el = mesh.element(element);
  const int k = rec.k;
  const Index nr = idx(rec.basis.size());
  const Index nc = idx(rec.layout.cell_size());
  const Index nt = idx(rec.layout.size());
  const double h = el.diameter;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nt, nt);

  if (nc > 0) {
    // delta_T = v_T - pi_T^{k-1} p v
    const Eigen::MatrixXd Mcc = rec.grams.mass.topLeftCorner(nc, nc);
    Eigen::MatrixXd D = -Mcc.llt().solve(rec.grams.mass.topRows(nc) * rec.matrix);
    D.leftCols(nc) += Eigen::MatrixXd::Identity(nc, nc);
    S.noalias() += (1.0 / (h * h)) * D.transpose() * Mcc * D;
  }

  for (std::size_t f = 0; f < el.faces.size(); ++f) {
    const ElementFace& ef = el.faces[f];
    const FaceBasis fb(mesh, ef.face, k);
    const Index nf = idx(fb.size());
    const QuadRule q = face_quadrature(mesh, ef.face, form_order(k));
    Eigen::MatrixXd Mff = Eigen::MatrixXd::Zero(nf, nf);
    Eigen::MatrixXd Mfr = Eigen::MatrixXd::Zero(nf, nr);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Eigen::VectorXd psi = fb.values(q.points[i]);
      Mff.noalias() += q.weights[i] * psi * psi.transpose();
      Mfr.noalias() += q.weights[i] * psi * rec.basis.values(q.points[i]).transpose();
    }
    // delta_TF = v_F - pi_F^k p v
    Eigen::MatrixXd D = -Mff.llt().solve(Mfr * rec.matrix);
    D.block(0, idx(rec.layout.face_offset(f)), nf, nf) += Eigen::MatrixXd::Identity(nf, nf);
    S.noalias() += (1.0 / h) * D.transpose() * Mff * D;
  }
  return 0.5 * (S + S.transpose());
}

LocalForms build_local_forms(const PolyMesh& mesh, std::size_t element, const Reconstruction& rec,
                             const Eigen::MatrixXd& stabilization) {
  const Element& el = mesh.element(element);
  const int k = rec.k;
  const Index nc = idx(rec.layout.cell_size());
  const Index nt = idx(rec.layout.size());
  const double h = el.diameter;

  LocalForms out;
  out.stiffness = rec.matrix.transpose() * rec.grams.stiffness * rec.matrix + stabilization;
  out.stiffness = 0.5 * (out.stiffness + out.stiffness.transpose());

  out.norm_gram = Eigen::MatrixXd::Zero(nt, nt);
  out.cell_mass = Eigen::MatrixXd::Zero(nt, nt);
  if (k >= 1) {
    out.norm_gram.topLeftCorner(nc, nc) = rec.grams.stiffness.topLeftCorner(nc, nc);
    out.cell_mass.topLeftCorner(nc, nc) = rec.grams.mass.topLeftCorner(nc, nc);
  } else {
    out.cell_mass = el.area * rec.cell_value.transpose() * rec.cell_value;
  }
  for (std::size_t f = 0; f < el.faces.size(); ++f) {
    const ElementFace& ef = el.faces[f];
    const FaceBasis fb(mesh, ef.face, k);
    const QuadRule q = face_quadrature(mesh, ef.face, form_order(k));
    const Index off = idx(rec.layout.face_offset(f));
    for (std::size_t i = 0; i < q.size(); ++i) {
      // r . v = v_F(x) - v_T(x)
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(nt);
      if (k >= 1)
        r.head(nc) = -rec.basis.values(q.points[i]).head(nc).transpose();
      else
        r = -rec.cell_value;
      r.segment(off, idx(fb.size())) += fb.values(q.points[i]).transpose();
      out.norm_gram.noalias() += (q.weights[i] / h) * r.transpose() * r;
    }
  }
  out.norm_gram = 0.5 * (out.norm_gram + out.norm_gram.transpose());
  return out;
}

LocalOperators build_local_operators(const PolyMesh& mesh, std::size_t element, int k) {
  LocalOperators ops;
  ops.element = element;
  ops.k = k;
  ops.reconstruction = build_reconstruction(mesh, element, k);
  ops.stabilization = build_stabilization(mesh, element, ops.reconstruction);
  LocalForms forms = build_local_forms(mesh, element, ops.reconstruction, ops.stabilization);
  ops.stiffness = std::move(forms.stiffness);
  ops.norm_gram = std::move(forms.norm_gram);
  ops.cell_mass = std::move(forms.cell_mass);
  return ops;
}

EtaBounds eta_bounds(const PolyMesh& mesh, const LocalOperators& ops) {
  const Eigen::VectorXd z =
      interpolate(mesh, ops.element, ops.k, [](const Point&) { return 1.0; }).values;
  const Index n = z.size();
  // Orthonormal basis of the complement of z from a Householder reflection.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd C = Q.rightCols(n - 1);
  const Eigen::MatrixXd A = C.transpose() * ops.stiffness * C;
  const Eigen::MatrixXd N = C.transpose() * ops.norm_gram * C;

  Eigen::LLT<Eigen::MatrixXd> llt(N);
  if (llt.info() != Eigen::Success)
    throw NumericalError("ST1 violation: norm Gram not definite off the constants" + on_element(ops.element));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, N, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success)
    throw NumericalError("ST1 violation: generalized eigensolver failed" + on_element(ops.element));
  EtaBounds b{ges.eigenvalues().minCoeff(), ges.eigenvalues().maxCoeff()};
  if (!(b.lambda_min > 0.0))
    throw NumericalError("ST1 violation: a_T not coercive" + on_element(ops.element));
  return b;
}

Eigen::VectorXd elliptic_project(const PolyMesh& mesh, const LocalOperators& ops, const ScalarFunction& v,
                                 int order) {
  return ops.reconstruction.matrix * interpolate(mesh, ops.element, ops.k, v, order).values;
}

double cell_value(const LocalOperators& ops, const Eigen::VectorXd& local, const Point& x) {
  const Reconstruction& rec = ops.reconstruction;
  if (ops.k == 0) return rec.cell_value.dot(local);
  const Index nc = idx(rec.layout.cell_size());
  return rec.basis.values(x).head(nc).dot(local.head(nc));
}

Eigen::VectorXd local_load(const PolyMesh& mesh, const LocalOperators& ops, const ScalarFunction& f,
                           int order) {
  if (order < 0) order = smooth_order(ops.k);
  const Reconstruction& rec = ops.reconstruction;
  const Index nc = idx(rec.layout.cell_size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(idx(rec.layout.size()));
  const QuadRule q = cell_quadrature(mesh, ops.element, order);
  if (ops.k == 0) {
    const double integral = q.integrate(f);
    b = integral * rec.cell_value.transpose();
  } else {
    for (std::size_t i = 0; i < q.size(); ++i)
      b.head(nc) += q.weights[i] * f(q.points[i]) * rec.basis.values(q.points[i]).head(nc);
  }
  return b;
}

}  // namespace hho
