#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "vemsf/macrodiv.hpp"
#include "vemsf/mesh.hpp"
#include "vemsf/poly.hpp"

namespace vemsf {

enum class Family { NC, C };
enum class MethodKind { SF, Standard };

// Local DoF ordering:
//   NC: per cell edge (loop order) k moments against edge Legendre in the
//       edge's canonical orientation, then dim P_{k-2} interior moments.
//   C : vertex values (loop order), per cell edge (k-1) moments (canonical
//       orientation), then dim P_{k-2} interior moments.
struct ElementDofLayout {
  Family family = Family::NC;
  int k = 1;
  int n_edges = 0;
  int edge_block_size = 0;  // NC: k, C: k-1
  int n_interior = 0;       // dim P_{k-2}
  int n_dofs = 0;

  int vertex_dof(int v) const { return v; }  // C only
  int edge_dof(int e, int i) const {
    return (family == Family::C ? n_edges : 0) + e * edge_block_size + i;
  }
  int interior_dof(int i) const {
    return (family == Family::C ? n_edges : 0) + n_edges * edge_block_size + i;
  }
};

ElementDofLayout make_layout(Family family, int k, int n_edges);

// Per-cell geometry bundle. Canonical edge orientation (the one shared by the
// two cells incident to a mesh edge) is recorded by `edge_sign`: +1 when it
// agrees with the CCW loop direction. The standalone overload wraps the
// polygon in a single-cell mesh, so signs follow the same vertex-index rule.
struct ElementContext {
  std::vector<Vec2> polygon;  // CCW vertex loop
  std::vector<double> edge_sign;
  SubTriangulation st;
  ElementGeometry geo;
};

ElementContext make_context(const PolygonalMesh& mesh, int cell,
                            SubTriStrategy strategy = SubTriStrategy::InballFan);
ElementContext make_context(const std::vector<Vec2>& polygon,
                            SubTriStrategy strategy = SubTriStrategy::InballFan);

// All computable per-element operators. Matrices act on local DoF vectors;
// polynomial coefficients are over the cell basis monomials. Keeps a pointer
// to the context, which must outlive the operators. The macro div space and
// the gradient pairing B are built on first use, so assemblies that never
// touch the gradient projector (the stabilized variants) don't pay for them;
// instances are not meant to be shared across threads.
class ElementOperators {
 public:
  ElementOperators(const ElementContext& ctx, Family family, int k, MacroMode mode,
                   BasisKind kind, int quad_exactness);

  const ElementDofLayout& layout() const { return layout_; }
  const CellBasis& basis() const { return basis_; }
  const MacroDivSpace& macro() const { ensure_macro(); return macro_; }
  const ElementContext& ctx() const { return *ctx_; }
  int quad_exactness() const { return quad_exactness_; }

  // DoFs of each cell basis monomial, n_dofs x dim P_k
  const Eigen::MatrixXd& D() const { return D_; }
  // Ritz (H^1) projector onto P_k: coefficients from DoFs, dim P_k x n_dofs
  const Eigen::MatrixXd& PiStar() const { return PiStar_; }
  // L2 projector onto P_k (Ritz + degree k-2 moment correction)
  const Eigen::MatrixXd& Q() const { return Q_; }
  // gradient projection onto the macro space: row j = (grad v, Phi_j)_K
  const Eigen::MatrixXd& B() const { ensure_macro(); return B_; }
  // loop-oriented edge Legendre representation of the trace on edge e:
  // NC: the k known moments; C: full P_k trace coefficients (k+1 rows)
  const Eigen::MatrixXd& trace_rows(int e) const { return V_[e]; }

  // macro coefficients of Q^div(grad v) for a local DoF vector
  Eigen::VectorXd project_virtual_gradient(const Eigen::VectorXd& dofs) const;

  // local DoF vector of an explicit function
  Eigen::VectorXd interpolate(const std::function<double(const Vec2&)>& u) const;

 private:
  void ensure_macro() const;

  const ElementContext* ctx_;
  ElementDofLayout layout_;
  MacroMode mode_;
  int quad_exactness_;
  CellBasis basis_;
  mutable bool macro_built_ = false;
  mutable MacroDivSpace macro_;
  std::vector<Eigen::MatrixXd> V_;
  Eigen::MatrixXd D_, PiStar_, Q_;
  mutable Eigen::MatrixXd B_;
};

struct LocalMatrices {
  Eigen::MatrixXd A;     // stiffness incl. the alpha reaction part
  Eigen::MatrixXd M;     // Q-mass (Q^T H Q), reaction part before alpha scaling
  Eigen::VectorXd load;  // (f, Q psi_j)_K
  MethodKind method = MethodKind::SF;
};

// A = B^T Gram^-1 B + alpha M, no stabilization anywhere
LocalMatrices local_matrices_sf(const ElementOperators& ops, double alpha,
                                const std::function<double(const Vec2&)>& f);

// A = PiStar^T G PiStar + (I - D PiStar)^T (I - D PiStar) + alpha M
LocalMatrices local_matrices_standard(const ElementOperators& ops, double alpha,
                                      const std::function<double(const Vec2&)>& f);

}  // namespace vemsf
