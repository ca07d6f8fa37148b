#pragma once

#include <memory>

#include "chanreg/fields.hpp"

namespace chanreg {

// Per-mode vertical solves for the two discrete projections.
//
// H_N: fields divergence-free at every node with u3 = 0 on the walls.
// X_N: H_N with all components zero on the walls.
//
// Both are W-orthogonal (volume quadrature inner product). Per horizontal mode the
// velocity is split into components along and across k; the across part is left
// alone (H_N) or has its wall values dropped (X_N), and the along/normal pair is
// parametrized by the normal velocity phi with along = (i/|k|) D phi. The normal
// equations [(1/k^2) D'WD + W] phi = rhs share one generalized eigenbasis for all
// k, so applying either projection costs two dense products per plane.
class ProjectionContext
{
public:
  explicit ProjectionContext(GridPtr grid);

  Grid const &grid() const { return *grid_; }
  GridPtr const &grid_ptr() const { return grid_; }

  VectorField leray(VectorField const &u) const;
  VectorField no_slip(VectorField const &u) const;

  // The same on mixed data, each component an (nx*ny) x nz mode-by-node matrix.
  using Mixed3 = std::array<CMatrix, 3>;
  Mixed3 leray(Mixed3 const &u) const { return apply(u, h_, false); }
  Mixed3 no_slip(Mixed3 const &u) const { return apply(u, x_, true); }

  // Orthonormal basis of nodal profiles phi with phi = D phi = 0 on both walls.
  Matrix const &clamped_basis() const { return phi_; }

private:
  struct Space
  {
    Matrix basis;       // nz x r profiles, W-orthonormal eigenvectors of D'WD
    Matrix dbasis;      // D * basis
    Vector eigvals;
    Matrix from_along;  // W * dbasis
    Matrix from_normal; // W * basis
  };

  VectorField apply(VectorField const &u, Space const &s, bool clamp_walls) const;
  Mixed3 apply(Mixed3 const &u, Space const &s, bool clamp_walls) const;

  GridPtr grid_;
  Matrix phi_;
  Space h_, x_;
};

// Shared context for any grid of the given shape; built once and reused.
std::shared_ptr<ProjectionContext const> projection_context(GridPtr const &grid);

// W-orthogonal projection onto H_N. The correction u - Pu equals grad q at interior
// nodes for some nodal q.
VectorField leray_project(VectorField const &u);
// W-orthogonal projection onto X_N.
VectorField project_no_slip(VectorField const &u);

// A u = -P(lap u). Requires the divergence_free and no_slip flags.
VectorField stokes_apply(VectorField const &u);

// Dealiased (u . grad) v: band-limited inputs, nodal products, band truncation.
VectorField convective_term(VectorField const &u, VectorField const &v);

// B(u, v) = P((u . grad) v).
VectorField bilinear_b(VectorField const &u, VectorField const &v);

// sqrt(<u, A u>). Requires the space flags.
Real v_norm(VectorField const &u);

} // namespace chanreg
