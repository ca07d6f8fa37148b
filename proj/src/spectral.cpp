#include "chanreg/spectral.hpp"

#include <vector>

#include <unsupported/Eigen/FFT>

#include "chanreg/lobatto.hpp"

namespace chanreg {

Grid::Grid(Index nx, Index ny, Index nz, Real px, Real py, Real L)
  : nx_(nx), ny_(ny), nz_(nz), px_(px), py_(py), L_(L)
{
  auto const rule = lobatto_rule<Real>(nz);
  z_ = L * rule.nodes;
  z_(0) = -L;
  z_(nz - 1) = L;
  wz_ = L * rule.weights;
  dz_ = rule.diff / L;
  dzz_ = dz_ * dz_;
  // Nodal -> Legendre coefficients (in the reference variable x3 / L).
  from_leg_ = legendre_vandermonde<Real>(rule.nodes, nz - 1);
  to_leg_ = from_leg_.partialPivLu().inverse();
}

Real Grid::kx(Index i) const
{
  if (nx_ % 2 == 0 && i == nx_ / 2) { return 0; }
  return 2 * pi * mode_x(i) / px_;
}

Real Grid::ky(Index j) const
{
  if (ny_ % 2 == 0 && j == ny_ / 2) { return 0; }
  return 2 * pi * mode_y(j) / py_;
}

bool Grid::in_band(Index i, Index j) const
{
  return std::abs(mode_x(i)) <= band_x() && std::abs(mode_y(j)) <= band_y();
}

bool Grid::same_shape(Grid const &o) const
{
  return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_ && px_ == o.px_ && py_ == o.py_ && L_ == o.L_;
}

GridPtr make_grid(Index nx, Index ny, Index nz, Real px, Real py, Real L)
{
  if (nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0) {
    throw std::invalid_argument("make_grid: horizontal counts must be even and >= 4");
  }
  if (nz < 5) { throw std::invalid_argument("make_grid: nz must be >= 5"); }
  if (!(px > 0) || !(py > 0) || !(L > 0)) {
    throw std::invalid_argument("make_grid: periods and half-height must be positive");
  }
  return std::make_shared<Grid const>(nx, ny, nz, px, py, L);
}

namespace {

using FFT = Eigen::FFT<Real>;

FFT &row_fft()
{
  thread_local FFT fft = [] {
    FFT f;
    f.SetFlag(FFT::Unscaled);
    f.SetFlag(FFT::HalfSpectrum);
    return f;
  }();
  return fft;
}

FFT &col_fft()
{
  thread_local FFT fft = [] {
    FFT f;
    f.SetFlag(FFT::Unscaled);
    return f;
  }();
  return fft;
}

// Real nx*ny plane (x fastest) -> full unscaled spectrum. Rows use the real
// transform; the upper half in x follows from Hermitian symmetry.
void forward_plane(Real const *src, Complex *dst, Index nx, Index ny)
{
  Index const h = nx / 2 + 1;
  thread_local std::vector<Complex> half, col, out;
  half.resize(static_cast<size_t>(h * ny));
  col.resize(static_cast<size_t>(ny));
  out.resize(static_cast<size_t>(ny));
  for (Index j = 0; j < ny; ++j) { row_fft().fwd(half.data() + j * h, src + j * nx, nx); }
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < ny; ++j) { col[static_cast<size_t>(j)] = half[static_cast<size_t>(i + h * j)]; }
    col_fft().fwd(out.data(), col.data(), ny);
    for (Index j = 0; j < ny; ++j) { dst[i + nx * j] = out[static_cast<size_t>(j)]; }
  }
  for (Index j = 0; j < ny; ++j) {
    Index const jm = (ny - j) % ny;
    for (Index i = h; i < nx; ++i) { dst[i + nx * j] = std::conj(dst[(nx - i) + nx * jm]); }
  }
}

// Real part of the unscaled inverse transform of a full spectrum.
void inverse_plane(Complex const *src, Real *dst, Index nx, Index ny)
{
  Index const h = nx / 2 + 1;
  thread_local std::vector<Complex> half, col, out;
  half.resize(static_cast<size_t>(h * ny));
  col.resize(static_cast<size_t>(ny));
  out.resize(static_cast<size_t>(ny));
  for (Index i = 0; i < h; ++i) {
    Index const im = (nx - i) % nx;
    bool empty = true;
    for (Index j = 0; j < ny; ++j) {
      Index const jm = (ny - j) % ny;
      col[static_cast<size_t>(j)] = 0.5 * (src[i + nx * j] + std::conj(src[im + nx * jm]));
      empty = empty && col[static_cast<size_t>(j)] == Complex(0);
    }
    // Band-limited data leave most high-x columns empty.
    if (empty) {
      std::fill(out.begin(), out.end(), Complex(0));
    } else {
      col_fft().inv(out.data(), col.data(), ny);
    }
    for (Index j = 0; j < ny; ++j) { half[static_cast<size_t>(i + h * j)] = out[static_cast<size_t>(j)]; }
  }
  for (Index j = 0; j < ny; ++j) { row_fft().inv(dst + j * nx, half.data() + j * h, nx); }
}

} // namespace

CArray horizontal_forward(Grid const &grid, Array const &values)
{
  if (values.size() != grid.size()) { throw GridMismatch("horizontal_forward: shape mismatch"); }
  CArray out(grid.size());
  Index const ps = grid.plane_size();
  for (Index k = 0; k < grid.nz(); ++k) {
    forward_plane(values.data() + k * ps, out.data() + k * ps, grid.nx(), grid.ny());
  }
  out /= static_cast<Real>(ps);
  return out;
}

Array horizontal_inverse(Grid const &grid, CArray const &mixed)
{
  if (mixed.size() != grid.size()) { throw GridMismatch("horizontal_inverse: shape mismatch"); }
  Array out(grid.size());
  Index const ps = grid.plane_size();
  for (Index k = 0; k < grid.nz(); ++k) {
    inverse_plane(mixed.data() + k * ps, out.data() + k * ps, grid.nx(), grid.ny());
  }
  return out;
}

CArray plane_forward(Grid const &grid, Array const &values)
{
  if (values.size() != grid.plane_size()) { throw GridMismatch("plane_forward: shape mismatch"); }
  CArray out(grid.plane_size());
  forward_plane(values.data(), out.data(), grid.nx(), grid.ny());
  out /= static_cast<Real>(grid.plane_size());
  return out;
}

Array plane_inverse(Grid const &grid, CArray const &mixed)
{
  if (mixed.size() != grid.plane_size()) { throw GridMismatch("plane_inverse: shape mismatch"); }
  Array out(grid.plane_size());
  inverse_plane(mixed.data(), out.data(), grid.nx(), grid.ny());
  return out;
}

CMatrix mul_real(CMatrix const &m, Matrix const &op)
{
  CMatrix out(m.rows(), op.cols());
  Eigen::Map<Matrix const> in(reinterpret_cast<Real const *>(m.data()), 2 * m.rows(), m.cols());
  Eigen::Map<Matrix> res(reinterpret_cast<Real *>(out.data()), 2 * m.rows(), op.cols());
  res.noalias() = in * op;
  return out;
}

CArray apply_vertical(Grid const &grid, Matrix const &op, CArray const &mixed)
{
  Index const ps = grid.plane_size();
  CArray out(grid.size());
  Eigen::Map<Matrix const> in(reinterpret_cast<Real const *>(mixed.data()), 2 * ps, grid.nz());
  Eigen::Map<Matrix> res(reinterpret_cast<Real *>(out.data()), 2 * ps, grid.nz());
  res.noalias() = in * op.transpose();
  return out;
}

CArray to_spectral(Grid const &grid, Array const &values)
{
  return apply_vertical(grid, grid.to_legendre(), horizontal_forward(grid, values));
}

Array from_spectral(Grid const &grid, CArray const &coefficients)
{
  if (coefficients.size() != grid.size()) { throw GridMismatch("from_spectral: shape mismatch"); }
  return horizontal_inverse(grid, apply_vertical(grid, grid.from_legendre(), coefficients));
}

CArray horizontal_derivative(Grid const &grid, CArray const &mixed, int axis)
{
  if (axis != 1 && axis != 2) { throw std::invalid_argument("horizontal_derivative: axis must be 1 or 2"); }
  CArray out(mixed.size());
  Index const nx = grid.nx(), ny = grid.ny();
  for (Index k = 0; k < grid.nz(); ++k) {
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) {
        Index const n = grid.index(i, j, k);
        Real const kk = axis == 1 ? grid.kx(i) : grid.ky(j);
        out(n) = Complex(0, kk) * mixed(n);
      }
    }
  }
  return out;
}

void truncate_band(Grid const &grid, CArray &mixed)
{
  for (Index k = 0; k < grid.nz(); ++k) {
    for (Index j = 0; j < grid.ny(); ++j) {
      for (Index i = 0; i < grid.nx(); ++i) {
        if (!grid.in_band(i, j)) { mixed(grid.index(i, j, k)) = 0; }
      }
    }
  }
}

Real top_mode_fraction(Grid const &grid, Array const &values)
{
  CArray const c = to_spectral(grid, values);
  Index const N = grid.nz() - 1;
  Real total = 0, top = 0;
  for (Index m = 0; m <= N; ++m) {
    Real const norm = 2.0 / (2.0 * static_cast<Real>(m) + 1.0);
    bool const vtop = 3 * m > 2 * N;
    for (Index j = 0; j < grid.ny(); ++j) {
      for (Index i = 0; i < grid.nx(); ++i) {
        Real const e = std::norm(c(grid.index(i, j, m))) * norm;
        total += e;
        bool const htop = 3 * std::abs(grid.mode_x(i)) > grid.nx() || 3 * std::abs(grid.mode_y(j)) > grid.ny();
        if (vtop || htop) { top += e; }
      }
    }
  }
  return total > 0 ? top / total : 0;
}

Real integrate(Grid const &grid, Array const &values)
{
  if (values.size() != grid.size()) { throw GridMismatch("integrate: shape mismatch"); }
  Index const ps = grid.plane_size();
  Real sum = 0;
  for (Index k = 0; k < grid.nz(); ++k) {
    sum += grid.vertical_weights()(k) * values.segment(k * ps, ps).sum();
  }
  return sum * grid.cell_area();
}

} // namespace chanreg
