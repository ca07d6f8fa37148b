#include <cmath>

#include "chanreg/fields.hpp"

namespace chanreg {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

namespace {

Complex mode_gaussian(std::uint64_t seed, int comp, int mx, int my, int m)
{
  auto const u = [](std::uint64_t v) { return (static_cast<Real>(v >> 11) + 0.5) * 0x1.0p-53; };
  std::uint64_t const tag = (static_cast<std::uint64_t>(comp + 1) << 48) ^
                            (static_cast<std::uint64_t>(mx + 2048) << 32) ^
                            (static_cast<std::uint64_t>(my + 2048) << 16) ^ static_cast<std::uint64_t>(m);
  std::uint64_t const key = splitmix64(seed ^ splitmix64(tag));
  Real const u1 = u(splitmix64(key)), u2 = u(splitmix64(key + 1));
  Real const r = std::sqrt(-2 * std::log(u1));
  return {r * std::cos(2 * pi * u2), r * std::sin(2 * pi * u2)};
}

struct Shape
{
  int hcap;
  int vcap;
  Vector zeta;
};

Shape clamp_shape(Grid const &g, RandomSpec const &spec, int wall_degree)
{
  if (!(spec.decay > 1)) { throw std::invalid_argument("random field: decay exponent must exceed 1"); }
  int const N = static_cast<int>(g.nz() - 1);
  Shape s;
  s.hcap = std::min({spec.horizontal_cap, g.band_x(), g.band_y()});
  s.vcap = std::max(0, std::min(spec.vertical_cap, (2 * N) / 3 - wall_degree));
  s.zeta = g.z() / g.half_height();
  return s;
}

// Random vertical profile sum_m c_m P_m(zeta) for one horizontal mode.
CVector profile(Grid const &g, Shape const &s, RandomSpec const &spec, int comp, int mx, int my)
{
  CVector p = CVector::Zero(g.nz());
  for (int m = 0; m <= s.vcap; ++m) {
    Real const amp = std::pow(1.0 + mx * mx + my * my + m * m, -spec.decay / 2);
    p += amp * mode_gaussian(spec.seed, comp, mx, my, m) * g.from_legendre().col(m).cast<Complex>();
  }
  return p;
}

template <typename Fn> void for_each_mode(Grid const &g, Shape const &s, Fn &&fn)
{
  for (Index j = 0; j < g.ny(); ++j) {
    for (Index i = 0; i < g.nx(); ++i) {
      int const mx = g.mode_x(i), my = g.mode_y(j);
      if (std::abs(mx) > s.hcap || std::abs(my) > s.hcap) { continue; }
      fn(i, j, mx, my);
    }
  }
}

void scatter(Grid const &g, CArray &mixed, Index i, Index j, CVector const &prof)
{
  for (Index k = 0; k < g.nz(); ++k) { mixed(g.index(i, j, k)) = prof(k); }
}

} // namespace

ScalarField random_scalar_field(GridPtr const &grid, RandomSpec const &spec)
{
  if (spec.flags.divergence_free) {
    throw std::invalid_argument("random_scalar_field: divergence_free is not meaningful for a scalar");
  }
  Grid const &g = *grid;
  int const wall = spec.flags.no_slip ? 2 : 0;
  Shape const s = clamp_shape(g, spec, wall);
  Vector const wall_factor = spec.flags.no_slip ? Vector(1 - s.zeta.array().square()) : Vector::Ones(g.nz());
  CArray mixed = CArray::Zero(g.size());
  for_each_mode(g, s, [&](Index i, Index j, int mx, int my) {
    CVector p = profile(g, s, spec, 0, mx, my);
    p.array() *= wall_factor.array().cast<Complex>();
    scatter(g, mixed, i, j, p);
  });
  ScalarField f(grid, horizontal_inverse(g, mixed));
  if (spec.flags.no_slip) {
    Index const ps = g.plane_size();
    f.mutable_values().head(ps).setZero();
    f.mutable_values().tail(ps).setZero();
  }
  return f;
}

PlaneField random_plane_field(GridPtr const &grid, RandomSpec const &spec)
{
  Grid const &g = *grid;
  Shape const s = clamp_shape(g, spec, 0);
  CArray mixed = CArray::Zero(g.plane_size());
  for_each_mode(g, s, [&](Index i, Index j, int mx, int my) {
    Real const amp = std::pow(1.0 + mx * mx + my * my, -spec.decay / 2);
    mixed(i + g.nx() * j) = amp * mode_gaussian(spec.seed, 0, mx, my, 0);
  });
  return PlaneField(grid, plane_inverse(g, mixed));
}

VectorField random_vector_field(GridPtr const &grid, RandomSpec const &spec)
{
  Grid const &g = *grid;
  bool const ns = spec.flags.no_slip, df = spec.flags.divergence_free;
  // Polynomial degree added by the wall factor of the generating potential.
  int const wall = df ? (ns ? 4 : 2) : (ns ? 2 : 0);
  Shape const s = clamp_shape(g, spec, wall);
  Array const z2 = 1 - s.zeta.array().square();
  Vector const tangential_factor = ns ? Vector(z2) : Vector::Ones(g.nz());
  Vector const normal_factor = df ? (ns ? Vector(z2.square()) : Vector(z2)) : tangential_factor;

  std::array<CArray, 3> mixed{CArray::Zero(g.size()), CArray::Zero(g.size()), CArray::Zero(g.size())};
  for_each_mode(g, s, [&](Index i, Index j, int mx, int my) {
    CVector p1 = profile(g, s, spec, 0, mx, my);
    CVector p2 = profile(g, s, spec, 1, mx, my);
    CVector p3 = profile(g, s, spec, 2, mx, my);
    p1.array() *= tangential_factor.array().cast<Complex>();
    p2.array() *= tangential_factor.array().cast<Complex>();
    p3.array() *= normal_factor.array().cast<Complex>();
    Real const kx = g.kx(i), ky = g.ky(j), kk = std::hypot(kx, ky);
    if (df) {
      if (kk == 0) {
        p3.setZero();
      } else {
        // p3 is the wall-normal velocity; the component along k follows from continuity
        // and p2 supplies the free component across k.
        CVector const along = Complex(0, 1 / kk) * (g.dz().cast<Complex>() * p3);
        CVector const across = p2;
        p1 = (kx * along - ky * across) / kk;
        p2 = (ky * along + kx * across) / kk;
      }
    }
    scatter(g, mixed[0], i, j, p1);
    scatter(g, mixed[1], i, j, p2);
    scatter(g, mixed[2], i, j, p3);
  });
  VectorField u(ScalarField(grid, horizontal_inverse(g, mixed[0])), ScalarField(grid, horizontal_inverse(g, mixed[1])),
                ScalarField(grid, horizontal_inverse(g, mixed[2])));
  Index const ps = g.plane_size();
  for (int c = 0; c < 3; ++c) {
    bool const zero_walls = ns || (df && c == 2);
    if (zero_walls) {
      u[c].mutable_values().head(ps).setZero();
      u[c].mutable_values().tail(ps).setZero();
    }
  }
  u.divergence_free = df;
  u.no_slip = ns;
  return u;
}

} // namespace chanreg
