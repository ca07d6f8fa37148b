#include "chanreg/decomposition.hpp"

namespace chanreg {

BarotropicField vertical_average(ScalarField const &f)
{
  Grid const &g = f.grid();
  Eigen::Map<Matrix const> cols(f.values().data(), g.plane_size(), g.nz());
  Array avg = (cols * g.vertical_weights()).array() / (2 * g.half_height());
  return BarotropicField(PlaneField(f.grid_ptr(), std::move(avg)));
}

BaroclinicField baroclinic(ScalarField const &f)
{
  ScalarField out = f - vertical_average(f).volume();
  out.set_resolved(f.resolved());
  return BaroclinicField(std::move(out));
}

VectorSplit split(VectorField const &u)
{
  VectorSplit s{{vertical_average(u[0]), vertical_average(u[1]), vertical_average(u[2])},
                VectorField(baroclinic(u[0]).field(), baroclinic(u[1]).field(), baroclinic(u[2]).field())};
  return s;
}

} // namespace chanreg
