#pragma once

#include "chanreg/fields.hpp"

namespace chanreg {

// Vertical average of a volume field; independent of x3 by construction.
class BarotropicField
{
public:
  explicit BarotropicField(PlaneField plane) : plane_(std::move(plane)) {}

  PlaneField const &plane() const { return plane_; }
  Grid const &grid() const { return plane_.grid(); }
  // Constant-in-x3 volume view for arithmetic with 3-D fields.
  ScalarField volume() const { return plane_.extend(); }

private:
  PlaneField plane_;
};

// Vertically mean-free part of a volume field.
class BaroclinicField
{
public:
  explicit BaroclinicField(ScalarField field) : field_(std::move(field)) {}

  ScalarField const &field() const { return field_; }
  Grid const &grid() const { return field_.grid(); }

private:
  ScalarField field_;
};

// (1/2L) * integral of f over x3, per horizontal node, with the grid's vertical weights.
BarotropicField vertical_average(ScalarField const &f);
BaroclinicField baroclinic(ScalarField const &f);

struct VectorSplit
{
  std::array<BarotropicField, 3> mean;
  VectorField fluctuation;
};

VectorSplit split(VectorField const &u);

} // namespace chanreg
