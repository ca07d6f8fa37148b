#pragma once

#include <map>
#include <string>
#include <vector>

#include "chanreg/fields.hpp"

namespace chanreg {

// One evaluation of an inequality lhs <= C * rhs_factor (or lhs >= C * rhs_factor for
// lower bounds) with the constant removed.
struct InequalityEntry
{
  std::string id;
  Real lhs = 0;
  Real rhs_factor = 0;
  bool flagged = false; // input failed the resolution check

  bool degenerate() const { return !(rhs_factor > 0); }
  Real ratio() const { return lhs / rhs_factor; }
};

struct InequalityReport
{
  std::string id;
  bool lower_bound = false;
  bool constant_free = false;
  std::vector<InequalityEntry> entries;
  long degenerate = 0;
  long flagged = 0;
  std::vector<std::string> warnings;

  void add(InequalityEntry const &e);
  long count() const { return static_cast<long>(entries.size()); }
  // Sup of the ratios, or inf for lower bounds; degenerate entries excluded.
  Real extreme_ratio() const;
  // Constant from the extreme ratio: sup * (1 + margin) for upper bounds, the bare inf
  // for lower bounds.
  Real calibrated(Real margin = 0.1) const;
  long violations(Real C) const;
};

InequalityEntry verify_gn_2d(PlaneField const &phi, Real r);
InequalityEntry verify_sobolev_3d(ScalarField const &psi, Real alpha);

enum class PoincareVariant { gradient, stokes };
InequalityEntry verify_poincare(VectorField const &v, PoincareVariant variant);

InequalityEntry verify_minkowski(ScalarField const &phi, Real r);

// Entries "lemma1" and "nl1".
std::vector<InequalityEntry> verify_lemma1(PlaneField const &xi, ScalarField const &phi, ScalarField const &psi);

InequalityEntry verify_aniso_l6(VectorField const &u);

// Entries "eee1", "eee2", "eee3" and the slice-wise sup bound "agmon".
std::vector<InequalityEntry> verify_eee_estimates(VectorField const &u);

struct IbpResult
{
  Real direct = 0;     // -int (u . grad) u . lap_h u
  Real rewritten = 0;  // sum_l int d_j u_k d_l u_j d_l u_k
  Real rearranged = 0; // final form in terms of u3~ and u3-bar
  Real displayed = 0;  // the final form with d^2 u_k / dx_l dx_3 in the second group, as printed
  std::map<std::string, Real> groups;

  Real mismatch() const;
};

IbpResult ibp_identity_check(VectorField const &u);

struct EnsembleSpec
{
  std::uint64_t seed = 0;
  long count = 100;
  Real decay = 2;
  int horizontal_cap = 4;
  int vertical_cap = 12;
  Index nx = 32, ny = 32, nz = 33;
  Real px = 2 * pi, py = 2 * pi, L = 1;
  Real r = 4;     // gn2d exponent; minkowski uses minkowski_r
  Real alpha = 6; // sobolev3d exponent
  Real minkowski_r = 2;
};

inline std::vector<std::string> const &suite_ids()
{
  static std::vector<std::string> const ids{"gn2d", "sobolev3d", "poincare", "minkowski",
                                             "lemma1", "aniso_l6", "eee", "ibp"};
  return ids;
}

// Inputs of sample i of the lemma1 ensemble.
struct Lemma1Sample
{
  PlaneField xi;
  ScalarField phi, psi;
};
Lemma1Sample lemma1_sample(EnsembleSpec const &spec, GridPtr const &grid, long i);

// Runs one suite (or "all") over a seeded ensemble. Throws std::invalid_argument on an
// unknown id.
std::vector<InequalityReport> run_suite(std::string const &suite, EnsembleSpec const &spec);

// Failures that make a verify run fail: violations of constant-free inequalities and
// identity mismatches beyond tolerance.
long hard_failures(std::vector<InequalityReport> const &reports);

inline constexpr Real ibp_tolerance = 1e-6;

// Calibrated constant per report of a suite; requires count >= 100 and at least one
// nondegenerate sample.
std::map<std::string, Real> calibrate_constant(std::string const &suite, EnsembleSpec const &spec);

} // namespace chanreg
