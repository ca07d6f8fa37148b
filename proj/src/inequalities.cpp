#include "chanreg/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chanreg/decomposition.hpp"
#include "chanreg/stokes.hpp"

namespace chanreg {

namespace {

constexpr Real inf = std::numeric_limits<Real>::infinity();

Real sq(Real x) { return x * x; }

bool underresolved(ScalarField const &f) { return top_mode_fraction(f.grid(), f.values()) > resolution_threshold; }

bool underresolved(VectorField const &u)
{
  return underresolved(u[0]) || underresolved(u[1]) || underresolved(u[2]);
}

// First derivatives of all components: at(k, j) = d_j u_k with 0-based k and j.
class Jacobian
{
public:
  explicit Jacobian(VectorField const &u)
  {
    d_.reserve(9);
    for (int k = 0; k < 3; ++k) {
      for (int j = 1; j <= 3; ++j) { d_.push_back(diff(u[k], j)); }
    }
  }
  ScalarField const &at(int k, int j) const { return d_[static_cast<size_t>(3 * k + j)]; }
  Array const &v(int k, int j) const { return at(k, j).values(); }

private:
  std::vector<ScalarField> d_;
};

Real l2sq(ScalarField const &f) { return sq(norm_lq(f, 2)); }

Real plane_integral(Grid const &g, Array const &plane) { return plane.sum() * g.cell_area(); }

// Column integral over x3 of nodal values, one entry per horizontal point.
Array column_integral(Grid const &g, Array const &values)
{
  Eigen::Map<Matrix const> m(values.data(), g.plane_size(), g.nz());
  return (m * g.vertical_weights()).array();
}

} // namespace

void InequalityReport::add(InequalityEntry const &e)
{
  if (e.degenerate()) { ++degenerate; }
  if (e.flagged) { ++flagged; }
  entries.push_back(e);
}

Real InequalityReport::extreme_ratio() const
{
  Real best = lower_bound ? inf : -inf;
  bool any = false;
  for (auto const &e : entries) {
    if (e.degenerate()) { continue; }
    any = true;
    best = lower_bound ? std::min(best, e.ratio()) : std::max(best, e.ratio());
  }
  return any ? best : std::numeric_limits<Real>::quiet_NaN();
}

Real InequalityReport::calibrated(Real margin) const
{
  Real const r = extreme_ratio();
  return lower_bound ? r : r * (1 + margin);
}

long InequalityReport::violations(Real C) const
{
  long n = 0;
  for (auto const &e : entries) {
    if (e.degenerate()) {
      if (!lower_bound && e.lhs > 0) { ++n; }
      continue;
    }
    bool const bad = lower_bound ? e.lhs < C * e.rhs_factor * (1 - 1e-10) : e.lhs > C * e.rhs_factor * (1 + 1e-10);
    if (bad) { ++n; }
  }
  return n;
}

InequalityEntry verify_gn_2d(PlaneField const &phi, Real r)
{
  if (!(r >= 2) || std::isinf(r)) { throw std::invalid_argument("verify_gn_2d: r must satisfy 2 <= r < inf"); }
  InequalityEntry e{"gn2d"};
  e.lhs = norm_lq(phi, r);
  e.rhs_factor = std::pow(norm_lq(phi, 2), 2 / r) * std::pow(sobolev_norm(phi, 1), (r - 2) / r);
  e.flagged = top_mode_fraction(phi.grid(), phi.extend().values()) > resolution_threshold;
  return e;
}

InequalityEntry verify_sobolev_3d(ScalarField const &psi, Real alpha)
{
  if (!(alpha >= 2 && alpha <= 6)) { throw std::invalid_argument("verify_sobolev_3d: alpha must lie in [2, 6]"); }
  InequalityEntry e{"sobolev3d"};
  e.lhs = norm_lq(psi, alpha);
  e.rhs_factor = std::pow(norm_lq(psi, 2), (6 - alpha) / (2 * alpha)) *
                 std::pow(sobolev_norm(psi, 1), 3 * (alpha - 2) / (2 * alpha));
  e.flagged = underresolved(psi);
  return e;
}

InequalityEntry verify_poincare(VectorField const &v, PoincareVariant variant)
{
  if (!v.divergence_free || !v.no_slip) {
    throw SpaceViolation("verify_poincare: field must be divergence-free and no-slip");
  }
  Real const L = v.grid().half_height();
  InequalityEntry e;
  if (variant == PoincareVariant::gradient) {
    e.id = "poincare_gradient";
    e.lhs = grad_norm(v);
    e.rhs_factor = norm_lq(v, 2) / L;
  } else {
    e.id = "poincare_stokes";
    e.lhs = norm_lq(stokes_apply(v), 2);
    e.rhs_factor = grad_norm(v) / L;
  }
  e.flagged = underresolved(v);
  return e;
}

InequalityEntry verify_minkowski(ScalarField const &phi, Real r)
{
  if (!(r >= 1)) { throw std::invalid_argument("verify_minkowski: r must be >= 1"); }
  Grid const &g = phi.grid();
  Array const a = phi.values().abs();
  InequalityEntry e{"minkowski"};
  // Outer L^r over the horizontal box of the inner vertical integral.
  e.lhs = std::pow(plane_integral(g, column_integral(g, a).pow(r)), 1 / r);
  // Vertical integral of the horizontal L^r norms.
  Index const ps = g.plane_size();
  for (Index k = 0; k < g.nz(); ++k) {
    e.rhs_factor += g.vertical_weights()(k) * std::pow(plane_integral(g, a.segment(k * ps, ps).pow(r)), 1 / r);
  }
  e.flagged = underresolved(phi);
  return e;
}

std::vector<InequalityEntry> verify_lemma1(PlaneField const &xi, ScalarField const &phi, ScalarField const &psi)
{
  Grid const &g = phi.grid();
  ScalarField const x = xi.extend();
  InequalityEntry l{"lemma1"};
  l.lhs = integrate(g, (x.values() * phi.values() * psi.values()).abs());
  Real const nxi = norm_lq(xi, 2);
  Real const gxi = std::sqrt(std::max<Real>(0, sq(sobolev_norm(xi, 1)) - sq(nxi)));
  Real const nphi = norm_lq(phi, 2);
  Real const gphi = std::sqrt(l2sq(diff(phi, 1)) + l2sq(diff(phi, 2)));
  l.rhs_factor = std::sqrt(nxi * (nxi + gxi)) * std::sqrt(nphi * (nphi + gphi)) * norm_lq(psi, 2);
  l.flagged = underresolved(x) || underresolved(phi);

  InequalityEntry n{"nl1"};
  Array const col = column_integral(g, phi.values().square());
  n.lhs = std::pow(plane_integral(g, col.square()), 0.25);
  n.rhs_factor = std::sqrt((nphi + gphi) * nphi);
  n.flagged = underresolved(phi);
  return {l, n};
}

InequalityEntry verify_aniso_l6(VectorField const &u)
{
  InequalityEntry e{"aniso_l6"};
  e.lhs = norm_lq(u, 6);
  std::array<Real, 3> f{};
  for (int a = 1; a <= 3; ++a) { f[static_cast<size_t>(a - 1)] = norm_lq(diff(u, a), 2); }
  Real const scale = std::max({f[0], f[1], f[2]});
  bool const degenerate = scale == 0 || std::min({f[0], f[1], f[2]}) <= 1e-13 * scale;
  e.rhs_factor = degenerate ? 0 : std::cbrt(f[0] * f[1] * f[2]);
  e.flagged = underresolved(u);
  return e;
}

std::vector<InequalityEntry> verify_eee_estimates(VectorField const &u)
{
  Grid const &g = u.grid();
  Jacobian const J(u);
  ScalarField const w = baroclinic(u[2]).field();
  ScalarField const wbar = vertical_average(u[2]).volume();
  std::array<ScalarField, 3> const dw{diff(w, 1), diff(w, 2), diff(w, 3)};

  // Pointwise magnitudes.
  Array grad_u = Array::Zero(g.size()), gradh_u2 = Array::Zero(g.size()), hh = Array::Zero(g.size());
  Real dz_u = 0, dz_gradh = 0, gradh_grad_w = 0;
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      grad_u += J.v(k, j).square();
      if (j < 2) { gradh_u2 += J.v(k, j).square(); }
    }
    dz_u += l2sq(J.at(k, 2));
    for (int l = 1; l <= 2; ++l) {
      for (int j = 0; j < 3; ++j) {
        ScalarField const dd = diff(J.at(k, j), l);
        hh += dd.values().square();
        if (j == 2) { dz_gradh += l2sq(dd); }
      }
    }
  }
  for (int l = 1; l <= 2; ++l) {
    for (int j = 0; j < 3; ++j) { gradh_grad_w += l2sq(diff(dw[static_cast<size_t>(j)], l)); }
  }
  grad_u = grad_u.sqrt();
  Array const gradh_grad_u = hh.sqrt();
  Array const grad_w = (dw[0].values().square() + dw[1].values().square() + dw[2].values().square()).sqrt();
  Array const umag = (u[0].values().square() + u[1].values().square() + u[2].values().square()).sqrt();

  Real const nu = norm_lq(u, 2);
  Real const ng = std::sqrt(integrate(g, grad_u.square()));
  Real const ngh = std::sqrt(integrate(g, gradh_u2));
  Real const nhh = std::sqrt(integrate(g, hh));
  Real const nw = std::sqrt(integrate(g, grad_w.square()));
  bool const flagged = underresolved(u);

  InequalityEntry e1{"eee1"};
  e1.lhs = integrate(g, wbar.values().abs() * grad_u * gradh_grad_u);
  e1.rhs_factor = nu * ng * nhh + std::sqrt(nu * ngh * ng) * std::pow(nhh, 1.5);
  e1.flagged = flagged;

  InequalityEntry e2{"eee2"};
  e2.lhs = integrate(g, grad_w * gradh_u2);
  e2.rhs_factor = nw * std::sqrt(ngh) * std::pow(ngh + nhh, 1.5);
  e2.flagged = flagged;

  InequalityEntry e3{"eee3"};
  e3.lhs = integrate(g, umag * grad_w * gradh_grad_u);
  e3.rhs_factor = std::pow(nu * ngh * std::sqrt(dz_u) * std::sqrt(dz_gradh), 0.25) * std::sqrt(nw) *
                  std::pow(gradh_grad_w, 0.25) * nhh;
  e3.flagged = flagged;

  // Slice-wise sup bound along each vertical column, reported at the worst column.
  InequalityEntry ag{"agmon"};
  Array dz2 = Array::Zero(g.size());
  for (int k = 0; k < 3; ++k) { dz2 += J.v(k, 2).square(); }
  Index const ps = g.plane_size(), nz = g.nz();
  Eigen::Map<Matrix const> mag(umag.data(), ps, nz);
  Eigen::Map<Matrix const> dzm(dz2.data(), ps, nz);
  Vector const col_u2 = mag.array().square().matrix() * g.vertical_weights();
  Vector const col_dz2 = dzm * g.vertical_weights();
  Real worst = -1;
  for (Index p = 0; p < ps; ++p) {
    Real const rhs = std::sqrt(std::sqrt(col_u2(p) * col_dz2(p)));
    Real const lhs = mag.row(p).maxCoeff();
    if (!(rhs > 0)) { continue; }
    if (lhs / rhs > worst) {
      worst = lhs / rhs;
      ag.lhs = lhs;
      ag.rhs_factor = rhs;
    }
  }
  ag.flagged = flagged;
  return {e1, e2, e3, ag};
}

Real IbpResult::mismatch() const { return std::abs(direct - rearranged) / std::max<Real>(std::abs(direct), 1); }

IbpResult ibp_identity_check(VectorField const &u)
{
  Grid const &g = u.grid();
  GridPtr const gp = u[0].grid_ptr();
  Jacobian const J(u);
  auto I = [&](Array const &a) { return integrate(g, a); };
  auto S = [&](Array a) { return ScalarField(gp, std::move(a)); };

  IbpResult r;
  // Direct form.
  for (int k = 0; k < 3; ++k) {
    Array adv = Array::Zero(g.size());
    for (int j = 0; j < 3; ++j) { adv += u[j].values() * J.v(k, j); }
    r.direct -= I(adv * laplacian_h(u[k]).values());
  }
  // First rewriting.
  for (int l = 0; l < 2; ++l) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) { r.rewritten += I(J.v(k, j) * J.v(j, l) * J.v(k, l)); }
    }
  }

  ScalarField const w = baroclinic(u[2]).field();
  Array const wbar = vertical_average(u[2]).volume().values();
  std::array<Array, 3> const dw{diff(w, 1).values(), diff(w, 2).values(), diff(w, 3).values()};
  Array const &a11 = J.v(0, 0), &a22 = J.v(1, 1), &a12 = J.v(0, 1), &a21 = J.v(1, 0);
  Array const divh = a11 + a22;

  Real const stretching =
    -I(dw[2] * (a11.square() + a22.square() - a11 * a22 + a12.square() + a21.square() + a12 * a21));

  Real horizontal = 0, horizontal_displayed = 0;
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      ScalarField const dk = J.at(k, l);
      Array const dll = diff(dk, l + 1).values();
      Array const dl3 = diff(dk, 3).values();
      Real const common = I(J.v(k, l).square() * dw[2]) - I(u[k].values() * dw[static_cast<size_t>(l)] * dl3);
      horizontal += common + I(u[k].values() * dw[2] * dll);
      horizontal_displayed += common + I(u[k].values() * dw[2] * dl3);
    }
  }

  Array bracket = Array::Zero(g.size());
  for (int j = 0; j < 2; ++j) {
    for (int l = 0; l < 2; ++l) {
      bracket += diff(S(J.v(j, l) * J.v(2, l)), j + 1).values();
      bracket += diff(S(J.v(j, 2) * J.v(j, l)), l + 1).values();
    }
  }
  for (int l = 0; l < 2; ++l) { bracket -= diff(S(divh * J.v(2, l)), l + 1).values(); }
  Real const barotropic = -I(wbar * bracket);

  Real gradient = 0;
  for (int j = 0; j < 2; ++j) {
    for (int l = 0; l < 2; ++l) { gradient += I(dw[static_cast<size_t>(j)] * J.v(j, l) * J.v(2, l)); }
  }
  for (int l = 0; l < 2; ++l) { gradient -= I(divh * dw[static_cast<size_t>(l)] * J.v(2, l)); }

  r.groups = {{"vertical_stretching", stretching},
              {"horizontal_transport", horizontal},
              {"barotropic", barotropic},
              {"baroclinic_gradient", gradient}};
  r.rearranged = stretching + horizontal + barotropic + gradient;
  r.displayed = stretching + horizontal_displayed + barotropic + gradient;
  return r;
}

namespace {

std::uint64_t sample_seed(std::uint64_t seed, long i)
{
  return splitmix64(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(i));
}

RandomSpec random_spec(EnsembleSpec const &s, std::uint64_t seed, FieldFlags flags)
{
  RandomSpec r;
  r.seed = seed;
  r.decay = s.decay;
  r.horizontal_cap = s.horizontal_cap;
  r.vertical_cap = s.vertical_cap;
  r.flags = flags;
  return r;
}

InequalityReport make_report(std::string id, bool lower = false, bool free = false)
{
  InequalityReport r;
  r.id = std::move(id);
  r.lower_bound = lower;
  r.constant_free = free;
  return r;
}

} // namespace

Lemma1Sample lemma1_sample(EnsembleSpec const &spec, GridPtr const &grid, long i)
{
  std::uint64_t const s = sample_seed(spec.seed, i);
  FieldFlags const none{};
  return {random_plane_field(grid, random_spec(spec, splitmix64(s ^ 1), none)),
          random_scalar_field(grid, random_spec(spec, splitmix64(s ^ 2), none)),
          random_scalar_field(grid, random_spec(spec, splitmix64(s ^ 3), none))};
}

std::vector<InequalityReport> run_suite(std::string const &suite, EnsembleSpec const &spec)
{
  if (suite == "all") {
    std::vector<InequalityReport> all;
    for (auto const &id : suite_ids()) {
      auto part = run_suite(id, spec);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  if (std::find(suite_ids().begin(), suite_ids().end(), suite) == suite_ids().end()) {
    throw std::invalid_argument("unknown suite \"" + suite + "\"");
  }
  if (spec.count < 1) { throw std::invalid_argument("ensemble count must be positive"); }
  GridPtr const g = make_grid(spec.nx, spec.ny, spec.nz, spec.px, spec.py, spec.L);
  FieldFlags const none{}, both{true, true};
  std::vector<InequalityReport> out;

  if (suite == "gn2d") {
    out.push_back(make_report("gn2d"));
    for (long i = 0; i < spec.count; ++i) {
      out[0].add(verify_gn_2d(random_plane_field(g, random_spec(spec, sample_seed(spec.seed, i), none)), spec.r));
    }
  } else if (suite == "sobolev3d") {
    out.push_back(make_report("sobolev3d"));
    for (long i = 0; i < spec.count; ++i) {
      auto const psi = random_scalar_field(g, random_spec(spec, sample_seed(spec.seed, i), none));
      out[0].add(verify_sobolev_3d(psi, spec.alpha));
    }
  } else if (suite == "poincare") {
    out.push_back(make_report("poincare_gradient", true));
    out.push_back(make_report("poincare_stokes", true));
    for (long i = 0; i < spec.count; ++i) {
      auto const v = random_vector_field(g, random_spec(spec, sample_seed(spec.seed, i), both));
      out[0].add(verify_poincare(v, PoincareVariant::gradient));
      out[1].add(verify_poincare(v, PoincareVariant::stokes));
    }
  } else if (suite == "minkowski") {
    out.push_back(make_report("minkowski", false, true));
    for (long i = 0; i < spec.count; ++i) {
      auto const phi = random_scalar_field(g, random_spec(spec, sample_seed(spec.seed, i), none));
      out[0].add(verify_minkowski(phi, spec.minkowski_r));
    }
  } else if (suite == "lemma1") {
    out.push_back(make_report("lemma1"));
    out.push_back(make_report("nl1"));
    for (long i = 0; i < spec.count; ++i) {
      Lemma1Sample const in = lemma1_sample(spec, g, i);
      auto const e = verify_lemma1(in.xi, in.phi, in.psi);
      out[0].add(e[0]);
      out[1].add(e[1]);
    }
  } else if (suite == "aniso_l6") {
    out.push_back(make_report("aniso_l6"));
    for (long i = 0; i < spec.count; ++i) {
      out[0].add(verify_aniso_l6(random_vector_field(g, random_spec(spec, sample_seed(spec.seed, i), both))));
    }
  } else if (suite == "eee") {
    for (char const *id : {"eee1", "eee2", "eee3", "agmon"}) { out.push_back(make_report(id)); }
    for (long i = 0; i < spec.count; ++i) {
      auto const e = verify_eee_estimates(random_vector_field(g, random_spec(spec, sample_seed(spec.seed, i), both)));
      for (size_t k = 0; k < e.size(); ++k) { out[k].add(e[k]); }
    }
  } else {
    // Identity check: lhs = |direct - rearranged|, rhs_factor = max(|direct|, 1).
    out.push_back(make_report("ibp"));
    for (long i = 0; i < spec.count; ++i) {
      auto const u = random_vector_field(g, random_spec(spec, sample_seed(spec.seed, i), both));
      IbpResult const r = ibp_identity_check(u);
      out[0].add({"ibp", std::abs(r.direct - r.rearranged), std::max<Real>(std::abs(r.direct), 1), underresolved(u)});
    }
  }
  for (auto &r : out) {
    if (r.flagged) { r.warnings.push_back(std::to_string(r.flagged) + " samples failed the resolution check"); }
  }
  return out;
}

long hard_failures(std::vector<InequalityReport> const &reports)
{
  long n = 0;
  for (auto const &r : reports) {
    if (r.constant_free) { n += r.violations(1); }
    if (r.id == "ibp") { n += r.violations(ibp_tolerance); }
  }
  return n;
}

std::map<std::string, Real> calibrate_constant(std::string const &suite, EnsembleSpec const &spec)
{
  if (spec.count < 100) { throw std::invalid_argument("calibration needs at least 100 samples"); }
  std::map<std::string, Real> out;
  for (auto const &r : run_suite(suite, spec)) {
    if (r.degenerate == r.count()) { throw std::runtime_error("calibration of " + r.id + ": all samples degenerate"); }
    out[r.id] = r.constant_free ? 1.0 : r.calibrated();
  }
  return out;
}

} // namespace chanreg
