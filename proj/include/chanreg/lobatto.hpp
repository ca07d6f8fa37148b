#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace chanreg {

// Legendre–Gauss–Lobatto rule on [-1, 1] with n points (polynomial degree n-1).
// Nodes ascend from -1 to 1. The quadrature is exact up to degree 2n-3.
template <typename Scalar> struct LobattoRule
{
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  VectorS nodes;
  VectorS weights;
  MatrixS diff; // nodal first-derivative matrix
};

// Values P_0..P_degree at x, returned as (P_degree, P_degree-1).
template <typename Scalar> inline auto legendre_pair(int degree, Scalar x) -> std::pair<Scalar, Scalar>
{
  Scalar p0 = 1, p1 = x;
  if (degree == 0) { return {p0, Scalar(0)}; }
  for (int m = 2; m <= degree; ++m) {
    Scalar const p2 = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

template <typename Scalar> auto lobatto_rule(Eigen::Index n) -> LobattoRule<Scalar>
{
  if (n < 2) { throw std::invalid_argument("lobatto_rule: need at least 2 points"); }
  using std::abs;
  using std::cos;
  int const N = static_cast<int>(n - 1);
  Scalar const pi_s = Scalar(3.141592653589793238462643383279502884L);

  LobattoRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  // Newton on (1-x^2) P_N'(x) starting from Chebyshev–Lobatto points.
  for (int j = 0; j <= N; ++j) {
    Scalar x = -cos(pi_s * j / N);
    if (j > 0 && j < N) {
      for (int it = 0; it < 100; ++it) {
        auto [pn, pm] = legendre_pair<Scalar>(N, x);
        Scalar const dx = (x * pn - pm) / (n * pn);
        x -= dx;
        if (abs(dx) < Scalar(1e-17)) { break; }
      }
    }
    rule.nodes(j) = x;
    auto const pn = legendre_pair<Scalar>(N, x).first;
    rule.weights(j) = Scalar(2) / (Scalar(N) * (N + 1) * pn * pn);
  }
  // Symmetrize to remove round-off asymmetry.
  for (int j = 0; j <= N / 2; ++j) {
    Scalar const x = (rule.nodes(N - j) - rule.nodes(j)) / 2;
    Scalar const w = (rule.weights(N - j) + rule.weights(j)) / 2;
    rule.nodes(j) = -x;
    rule.nodes(N - j) = x;
    rule.weights(j) = rule.weights(N - j) = w;
  }
  if (N % 2 == 0) { rule.nodes(N / 2) = 0; }

  // Barycentric differentiation with the negative-sum diagonal.
  typename LobattoRule<Scalar>::VectorS bary(n);
  for (int j = 0; j <= N; ++j) {
    Scalar prod = 1;
    for (int k = 0; k <= N; ++k) {
      if (k != j) { prod *= (rule.nodes(j) - rule.nodes(k)); }
    }
    bary(j) = 1 / prod;
  }
  rule.diff.setZero(n, n);
  for (int i = 0; i <= N; ++i) {
    Scalar row = 0;
    for (int j = 0; j <= N; ++j) {
      if (i == j) { continue; }
      rule.diff(i, j) = (bary(j) / bary(i)) / (rule.nodes(i) - rule.nodes(j));
      row += rule.diff(i, j);
    }
    rule.diff(i, i) = -row;
  }
  return rule;
}

// V(j, m) = P_m(x_j) for m = 0..degree.
template <typename Scalar>
auto legendre_vandermonde(Eigen::Matrix<Scalar, Eigen::Dynamic, 1> const &x, Eigen::Index degree)
  -> Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
{
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> V(x.size(), degree + 1);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Scalar p0 = 1, p1 = x(j);
    V(j, 0) = p0;
    if (degree >= 1) { V(j, 1) = p1; }
    for (Eigen::Index m = 2; m <= degree; ++m) {
      Scalar const p2 = ((2 * m - 1) * x(j) * p1 - (m - 1) * p0) / m;
      V(j, m) = p2;
      p0 = p1;
      p1 = p2;
    }
  }
  return V;
}

} // namespace chanreg
