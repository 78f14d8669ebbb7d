#pragma once

// Hand-rolled deterministic generators for property tests.

#include <ksm/dual_grid.hpp>
#include <ksm/functionals.hpp>

#include <cmath>
#include <cstdint>

namespace gen {

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53; }
  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  // p / q with |p / q| <= bound and q <= 6.
  double rational(int bound) {
    const int q = integer(1, 6);
    return static_cast<double>(integer(-bound * q, bound * q)) / q;
  }
};

// max of up to max_pieces affine functions with rational coefficients.
inline ksm::PLConvex random_pl(Rng& rng, int l, int max_pieces = 5, int bound = 4) {
  ksm::PLConvex phi;
  const int m = rng.integer(1, max_pieces);
  for (int r = 0; r < m; ++r) {
    ksm::Point a(l);
    for (double& x : a) x = rng.rational(bound);
    phi.pieces.push_back({a, rng.rational(bound)});
  }
  return phi;
}

// Grid-convex sample: PL maximum plus a quadratic bump, projected.
inline ksm::ConvexDualGrid random_grid_convex(Rng& rng, const ksm::DualMeshPtr& mesh) {
  const int l = mesh->dimension;
  const auto phi = random_pl(rng, l, 4, 3);
  const double t = rng.uniform(0, 3);
  ksm::Point c(l);
  for (double& x : c) x = rng.uniform(-0.5, 0.5);
  auto u = ksm::sample_dual(mesh, [&](std::span<const double> z) {
    double q = 0;
    for (int k = 0; k < l; ++k) q += (z[k] - c[k]) * (z[k] - c[k]);
    return phi(z) + t * q;
  });
  return ksm::convexify(u);
}

}  // namespace gen
