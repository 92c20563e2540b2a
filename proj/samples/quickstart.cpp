// Minimal tour: build a scalar martingale on a binary tree, integrate a
// vector-valued integrand against it, and confirm the isometry numerically.
#include <cstdio>

#include "itolat/integral.hpp"
#include "itolat/martingale.hpp"
#include "itolat/random_instances.hpp"

int main() {
  using namespace itolat;

  // A 4-step random walk: 16 equally likely paths, unit up/down moves.
  const ScalarMartingale walk = random_walk_martingale(4, 1.0);

  // An integrand with values in a 3-point sup-norm grid, adapted to the walk.
  RngStream rng(2024, 0);
  const SpaceDescriptor space = SpaceDescriptor::sup_grid(3);
  const AdaptedProcess x = random_adapted_process(rng, walk, space);

  // Integrate by elementary approximation down to zero error.
  const ItoIntegralResult integral = ito_integral(x, walk, walk.horizon());
  std::printf("windows used: %zu, approximation error: %.3g\n", integral.coarseness,
              integral.error_bound);

  // Both sides of the isometry agree to floating-point accuracy.
  const ElementaryProcess elem = full_resolution_elementary(x);
  const IsometryResidual iso = ito_isometry_residual(elem, walk, walk.horizon());
  std::printf("E[(int x dM)^2]      = %.12f\n", norm(iso.lhs));
  std::printf("E[int x^2 d[M]]      = %.12f\n", norm(iso.rhs));
  std::printf("relative residual    = %.3g\n", iso.residual);

  // The martingale norm never exceeds the L^2 norm against d[M] x dP.
  std::printf("m-norm %.6f <= l2m-norm %.6f\n", m_norm_process(x, walk), l2m_norm(x, walk));
  return iso.residual <= 1e-9 ? 0 : 1;
}
