#pragma once

// Closed-form reference integrals used as independent oracles.

namespace testsupport {

// Integral of x^a y^b over the unit reference triangle {x, y >= 0, x + y <= 1}:
// a! b! / (a + b + 2)!, evaluated as a stable product.
inline double ref_tri_monomial(int a, int b) {
  double val = 1.0;
  for (int i = 1; i <= b; ++i) val *= static_cast<double>(i) / (a + i);
  return val / ((a + b + 1.0) * (a + b + 2.0));
}

}  // namespace testsupport
