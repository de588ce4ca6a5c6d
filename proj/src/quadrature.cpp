#include "mcid/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace mcid {

namespace {
// Orthonormal Hermite value and derivative at x (weight e^{-x^2}).
void hermite_orthonormal(std::size_t n, long double x, long double& p, long double& dp) {
  long double p0 = 0.7511255444649424828587L;  // pi^{-1/4}
  long double pm1 = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    const long double next =
        x * std::sqrt(2.0L / (k + 1)) * p0 - std::sqrt(static_cast<long double>(k) / (k + 1)) * pm1;
    pm1 = p0;
    p0 = next;
  }
  p = p0;
  dp = std::sqrt(2.0L * n) * pm1;
}
}  // namespace

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1");
  std::vector<double> nodes(n), weights(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Stroud-Secrest style initial guesses, largest root first
    long double x;
    if (i == 0) {
      x = std::sqrt(2.0L * n + 1.0L) - 1.85575L * std::pow(2.0L * n + 1.0L, -1.0L / 6.0L);
    } else if (i == 1) {
      x = nodes[n - 1] - 1.14L * std::pow(static_cast<long double>(n), 0.426L) / nodes[n - 1];
    } else if (i == 2) {
      x = 1.86L * nodes[n - 2] - 0.86L * nodes[n - 1];
    } else if (i == 3) {
      x = 1.91L * nodes[n - i] - 0.91L * nodes[n - i + 1];
    } else {
      x = 2.0L * nodes[n - i] - nodes[n - i + 1];
    }
    long double p = 0.0L, dp = 1.0L;
    for (int it = 0; it < 100; ++it) {
      hermite_orthonormal(n, x, p, dp);
      const long double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-18L * (1.0L + std::fabs(x))) break;
    }
    hermite_orthonormal(n, x, p, dp);
    nodes[n - 1 - i] = static_cast<double>(x);
    nodes[i] = static_cast<double>(-x);
    const double w = static_cast<double>(2.0L / (dp * dp));
    weights[n - 1 - i] = w;
    weights[i] = w;
  }
  if (n % 2 == 1) {
    nodes[n / 2] = 0.0;
    long double p, dp;
    hermite_orthonormal(n, 0.0L, p, dp);
    weights[n / 2] = static_cast<double>(2.0L / (dp * dp));
  }
  return {nodes, weights};
}

}  // namespace mcid
