#pragma once

#include <vector>

namespace mcid {

// Kernels of even order built from the Gaussian-Hermite construction
// K(t) = p(t) * phi(t), with p a polynomial chosen so that moments
// 1..order-1 vanish. Order 2 is the standard normal density. The
// polynomial representation gives closed forms for every derivative,
// the complement CDF int_u^inf K, and the moment functionals.
class Kernel {
 public:
  int order() const { return order_; }

  double eval(double t) const;

  // m-th derivative, 0 <= m <= order().
  double derivative(int m, double t) const;

  // int_u^infinity K(t) dt
  double complement_cdf(double u) const;

  // Monomial coefficients of p in K = p * phi (low degree first).
  const std::vector<double>& poly() const { return poly_; }

  static Kernel gaussian_of_order(int ell);

 private:
  Kernel(int order, std::vector<double> poly);

  int order_;
  std::vector<double> poly_;
  // deriv_poly_[m] holds the polynomial q with K^(m) = q * phi.
  std::vector<std::vector<double>> deriv_poly_;
};

inline Kernel make_gaussian_order(int ell) { return Kernel::gaussian_of_order(ell); }

struct KernelMoments {
  double gamma;     // int K(u) u^ell / ell! du
  double mu_tilde;  // int K(u)^2 du
};

// Closed-form moment functionals of a Gaussian-Hermite kernel.
KernelMoments kernel_moments(const Kernel& k);

}  // namespace mcid
