#include "mcid/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "mcid/stats.hpp"

namespace mcid {

namespace {

double poly_eval(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
  return v;
}

// q = p' - t*p, so that (p*phi)' = q*phi.
std::vector<double> phi_product_derivative(const std::vector<double>& p) {
  std::vector<double> q(p.size() + 1, 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) q[i - 1] += static_cast<double>(i) * p[i];
  for (std::size_t i = 0; i < p.size(); ++i) q[i + 1] -= p[i];
  while (q.size() > 1 && q.back() == 0.0) q.pop_back();
  return q;
}

// Probabilists' Hermite polynomial He_m as monomial coefficients.
std::vector<double> hermite(int m) {
  std::vector<double> prev{1.0};
  if (m == 0) return prev;
  std::vector<double> cur{0.0, 1.0};
  for (int k = 1; k < m; ++k) {
    std::vector<double> next(cur.size() + 1, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= k * prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

double odd_double_factorial(int k) {
  // (k-1)!! for even k >= 0; standard normal moment E[T^k].
  double v = 1.0;
  for (int j = k - 1; j > 1; j -= 2) v *= j;
  return v;
}

}  // namespace

Kernel::Kernel(int order, std::vector<double> poly) : order_(order), poly_(std::move(poly)) {
  deriv_poly_.reserve(order_ + 1);
  deriv_poly_.push_back(poly_);
  for (int m = 1; m <= order_; ++m)
    deriv_poly_.push_back(phi_product_derivative(deriv_poly_.back()));
}

Kernel Kernel::gaussian_of_order(int ell) {
  if (ell < 2 || ell % 2 != 0) throw std::invalid_argument("kernel order must be even and >= 2");
  // p = sum_{s=0}^{ell/2-1} (-1)^s / (2^s s!) He_{2s}
  std::vector<double> p{0.0};
  double coef = 1.0;
  for (int s = 0; s < ell / 2; ++s) {
    if (s > 0) coef *= -1.0 / (2.0 * s);
    const std::vector<double> he = hermite(2 * s);
    if (he.size() > p.size()) p.resize(he.size(), 0.0);
    for (std::size_t i = 0; i < he.size(); ++i) p[i] += coef * he[i];
  }
  return Kernel(ell, std::move(p));
}

double Kernel::eval(double t) const { return poly_eval(poly_, t) * norm_pdf(t); }

double Kernel::derivative(int m, double t) const {
  if (m < 0 || m > order_) throw std::out_of_range("kernel derivative order out of range");
  return poly_eval(deriv_poly_[m], t) * norm_pdf(t);
}

double Kernel::complement_cdf(double u) const {
  // int_u^inf t^j phi(t) dt by the recursion
  //   I_0 = Q(u), I_1 = phi(u), I_j = u^{j-1} phi(u) + (j-1) I_{j-2}.
  const double q = norm_upper_tail(u);
  const double f = norm_pdf(u);
  double acc = poly_[0] * q;
  if (poly_.size() > 1) acc += poly_[1] * f;
  double im2 = q, im1 = f;
  double upow = 1.0;  // u^{j-1} for j >= 2
  for (std::size_t j = 2; j < poly_.size(); ++j) {
    upow *= u;
    const double ij = upow * f + (static_cast<double>(j) - 1.0) * im2;
    acc += poly_[j] * ij;
    im2 = im1;
    im1 = ij;
  }
  return acc;
}

KernelMoments kernel_moments(const Kernel& k) {
  const std::vector<double>& p = k.poly();
  const int ell = k.order();

  // gamma = (1/ell!) sum_j p_j E[T^{j+ell}], T ~ N(0,1)
  double raw = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const int deg = static_cast<int>(j) + ell;
    if (deg % 2 == 0) raw += p[j] * odd_double_factorial(deg);
  }
  double fact = 1.0;
  for (int i = 2; i <= ell; ++i) fact *= i;
  const double gamma = raw / fact;

  // mu_tilde = int p(t)^2 phi(t)^2 dt; phi^2 = exp(-t^2)/(2 pi) and
  // int t^{2m} exp(-t^2) dt = sqrt(pi) (2m-1)!! / 2^m.
  std::vector<double> sq(2 * p.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) sq[i + j] += p[i] * p[j];
  double mu = 0.0;
  for (std::size_t deg = 0; deg < sq.size(); deg += 2) {
    const int m = static_cast<int>(deg) / 2;
    mu += sq[deg] * odd_double_factorial(static_cast<int>(deg)) / std::pow(2.0, m);
  }
  mu /= 2.0 * std::sqrt(M_PI);

  return KernelMoments{gamma, mu};
}

}  // namespace mcid
