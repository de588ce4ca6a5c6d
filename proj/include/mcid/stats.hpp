#pragma once

#include <cstdint>
#include <vector>

namespace mcid {

// Standard normal density, CDF, upper tail and quantile.
double norm_pdf(double x);
double norm_cdf(double x);
double norm_upper_tail(double x);   // 1 - Phi(x), accurate in the tail
double norm_quantile(double p);     // Phi^{-1}, Wichura AS241

// Two-sided p-value of a standard-normal statistic.
double two_sided_p(double stat);

// Kolmogorov-Smirnov test of a sample against N(0,1).
// Returns the KS statistic; p-value from the asymptotic Kolmogorov
// distribution with the Stephens small-sample adjustment.
double ks_statistic_normal(std::vector<double> sample);
double ks_pvalue(double d, std::size_t n);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

// Neumaier compensated accumulator for long scalar sums.
class NeumaierSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// 64-bit mixing used everywhere seeds are derived from a master seed:
// derive_seed(master, k) = splitmix64(master + (k+1) * golden_gamma).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Deterministic uniform/normal generator: the mt19937_64 stream (whose
// output sequence the standard fixes) mapped to (0,1) doubles, normals via
// the AS241 inverse CDF. std::normal_distribution is implementation-defined,
// so it is not used anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  ~Rng();
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;
  Rng(Rng&&) noexcept;
  Rng& operator=(Rng&&) noexcept;

  double uniform();             // in (0,1)
  double uniform_signed();      // in (-1,1)
  double normal();
  std::uint64_t next_u64();

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace mcid
