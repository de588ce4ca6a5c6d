#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace mcid {

// Immutable observation table: score change x, anchor label y in {-1,+1},
// and a row-per-observation covariate matrix z. Validated on construction;
// safe for concurrent reads.
struct Dataset {
  Eigen::VectorXd x;   // length n
  Eigen::VectorXi y;   // length n, entries in {-1, +1}
  Eigen::MatrixXd z;   // n x d
  Eigen::Index n = 0;
  Eigen::Index d = 0;

  static Dataset make(Eigen::VectorXd x, Eigen::VectorXi y, Eigen::MatrixXd z);

  // Copy with the columns of z divided by their sample standard deviation.
  // Off by default everywhere; the threshold has no intercept, so columns
  // are rescaled but not centered.
  Dataset standardized_z() const;
};

enum class WeightMode { InverseProportion, Uniform };

struct WeightFn {
  double w_plus = 0.5;
  double w_minus = 0.5;
  WeightMode mode = WeightMode::Uniform;

  double operator()(int y) const { return y > 0 ? w_plus : w_minus; }
};

WeightFn empirical_weights(const Dataset& data, WeightMode mode);

struct FoldPair {
  std::vector<Eigen::Index> fold1;
  std::vector<Eigen::Index> fold2;
  std::uint64_t seed = 0;
};

// Random half split; fold1 takes the extra sample when n is odd. Redraws
// up to 100 permutations until both folds contain both labels.
FoldPair split_two_folds(const Dataset& data, std::uint64_t seed);

// Seeded k-fold partition for cross-validation. Throws if any fold
// misses a label class.
std::vector<std::vector<Eigen::Index>> split_k_folds(const Dataset& data, int folds,
                                                     std::uint64_t seed);

// CSV ingestion. Header must be y,x,z1,...,zd; y coded {-1,1} or {0,1}
// (0 is mapped to -1). Errors name the offending row and column.
Dataset load_csv(const std::string& path);

}  // namespace mcid
