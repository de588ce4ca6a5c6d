#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "mcid/dataset.hpp"

using namespace mcid;

namespace {
struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path = "mcid_test_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

Dataset small_dataset(int n, int d, unsigned seed = 0, double plus_fraction = 0.5) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd x(n);
  Eigen::VectorXi y(n);
  Eigen::MatrixXd z(n, d);
  for (int i = 0; i < n; ++i) {
    x[i] = gauss(eng);
    y[i] = (i < n * plus_fraction) ? 1 : -1;
    for (int j = 0; j < d; ++j) z(i, j) = gauss(eng);
  }
  return Dataset::make(x, y, z);
}
}  // namespace

TEST_CASE("load_csv parses a simple file") {
  TempCsv f("y,x,z1,z2\n1,0.5,1.0,2.0\n-1,-0.25,0,1\n1,1.5,2,3\n-1,0.75,4,5\n");
  const Dataset d = load_csv(f.path);
  CHECK(d.n == 4);
  CHECK(d.d == 2);
  CHECK(d.y[0] == 1);
  CHECK(d.y[1] == -1);
  CHECK(d.x[2] == doctest::Approx(1.5));
  CHECK(d.z(3, 1) == doctest::Approx(5.0));
}

TEST_CASE("load_csv maps 0/1 labels to -1/+1") {
  TempCsv f("y,x,z1\n0,1,1\n1,2,2\n0,3,3\n1,4,4\n");
  const Dataset d = load_csv(f.path);
  CHECK(d.y[0] == -1);
  CHECK(d.y[1] == 1);
  CHECK(d.y[2] == -1);
}

TEST_CASE("load_csv error cases name the location") {
  TempCsv nan_file("y,x,z1,z2,z3\n1,1,1,1,1\n-1,1,1,1,1\n1,1,1,1,1\n-1,1,1,1,nan\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(nan_file.path)),
                       doctest::Contains("row 5"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(nan_file.path)),
                       doctest::Contains("z3"), std::invalid_argument);

  TempCsv missing("y,x,zz1\n1,1,1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(missing.path)),
                       doctest::Contains("missing column z1"), std::invalid_argument);

  TempCsv empty("");
  CHECK_THROWS_AS(static_cast<void>(load_csv(empty.path)), std::invalid_argument);

  TempCsv ragged("y,x,z1\n1,1,1\n-1,1\n1,1,1\n-1,1,1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(ragged.path)),
                       doctest::Contains("row 3"), std::invalid_argument);

  TempCsv text_cell("y,x,z1\n1,1,abc\n-1,1,1\n1,1,1\n-1,1,1\n");
  CHECK_THROWS_AS(static_cast<void>(load_csv(text_cell.path)), std::invalid_argument);

  CHECK_THROWS_AS(static_cast<void>(load_csv("definitely_not_here.csv")), std::invalid_argument);

  TempCsv mixed("y,x,z1\n-1,1,1\n0,1,1\n1,1,1\n-1,1,1\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_csv(mixed.path)), doctest::Contains("mixes"),
                       std::invalid_argument);
}

TEST_CASE("empirical weights") {
  const Dataset d = small_dataset(10, 2, 1, 0.3);  // three +1 labels
  const WeightFn w = empirical_weights(d, WeightMode::InverseProportion);
  CHECK(w.w_plus == doctest::Approx(10.0 / 3.0).epsilon(1e-14));
  CHECK(w.w_minus == doctest::Approx(10.0 / 7.0).epsilon(1e-14));
  // w_plus * pi = w_minus * (1 - pi) = 1
  CHECK(w.w_plus * 0.3 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.w_minus * 0.7 == doctest::Approx(1.0).epsilon(1e-12));

  const WeightFn u = empirical_weights(d, WeightMode::Uniform);
  CHECK(u.w_plus == 0.5);
  CHECK(u.w_minus == 0.5);
  CHECK(u(1) == 0.5);

  const Dataset all_plus = small_dataset(8, 2, 1, 1.0);
  CHECK_THROWS_AS(static_cast<void>(empirical_weights(all_plus, WeightMode::InverseProportion)),
                  std::invalid_argument);
  CHECK_NOTHROW(static_cast<void>(empirical_weights(all_plus, WeightMode::Uniform)));
}

TEST_CASE("two-fold split sizes and determinism") {
  const Dataset d10 = small_dataset(10, 2, 3);
  const FoldPair f = split_two_folds(d10, 7);
  CHECK(f.fold1.size() == 5);
  CHECK(f.fold2.size() == 5);
  const FoldPair again = split_two_folds(d10, 7);
  CHECK(f.fold1 == again.fold1);
  CHECK(f.fold2 == again.fold2);

  const Dataset d9 = small_dataset(9, 2, 3);
  const FoldPair g = split_two_folds(d9, 11);
  CHECK(g.fold1.size() == 5);
  CHECK(g.fold2.size() == 4);
}

TEST_CASE("fold splits partition the index set for random n and seeds") {
  std::mt19937_64 eng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 4 + static_cast<int>(eng() % 40);
    const Dataset d = small_dataset(n, 2, rep);
    const FoldPair f = split_two_folds(d, eng());
    std::set<Eigen::Index> seen(f.fold1.begin(), f.fold1.end());
    CHECK(seen.size() == f.fold1.size());
    for (Eigen::Index i : f.fold2) CHECK(seen.insert(i).second);
    CHECK(seen.size() == static_cast<std::size_t>(n));
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == n - 1);
    // both labels in both folds
    for (const auto* fold : {&f.fold1, &f.fold2}) {
      bool plus = false, minus = false;
      for (Eigen::Index i : *fold) (d.y[i] > 0 ? plus : minus) = true;
      CHECK(plus);
      CHECK(minus);
    }
  }
}

TEST_CASE("label-balance retries give up on hopeless data") {
  // a single +1 label: one fold always misses it
  const Dataset d = small_dataset(12, 2, 5, 0.9 / 12.0);
  REQUIRE((d.y.array() > 0).count() == 1);
  CHECK_THROWS_AS(static_cast<void>(split_two_folds(d, 1)), std::runtime_error);
}

TEST_CASE("dataset invariants are enforced") {
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 4;
  Eigen::VectorXi y(4);
  y << 1, -1, 1, -1;
  Eigen::MatrixXd z = Eigen::MatrixXd::Ones(4, 2);
  CHECK_NOTHROW(static_cast<void>(Dataset::make(x, y, z)));

  Eigen::VectorXi bad_y = y;
  bad_y[2] = 2;
  CHECK_THROWS_AS(static_cast<void>(Dataset::make(x, bad_y, z)), std::invalid_argument);

  Eigen::MatrixXd bad_z = z;
  bad_z(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(static_cast<void>(Dataset::make(x, y, bad_z)), std::invalid_argument);

  CHECK_THROWS_AS(static_cast<void>(Dataset::make(x.head(3), y.head(3), z.topRows(3))),
                  std::invalid_argument);
}

TEST_CASE("standardized_z rescales columns without centering") {
  Dataset d = small_dataset(50, 3, 17);
  d.z.col(1) *= 7.0;
  const Dataset s = d.standardized_z();
  for (int j = 0; j < 3; ++j) {
    const double mean = s.z.col(j).mean();
    const double sd = std::sqrt((s.z.col(j).array() - mean).square().sum() / (s.n - 1));
    CHECK(sd == doctest::Approx(1.0).epsilon(1e-12));
  }
  // within a column only the scale changes
  CHECK(s.z(0, 1) / s.z(1, 1) == doctest::Approx(d.z(0, 1) / d.z(1, 1)).epsilon(1e-12));
}

TEST_CASE("k-fold split covers everything and errors on missing labels") {
  const Dataset d = small_dataset(23, 2, 8);
  const auto folds = split_k_folds(d, 5, 3);
  std::size_t total = 0;
  for (const auto& f : folds) total += f.size();
  CHECK(total == 23);

  const Dataset skew = small_dataset(12, 2, 5, 1.9 / 12.0);
  CHECK_THROWS_AS(static_cast<void>(split_k_folds(skew, 6, 3)), std::runtime_error);
}
