#include "mcid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mcid {

Dataset Dataset::make(Eigen::VectorXd x, Eigen::VectorXi y, Eigen::MatrixXd z) {
  Dataset ds;
  ds.n = x.size();
  ds.d = z.cols();
  if (y.size() != ds.n || z.rows() != ds.n)
    throw std::invalid_argument("dataset: x, y, z row counts differ");
  if (ds.n < 4) throw std::invalid_argument("dataset: need n >= 4");
  if (ds.d < 1) throw std::invalid_argument("dataset: need d >= 1");
  for (Eigen::Index i = 0; i < ds.n; ++i) {
    if (y[i] != 1 && y[i] != -1)
      throw std::invalid_argument("dataset: y[" + std::to_string(i + 1) + "] not in {-1,+1}");
    if (!std::isfinite(x[i]))
      throw std::invalid_argument("dataset: non-finite x at row " + std::to_string(i + 1));
  }
  if (!z.allFinite()) {
    for (Eigen::Index i = 0; i < ds.n; ++i)
      for (Eigen::Index j = 0; j < ds.d; ++j)
        if (!std::isfinite(z(i, j)))
          throw std::invalid_argument("dataset: non-finite z at row " + std::to_string(i + 1) +
                                      ", column z" + std::to_string(j + 1));
  }
  ds.x = std::move(x);
  ds.y = std::move(y);
  ds.z = std::move(z);
  return ds;
}

Dataset Dataset::standardized_z() const {
  Eigen::MatrixXd zs = z;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = zs.col(j).mean();
    const double var = (zs.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    if (sd > 0.0) zs.col(j) /= sd;
  }
  return Dataset::make(x, y, std::move(zs));
}

WeightFn empirical_weights(const Dataset& data, WeightMode mode) {
  WeightFn w;
  w.mode = mode;
  if (mode == WeightMode::Uniform) {
    w.w_plus = w.w_minus = 0.5;
    return w;
  }
  const Eigen::Index n_plus = (data.y.array() > 0).count();
  if (n_plus == 0 || n_plus == data.n)
    throw std::invalid_argument("empirical_weights: degenerate labels, all y identical");
  const double pi_hat = static_cast<double>(n_plus) / static_cast<double>(data.n);
  w.w_plus = 1.0 / pi_hat;
  w.w_minus = 1.0 / (1.0 - pi_hat);
  return w;
}

namespace {
bool fold_has_both_labels(const Dataset& data, const std::vector<Eigen::Index>& idx) {
  bool plus = false, minus = false;
  for (Eigen::Index i : idx) {
    if (data.y[i] > 0)
      plus = true;
    else
      minus = true;
    if (plus && minus) return true;
  }
  return false;
}
}  // namespace

FoldPair split_two_folds(const Dataset& data, std::uint64_t seed) {
  if (data.n < 4) throw std::invalid_argument("split_two_folds: need n >= 4");
  std::mt19937_64 engine(seed);
  std::vector<Eigen::Index> perm(data.n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  const Eigen::Index half = (data.n + 1) / 2;
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (Eigen::Index i = data.n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(engine() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[i], perm[j]);
    }
    FoldPair fp;
    fp.seed = seed;
    fp.fold1.assign(perm.begin(), perm.begin() + half);
    fp.fold2.assign(perm.begin() + half, perm.end());
    if (fold_has_both_labels(data, fp.fold1) && fold_has_both_labels(data, fp.fold2)) return fp;
  }
  throw std::runtime_error("split_two_folds: no label-balanced split in 100 permutations");
}

std::vector<std::vector<Eigen::Index>> split_k_folds(const Dataset& data, int folds,
                                                     std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("split_k_folds: need folds >= 2");
  if (data.n < folds) throw std::invalid_argument("split_k_folds: more folds than rows");
  std::mt19937_64 engine(seed);
  std::vector<Eigen::Index> perm(data.n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index i = data.n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(engine() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<Eigen::Index>> out(folds);
  for (Eigen::Index i = 0; i < data.n; ++i) out[i % folds].push_back(perm[i]);
  for (int k = 0; k < folds; ++k)
    if (!fold_has_both_labels(data, out[k]))
      throw std::runtime_error("split_k_folds: fold " + std::to_string(k + 1) +
                               " misses a label class");
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  const std::string t = trim(cell);
  if (t.empty())
    throw std::invalid_argument("csv: empty cell at row " + std::to_string(row) + ", column " +
                                col);
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("csv: non-numeric cell '" + t + "' at row " +
                                std::to_string(row) + ", column " + col);
  }
  if (pos != t.size())
    throw std::invalid_argument("csv: non-numeric cell '" + t + "' at row " +
                                std::to_string(row) + ", column " + col);
  if (!std::isfinite(v))
    throw std::invalid_argument("csv: non-finite value at row " + std::to_string(row) +
                                ", column " + col);
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("csv: cannot open file " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file " + path);
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 3 || header[0] != "y" || header[1] != "x")
    throw std::invalid_argument("csv: header must start with y,x,z1,...");
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    const std::string want = "z" + std::to_string(j + 1);
    if (header[j + 2] != want)
      throw std::invalid_argument("csv: missing column " + want + " (found '" + header[j + 2] +
                                  "')");
  }

  std::vector<double> ys, xs;
  std::vector<std::vector<double>> zrows;
  std::size_t row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("csv: row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    ys.push_back(parse_cell(cells[0], row, "y"));
    xs.push_back(parse_cell(cells[1], row, "x"));
    std::vector<double> zr(d);
    for (std::size_t j = 0; j < d; ++j)
      zr[j] = parse_cell(cells[j + 2], row, "z" + std::to_string(j + 1));
    zrows.push_back(std::move(zr));
  }
  if (ys.empty()) throw std::invalid_argument("csv: no data rows in " + path);

  // Label coding: {-1,1} as-is, {0,1} with 0 mapped to -1. A file mixing
  // -1 and 0 is rejected rather than silently reinterpreted.
  bool has_zero = false, has_minus = false;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (ys[i] == 0.0)
      has_zero = true;
    else if (ys[i] == -1.0)
      has_minus = true;
    else if (ys[i] != 1.0)
      throw std::invalid_argument("csv: y value " + std::to_string(ys[i]) + " at row " +
                                  std::to_string(i + 2) + " not in {-1,1} or {0,1}");
  }
  if (has_zero && has_minus)
    throw std::invalid_argument("csv: y column mixes -1 and 0 codings");

  const auto n = static_cast<Eigen::Index>(ys.size());
  Eigen::VectorXd x(n);
  Eigen::VectorXi y(n);
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = xs[i];
    y[i] = (ys[i] > 0.0) ? 1 : -1;
    for (std::size_t j = 0; j < d; ++j) z(i, static_cast<Eigen::Index>(j)) = zrows[i][j];
  }
  return Dataset::make(std::move(x), std::move(y), std::move(z));
}

}  // namespace mcid
