#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace mcid {

// Gauss-Hermite nodes and weights for int e^{-t^2} f(t) dt ~= sum w_i f(t_i).
// Newton iteration on the orthonormal recurrence; nodes are symmetric.
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n);

}  // namespace mcid
