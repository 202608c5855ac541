#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "qmt/causality.hpp"

namespace qmt::testing {

inline Event random_event(const HistorySpace& hs, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution coin(p);
  std::vector<std::size_t> idx;
  for (std::size_t h = 0; h < hs.size(); ++h)
    if (coin(rng)) idx.push_back(h);
  return hs.event(idx);
}

// Product space with `points` points named p0, p1, ... each of alphabet `q`.
inline SpacePtr full_space(std::size_t points, int q) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < points; ++i) names.push_back("p" + std::to_string(i));
  std::size_t n = 1;
  for (std::size_t i = 0; i < points; ++i) n *= static_cast<std::size_t>(q);
  std::vector<std::vector<Value>> hist;
  for (std::size_t h = 0; h < n; ++h) {
    std::vector<Value> row(points);
    std::size_t rest = h;
    for (std::size_t p = points; p-- > 0;) {
      row[p] = static_cast<Value>(rest % static_cast<std::size_t>(q));
      rest /= static_cast<std::size_t>(q);
    }
    hist.push_back(row);
  }
  return make_space(names, std::vector<int>(points, q), hist);
}

// Random normalized Gram matrix V^dagger V with V of the given rank.
inline Mat random_psd(std::size_t n, std::size_t rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat v(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = cd(g(rng), g(rng));
  Mat m = v.adjoint() * v;
  return m / m.sum().real();
}

inline std::vector<std::size_t> sorted_indices(const Event& e) { return e.indices(); }

}  // namespace qmt::testing
