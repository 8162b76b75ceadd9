#pragma once

#include <random>

#include "cyldet/tensor.hpp"

namespace cyldet::testing {

template <class T>
TensorT<T> random_tensor(std::vector<int64_t> shape, uint64_t seed, double lo = -1.0,
                         double hi = 1.0) {
  TensorT<T> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data) v = static_cast<T>(dist(rng));
  return t;
}

// Circular shift along the innermost (theta) axis of a rank-5 tensor.
template <class T>
TensorT<T> roll_theta(const TensorT<T>& x, int64_t k) {
  TensorT<T> out(x.shape);
  const int64_t Tn = x.shape.back();
  const int64_t rows = x.numel() / Tn;
  k = ((k % Tn) + Tn) % Tn;
  for (int64_t row = 0; row < rows; ++row)
    for (int64_t t = 0; t < Tn; ++t)
      out.data[row * Tn + (t + k) % Tn] = x.data[row * Tn + t];
  return out;
}

template <class T>
double max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
  return m;
}

}  // namespace cyldet::testing
