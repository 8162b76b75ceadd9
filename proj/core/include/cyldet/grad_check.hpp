#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "cyldet/errors.hpp"
#include "cyldet/tensor.hpp"

namespace cyldet {

// Central-difference verification of analytic gradients, run in double.
//
// `forward` evaluates the scalar loss at the current parameter values;
// `forward_backward` additionally leaves gradients in each Param::grad
// (overwriting, not accumulating on top of stale values is the caller's job;
// call sites zero grads inside the closure).
//
// With max_coords >= 0 only the first max_coords coordinates of each
// parameter are probed; -1 probes everything.
inline double fd_max_rel_error(const std::vector<Param<double>*>& params,
                               const std::function<double()>& forward,
                               const std::function<double()>& forward_backward,
                               double eps = 1e-3, int64_t max_coords = -1) {
  forward_backward();
  std::vector<TensorD> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  double max_err = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    TensorD& value = params[pi]->value;
    int64_t n = value.numel();
    if (max_coords >= 0) n = std::min(n, max_coords);
    for (int64_t i = 0; i < n; ++i) {
      const double orig = value.data[i];
      value.data[i] = orig + eps;
      const double up = forward();
      value.data[i] = orig - eps;
      const double down = forward();
      value.data[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("finite-difference probe produced a non-finite value");
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[pi].data[i];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
      max_err = std::max(max_err, std::abs(fd - an) / denom);
    }
  }
  return max_err;
}

// Directional probes for large parameter vectors: compares g.d against the
// central difference along random unit directions d.
inline double directional_probe_max_rel_error(const std::vector<Param<double>*>& params,
                                              const std::function<double()>& forward,
                                              const std::function<double()>& forward_backward,
                                              double eps, int n_probes, uint64_t seed) {
  forward_backward();
  std::vector<TensorD> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  int64_t total = 0;
  for (auto* p : params) total += p->value.numel();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double max_err = 0.0;
  for (int probe = 0; probe < n_probes; ++probe) {
    std::vector<std::vector<double>> dir(params.size());
    double norm = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
      dir[pi].resize(params[pi]->value.numel());
      for (auto& d : dir[pi]) {
        d = gauss(rng);
        norm += d * d;
      }
    }
    norm = std::sqrt(norm);
    (void)total;

    double g_dot_d = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi)
      for (int64_t i = 0; i < params[pi]->value.numel(); ++i) {
        dir[pi][i] /= norm;
        g_dot_d += analytic[pi].data[i] * dir[pi][i];
      }

    auto shift = [&](double scale) {
      for (size_t pi = 0; pi < params.size(); ++pi)
        for (int64_t i = 0; i < params[pi]->value.numel(); ++i)
          params[pi]->value.data[i] += scale * dir[pi][i];
    };
    shift(eps);
    const double up = forward();
    shift(-2.0 * eps);
    const double down = forward();
    shift(eps);
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("finite-difference probe produced a non-finite value");
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(g_dot_d), 1e-8});
    max_err = std::max(max_err, std::abs(fd - g_dot_d) / denom);
  }
  return max_err;
}

}  // namespace cyldet
