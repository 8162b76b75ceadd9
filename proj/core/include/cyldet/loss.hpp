#pragma once

#include <algorithm>
#include <cmath>

#include "cyldet/errors.hpp"
#include "cyldet/tensor.hpp"

namespace cyldet {

template <class T>
struct LossResult {
  T value = T(0);
  TensorT<T> grad;  // d(value)/d(input)
};

// Penalty-reduced focal loss on heatmap logits. Cells with target exactly 1
// are positives; everything else is weighted down by (1 - y)^beta. The sum is
// normalized by max(1, #positives).
template <class T>
LossResult<T> focal_loss(const TensorT<T>& logits, const TensorT<T>& target, T alpha = T(2),
                         T beta = T(4)) {
  if (!logits.same_shape(target)) throw NumericError("focal_loss: shape mismatch");
  constexpr T lo = T(1e-6), hi = T(1) - T(1e-6);
  LossResult<T> res;
  res.grad = TensorT<T>(logits.shape);

  int64_t n_pos = 0;
  for (int64_t i = 0; i < target.numel(); ++i)
    if (target.data[i] == T(1)) ++n_pos;
  const T norm = T(1) / static_cast<T>(std::max<int64_t>(1, n_pos));

  T total = T(0);
  for (int64_t i = 0; i < logits.numel(); ++i) {
    const T x = logits.data[i];
    const T y = target.data[i];
    const T p_raw = T(1) / (T(1) + std::exp(-x));
    const T p = std::clamp(p_raw, lo, hi);
    const T dpdx = (p_raw > lo && p_raw < hi) ? p_raw * (T(1) - p_raw) : T(0);
    T dLdp;
    if (y == T(1)) {
      const T q = T(1) - p;
      total += -std::pow(q, alpha) * std::log(p);
      dLdp = alpha * std::pow(q, alpha - T(1)) * std::log(p) - std::pow(q, alpha) / p;
    } else {
      const T w = std::pow(T(1) - y, beta);
      total += -w * std::pow(p, alpha) * std::log(T(1) - p);
      dLdp = -w * (alpha * std::pow(p, alpha - T(1)) * std::log(T(1) - p) -
                   std::pow(p, alpha) / (T(1) - p));
    }
    res.grad.data[i] = dLdp * dpdx * norm;
  }
  res.value = total * norm;
  return res;
}

// L1 regression at masked cells, averaged over the 10 channels and then over
// the masked cells. Size channels are stored in log space by the encoder, so
// a plain L1 here is the log-space L1. Empty mask -> zero loss, zero grads.
template <class T>
LossResult<T> reg_loss(const TensorT<T>& pred, const TensorT<T>& target, const TensorT<T>& mask) {
  if (!pred.same_shape(target)) throw NumericError("reg_loss: shape mismatch");
  LossResult<T> res;
  res.grad = TensorT<T>(pred.shape);

  const int64_t N = pred.dim(0), C = pred.dim(1);
  const int64_t cell_count = pred.numel() / (N * C);
  if (mask.numel() != N * cell_count) throw NumericError("reg_loss: mask shape mismatch");

  int64_t n_masked = 0;
  for (int64_t i = 0; i < mask.numel(); ++i)
    if (mask.data[i] != T(0)) ++n_masked;
  if (n_masked == 0) return res;
  const T norm = T(1) / (static_cast<T>(n_masked) * static_cast<T>(C));

  T total = T(0);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t cell = 0; cell < cell_count; ++cell) {
      if (mask.data[n * cell_count + cell] == T(0)) continue;
      for (int64_t c = 0; c < C; ++c) {
        const int64_t idx = (n * C + c) * cell_count + cell;
        const T d = pred.data[idx] - target.data[idx];
        total += std::abs(d);
        res.grad.data[idx] = (d > T(0) ? norm : (d < T(0) ? -norm : T(0)));
      }
    }
  res.value = total * norm;
  return res;
}

template <class T>
TensorT<T> sigmoid(const TensorT<T>& logits) {
  TensorT<T> out(logits.shape);
  for (int64_t i = 0; i < logits.numel(); ++i)
    out.data[i] = T(1) / (T(1) + std::exp(-logits.data[i]));
  return out;
}

}  // namespace cyldet
