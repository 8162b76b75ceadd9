#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace cyldet {

// Dense row-major tensor. Training uses TensorT<float>; gradient checks
// instantiate the same kernels with TensorT<double>.
template <class T>
struct TensorT {
  std::vector<int64_t> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int64_t> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
  TensorT(std::initializer_list<int64_t> s) : TensorT(std::vector<int64_t>(s)) {}

  static int64_t numel_of(const std::vector<int64_t>& s) {
    return std::accumulate(s.begin(), s.end(), int64_t{1}, std::multiplies<int64_t>());
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t dim(size_t i) const { return shape[i]; }
  size_t rank() const { return shape.size(); }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  template <class... I>
  int64_t offset(I... idx) const {
    static_assert(sizeof...(I) > 0);
    assert(sizeof...(I) == shape.size());
    int64_t ids[] = {static_cast<int64_t>(idx)...};
    int64_t off = 0;
    for (size_t d = 0; d < shape.size(); ++d) {
      assert(ids[d] >= 0 && ids[d] < shape[d]);
      off = off * shape[d] + ids[d];
    }
    return off;
  }

  template <class... I>
  T& operator()(I... idx) {
    return data[offset(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data[offset(idx...)];
  }

  template <class U>
  TensorT<U> cast() const {
    TensorT<U> out(shape);
    for (int64_t i = 0; i < numel(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Parameter with an accumulated gradient of the same shape.
template <class T>
struct Param {
  TensorT<T> value;
  TensorT<T> grad;

  Param() = default;
  explicit Param(std::vector<int64_t> shape) : value(shape), grad(std::move(shape)) {}

  void zero_grad() { grad.zero(); }
};

}  // namespace cyldet
