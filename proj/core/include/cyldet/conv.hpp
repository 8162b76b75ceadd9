#pragma once

#include <algorithm>
#include <cassert>
#include <functional>
#include <vector>

#include "cyldet/errors.hpp"
#include "cyldet/tensor.hpp"

namespace cyldet {

enum class PadMode { Zero, Circular };

struct AxisSpec {
  int kernel = 1;    // odd
  int stride = 1;
  int dilation = 1;
  PadMode pad = PadMode::Zero;

  int padding() const { return (kernel - 1) * dilation / 2; }
  int out_extent(int n) const { return (n + stride - 1) / stride; }  // ceil(n / stride)
};

// Spatial axes are (z, r, t) with t the circular theta axis; 2D maps ride
// along with z extent 1 and a 1-tap z axis.
struct Conv3dSpec {
  int in_ch = 0;
  int out_ch = 0;
  AxisSpec z, r, t;
};

namespace detail {

// Input index per (output position, tap); -1 marks a zero-padded miss.
inline std::vector<int> axis_index_table(const AxisSpec& ax, int n, int out_n) {
  std::vector<int> table(static_cast<size_t>(out_n) * ax.kernel);
  int p = ax.padding();
  for (int o = 0; o < out_n; ++o) {
    for (int k = 0; k < ax.kernel; ++k) {
      int i = o * ax.stride - p + k * ax.dilation;
      if (ax.pad == PadMode::Circular) {
        i = ((i % n) + n) % n;
      } else if (i < 0 || i >= n) {
        i = -1;
      }
      table[static_cast<size_t>(o) * ax.kernel + k] = i;
    }
  }
  return table;
}

void parallel_for(int64_t count, int threads, const std::function<void(int64_t, int64_t)>& body);

}  // namespace detail

template <class T>
void check_conv_shapes(const TensorT<T>& x, const TensorT<T>& w, const Conv3dSpec& spec) {
  if (x.rank() != 5 || x.dim(1) != spec.in_ch)
    throw NumericError("conv: input shape mismatch");
  if (w.rank() != 5 || w.dim(0) != spec.out_ch || w.dim(1) != spec.in_ch ||
      w.dim(2) != spec.z.kernel || w.dim(3) != spec.r.kernel || w.dim(4) != spec.t.kernel)
    throw NumericError("conv: weight shape mismatch");
  if (spec.z.pad == PadMode::Circular || spec.r.pad == PadMode::Circular)
    throw NumericError("conv: circular padding is reserved for the theta axis");
}

// x [N, Cin, Z, R, T], w [Cout, Cin, KZ, KR, KT], b [Cout] ->
// out [N, Cout, ceil(Z/sz), ceil(R/sr), ceil(T/st)].
template <class T>
TensorT<T> conv3d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                          const Conv3dSpec& spec, int threads = 1) {
  check_conv_shapes(x, w, spec);
  const int64_t N = x.dim(0), Z = x.dim(2), R = x.dim(3), Tn = x.dim(4);
  const int64_t OZ = spec.z.out_extent(static_cast<int>(Z));
  const int64_t OR = spec.r.out_extent(static_cast<int>(R));
  const int64_t OT = spec.t.out_extent(static_cast<int>(Tn));
  TensorT<T> out({N, spec.out_ch, OZ, OR, OT});

  const auto ztab = detail::axis_index_table(spec.z, static_cast<int>(Z), static_cast<int>(OZ));
  const auto rtab = detail::axis_index_table(spec.r, static_cast<int>(R), static_cast<int>(OR));
  const auto ttab = detail::axis_index_table(spec.t, static_cast<int>(Tn), static_cast<int>(OT));
  const int KZ = spec.z.kernel, KR = spec.r.kernel, KT = spec.t.kernel;

  detail::parallel_for(N * spec.out_ch, threads, [&](int64_t lo, int64_t hi) {
    for (int64_t nco = lo; nco < hi; ++nco) {
      const int64_t n = nco / spec.out_ch;
      const int64_t co = nco % spec.out_ch;
      T* out_base = out.data.data() + ((n * spec.out_ch + co) * OZ) * OR * OT;
      std::fill(out_base, out_base + OZ * OR * OT, b.data[co]);
      for (int64_t ci = 0; ci < spec.in_ch; ++ci) {
        const T* x_base = x.data.data() + ((n * spec.in_ch + ci) * Z) * R * Tn;
        const T* w_base =
            w.data.data() + ((co * spec.in_ch + ci) * KZ) * KR * KT;
        for (int kz = 0; kz < KZ; ++kz)
          for (int kr = 0; kr < KR; ++kr)
            for (int kt = 0; kt < KT; ++kt) {
              const T wv = w_base[(kz * KR + kr) * KT + kt];
              if (wv == T(0)) continue;
              for (int64_t oz = 0; oz < OZ; ++oz) {
                const int iz = ztab[oz * KZ + kz];
                if (iz < 0) continue;
                for (int64_t orr = 0; orr < OR; ++orr) {
                  const int ir = rtab[orr * KR + kr];
                  if (ir < 0) continue;
                  const T* in_row = x_base + (static_cast<int64_t>(iz) * R + ir) * Tn;
                  T* out_row = out_base + (oz * OR + orr) * OT;
                  const int* trow = ttab.data() + kt;
                  for (int64_t ot = 0; ot < OT; ++ot) {
                    const int it = trow[ot * KT];
                    if (it >= 0) out_row[ot] += wv * in_row[it];
                  }
                }
              }
            }
      }
    }
  });
  return out;
}

// Gradients for conv3d_forward. grad_w/grad_b are accumulated into; grad_x is
// written. Circular taps scatter their wrapped contributions additively.
template <class T>
void conv3d_backward(const TensorT<T>& x, const TensorT<T>& w, const Conv3dSpec& spec,
                     const TensorT<T>& grad_out, TensorT<T>& grad_x, TensorT<T>& grad_w,
                     TensorT<T>& grad_b, int threads = 1) {
  check_conv_shapes(x, w, spec);
  const int64_t N = x.dim(0), Z = x.dim(2), R = x.dim(3), Tn = x.dim(4);
  const int64_t OZ = grad_out.dim(2), OR = grad_out.dim(3), OT = grad_out.dim(4);
  grad_x = TensorT<T>(x.shape);

  const auto ztab = detail::axis_index_table(spec.z, static_cast<int>(Z), static_cast<int>(OZ));
  const auto rtab = detail::axis_index_table(spec.r, static_cast<int>(R), static_cast<int>(OR));
  const auto ttab = detail::axis_index_table(spec.t, static_cast<int>(Tn), static_cast<int>(OT));
  const int KZ = spec.z.kernel, KR = spec.r.kernel, KT = spec.t.kernel;

  // d/dx: each sample is independent.
  detail::parallel_for(N, threads, [&](int64_t n_lo, int64_t n_hi) {
    for (int64_t n = n_lo; n < n_hi; ++n) {
      for (int64_t co = 0; co < spec.out_ch; ++co) {
        const T* go_base = grad_out.data.data() + ((n * spec.out_ch + co) * OZ) * OR * OT;
        for (int64_t ci = 0; ci < spec.in_ch; ++ci) {
          T* gx_base = grad_x.data.data() + ((n * spec.in_ch + ci) * Z) * R * Tn;
          const T* w_base = w.data.data() + ((co * spec.in_ch + ci) * KZ) * KR * KT;
          for (int kz = 0; kz < KZ; ++kz)
            for (int kr = 0; kr < KR; ++kr)
              for (int kt = 0; kt < KT; ++kt) {
                const T wv = w_base[(kz * KR + kr) * KT + kt];
                if (wv == T(0)) continue;
                for (int64_t oz = 0; oz < OZ; ++oz) {
                  const int iz = ztab[oz * KZ + kz];
                  if (iz < 0) continue;
                  for (int64_t orr = 0; orr < OR; ++orr) {
                    const int ir = rtab[orr * KR + kr];
                    if (ir < 0) continue;
                    const T* go_row = go_base + (oz * OR + orr) * OT;
                    T* gx_row = gx_base + (static_cast<int64_t>(iz) * R + ir) * Tn;
                    const int* trow = ttab.data() + kt;
                    for (int64_t ot = 0; ot < OT; ++ot) {
                      const int it = trow[ot * KT];
                      if (it >= 0) gx_row[it] += wv * go_row[ot];
                    }
                  }
                }
              }
        }
      }
    }
  });

  // d/dw and d/db: each output channel is independent.
  detail::parallel_for(spec.out_ch, threads, [&](int64_t co_lo, int64_t co_hi) {
    for (int64_t co = co_lo; co < co_hi; ++co) {
      T gb = T(0);
      for (int64_t n = 0; n < N; ++n) {
        const T* go_base = grad_out.data.data() + ((n * spec.out_ch + co) * OZ) * OR * OT;
        for (int64_t i = 0; i < OZ * OR * OT; ++i) gb += go_base[i];
        for (int64_t ci = 0; ci < spec.in_ch; ++ci) {
          const T* x_base = x.data.data() + ((n * spec.in_ch + ci) * Z) * R * Tn;
          T* gw_base = grad_w.data.data() + ((co * spec.in_ch + ci) * KZ) * KR * KT;
          for (int kz = 0; kz < KZ; ++kz)
            for (int kr = 0; kr < KR; ++kr)
              for (int kt = 0; kt < KT; ++kt) {
                T acc = T(0);
                for (int64_t oz = 0; oz < OZ; ++oz) {
                  const int iz = ztab[oz * KZ + kz];
                  if (iz < 0) continue;
                  for (int64_t orr = 0; orr < OR; ++orr) {
                    const int ir = rtab[orr * KR + kr];
                    if (ir < 0) continue;
                    const T* x_row = x_base + (static_cast<int64_t>(iz) * R + ir) * Tn;
                    const T* go_row = go_base + (oz * OR + orr) * OT;
                    const int* trow = ttab.data() + kt;
                    for (int64_t ot = 0; ot < OT; ++ot) {
                      const int it = trow[ot * KT];
                      if (it >= 0) acc += go_row[ot] * x_row[it];
                    }
                  }
                }
                gw_base[(kz * KR + kr) * KT + kt] += acc;
              }
        }
      }
      grad_b.data[co] += gb;
    }
  });
}

// Transposed convolution; w [Cin, Cout, KZ, KR, KT]. The declared output
// extents must satisfy ceil(out/stride) == in per axis, making the op the
// exact adjoint of the matching forward convolution.
template <class T>
TensorT<T> tconv3d_forward(const TensorT<T>& y, const TensorT<T>& w, const TensorT<T>& b,
                           const Conv3dSpec& spec, int out_z, int out_r, int out_t,
                           int threads = 1) {
  if (y.rank() != 5 || y.dim(1) != spec.in_ch)
    throw NumericError("tconv: input shape mismatch");
  if (w.dim(0) != spec.in_ch || w.dim(1) != spec.out_ch)
    throw NumericError("tconv: weight shape mismatch");
  const int64_t N = y.dim(0), IZ = y.dim(2), IR = y.dim(3), IT = y.dim(4);
  if (spec.z.out_extent(out_z) != IZ || spec.r.out_extent(out_r) != IR ||
      spec.t.out_extent(out_t) != IT)
    throw NumericError("tconv: declared output extent is inconsistent with the stride");
  TensorT<T> out({N, spec.out_ch, out_z, out_r, out_t});

  const auto ztab = detail::axis_index_table(spec.z, out_z, static_cast<int>(IZ));
  const auto rtab = detail::axis_index_table(spec.r, out_r, static_cast<int>(IR));
  const auto ttab = detail::axis_index_table(spec.t, out_t, static_cast<int>(IT));
  const int KZ = spec.z.kernel, KR = spec.r.kernel, KT = spec.t.kernel;

  detail::parallel_for(N * spec.out_ch, threads, [&](int64_t lo, int64_t hi) {
    for (int64_t nco = lo; nco < hi; ++nco) {
      const int64_t n = nco / spec.out_ch;
      const int64_t co = nco % spec.out_ch;
      T* out_base = out.data.data() + ((n * spec.out_ch + co) * out_z) * out_r * out_t;
      std::fill(out_base, out_base + static_cast<int64_t>(out_z) * out_r * out_t, b.data[co]);
      for (int64_t ci = 0; ci < spec.in_ch; ++ci) {
        const T* y_base = y.data.data() + ((n * spec.in_ch + ci) * IZ) * IR * IT;
        const T* w_base = w.data.data() + ((ci * spec.out_ch + co) * KZ) * KR * KT;
        for (int kz = 0; kz < KZ; ++kz)
          for (int kr = 0; kr < KR; ++kr)
            for (int kt = 0; kt < KT; ++kt) {
              const T wv = w_base[(kz * KR + kr) * KT + kt];
              if (wv == T(0)) continue;
              for (int64_t oz = 0; oz < IZ; ++oz) {
                const int iz = ztab[oz * KZ + kz];
                if (iz < 0) continue;
                for (int64_t orr = 0; orr < IR; ++orr) {
                  const int ir = rtab[orr * KR + kr];
                  if (ir < 0) continue;
                  const T* y_row = y_base + (oz * IR + orr) * IT;
                  T* out_row = out_base + (static_cast<int64_t>(iz) * out_r + ir) * out_t;
                  const int* trow = ttab.data() + kt;
                  for (int64_t ot = 0; ot < IT; ++ot) {
                    const int it = trow[ot * KT];
                    if (it >= 0) out_row[it] += wv * y_row[ot];
                  }
                }
              }
            }
      }
    }
  });
  return out;
}

template <class T>
void tconv3d_backward(const TensorT<T>& y, const TensorT<T>& w, const Conv3dSpec& spec,
                      const TensorT<T>& grad_out, TensorT<T>& grad_y, TensorT<T>& grad_w,
                      TensorT<T>& grad_b, int threads = 1) {
  const int64_t N = y.dim(0), IZ = y.dim(2), IR = y.dim(3), IT = y.dim(4);
  const int out_z = static_cast<int>(grad_out.dim(2));
  const int out_r = static_cast<int>(grad_out.dim(3));
  const int out_t = static_cast<int>(grad_out.dim(4));
  grad_y = TensorT<T>(y.shape);

  const auto ztab = detail::axis_index_table(spec.z, out_z, static_cast<int>(IZ));
  const auto rtab = detail::axis_index_table(spec.r, out_r, static_cast<int>(IR));
  const auto ttab = detail::axis_index_table(spec.t, out_t, static_cast<int>(IT));
  const int KZ = spec.z.kernel, KR = spec.r.kernel, KT = spec.t.kernel;

  detail::parallel_for(N, threads, [&](int64_t n_lo, int64_t n_hi) {
    for (int64_t n = n_lo; n < n_hi; ++n)
      for (int64_t ci = 0; ci < spec.in_ch; ++ci) {
        T* gy_base = grad_y.data.data() + ((n * spec.in_ch + ci) * IZ) * IR * IT;
        for (int64_t co = 0; co < spec.out_ch; ++co) {
          const T* go_base =
              grad_out.data.data() + ((n * spec.out_ch + co) * out_z) * out_r * out_t;
          const T* w_base = w.data.data() + ((ci * spec.out_ch + co) * KZ) * KR * KT;
          for (int kz = 0; kz < KZ; ++kz)
            for (int kr = 0; kr < KR; ++kr)
              for (int kt = 0; kt < KT; ++kt) {
                const T wv = w_base[(kz * KR + kr) * KT + kt];
                if (wv == T(0)) continue;
                for (int64_t oz = 0; oz < IZ; ++oz) {
                  const int iz = ztab[oz * KZ + kz];
                  if (iz < 0) continue;
                  for (int64_t orr = 0; orr < IR; ++orr) {
                    const int ir = rtab[orr * KR + kr];
                    if (ir < 0) continue;
                    T* gy_row = gy_base + (oz * IR + orr) * IT;
                    const T* go_row =
                        go_base + (static_cast<int64_t>(iz) * out_r + ir) * out_t;
                    const int* trow = ttab.data() + kt;
                    for (int64_t ot = 0; ot < IT; ++ot) {
                      const int it = trow[ot * KT];
                      if (it >= 0) gy_row[ot] += wv * go_row[it];
                    }
                  }
                }
              }
        }
      }
  });

  detail::parallel_for(spec.out_ch, threads, [&](int64_t co_lo, int64_t co_hi) {
    for (int64_t co = co_lo; co < co_hi; ++co) {
      T gb = T(0);
      for (int64_t n = 0; n < N; ++n) {
        const T* go_base =
            grad_out.data.data() + ((n * spec.out_ch + co) * out_z) * out_r * out_t;
        for (int64_t i = 0; i < static_cast<int64_t>(out_z) * out_r * out_t; ++i)
          gb += go_base[i];
        for (int64_t ci = 0; ci < spec.in_ch; ++ci) {
          const T* y_base = y.data.data() + ((n * spec.in_ch + ci) * IZ) * IR * IT;
          T* gw_base = grad_w.data.data() + ((ci * spec.out_ch + co) * KZ) * KR * KT;
          for (int kz = 0; kz < KZ; ++kz)
            for (int kr = 0; kr < KR; ++kr)
              for (int kt = 0; kt < KT; ++kt) {
                T acc = T(0);
                for (int64_t oz = 0; oz < IZ; ++oz) {
                  const int iz = ztab[oz * KZ + kz];
                  if (iz < 0) continue;
                  for (int64_t orr = 0; orr < IR; ++orr) {
                    const int ir = rtab[orr * KR + kr];
                    if (ir < 0) continue;
                    const T* y_row = y_base + (oz * IR + orr) * IT;
                    const T* go_row =
                        go_base + (static_cast<int64_t>(iz) * out_r + ir) * out_t;
                    const int* trow = ttab.data() + kt;
                    for (int64_t ot = 0; ot < IT; ++ot) {
                      const int it = trow[ot * KT];
                      if (it >= 0) acc += y_row[ot] * go_row[it];
                    }
                  }
                }
                gw_base[(kz * KR + kr) * KT + kt] += acc;
              }
        }
      }
      grad_b.data[co] += gb;
    }
  });
}

// Mean pool with window == stride per axis (edge windows are clipped and
// divided by their actual size). Used to downsample the range matrix, which
// carries no gradient.
template <class T>
TensorT<T> avg_pool3d(const TensorT<T>& x, int sz, int sr, int st) {
  const int64_t N = x.dim(0), C = x.dim(1), Z = x.dim(2), R = x.dim(3), Tn = x.dim(4);
  const int64_t OZ = (Z + sz - 1) / sz, OR = (R + sr - 1) / sr, OT = (Tn + st - 1) / st;
  TensorT<T> out({N, C, OZ, OR, OT});
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t oz = 0; oz < OZ; ++oz)
        for (int64_t orr = 0; orr < OR; ++orr)
          for (int64_t ot = 0; ot < OT; ++ot) {
            T sum = T(0);
            int64_t cnt = 0;
            for (int64_t iz = oz * sz; iz < std::min(Z, (oz + 1) * sz); ++iz)
              for (int64_t ir = orr * sr; ir < std::min(R, (orr + 1) * sr); ++ir)
                for (int64_t it = ot * st; it < std::min(Tn, (ot + 1) * st); ++it) {
                  sum += x(n, c, iz, ir, it);
                  ++cnt;
                }
            out(n, c, oz, orr, ot) = sum / static_cast<T>(cnt);
          }
  return out;
}

}  // namespace cyldet
