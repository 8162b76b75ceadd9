#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cyldet/conv.hpp"
#include "cyldet/tensor.hpp"

namespace cyldet {

template <class T>
using NamedParams = std::vector<std::pair<std::string, Param<T>*>>;

template <class T>
void kaiming_uniform(TensorT<T>& w, int64_t fan_in, std::mt19937_64& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : w.data) v = static_cast<T>(dist(rng));
}

template <class T>
struct Conv3dLayer {
  Conv3dSpec spec;
  Param<T> w, b;
  TensorT<T> saved_x;

  void configure(const Conv3dSpec& s) {
    spec = s;
    w = Param<T>({s.out_ch, s.in_ch, s.z.kernel, s.r.kernel, s.t.kernel});
    b = Param<T>({s.out_ch});
  }

  void init(std::mt19937_64& rng) {
    kaiming_uniform(w.value, spec.in_ch * spec.z.kernel * spec.r.kernel * spec.t.kernel, rng);
    b.value.zero();
  }

  TensorT<T> forward(const TensorT<T>& x, int threads = 1) {
    saved_x = x;
    return conv3d_forward(x, w.value, b.value, spec, threads);
  }

  TensorT<T> backward(const TensorT<T>& grad_out, int threads = 1) {
    TensorT<T> grad_x;
    conv3d_backward(saved_x, w.value, spec, grad_out, grad_x, w.grad, b.grad, threads);
    return grad_x;
  }

  void collect(const std::string& prefix, NamedParams<T>& out) {
    out.emplace_back(prefix + ".w", &w);
    out.emplace_back(prefix + ".b", &b);
  }
};

template <class T>
struct TConv3dLayer {
  Conv3dSpec spec;  // axes describe the matching downsampling convolution
  Param<T> w, b;
  TensorT<T> saved_y;

  void configure(const Conv3dSpec& s) {
    spec = s;
    w = Param<T>({s.in_ch, s.out_ch, s.z.kernel, s.r.kernel, s.t.kernel});
    b = Param<T>({s.out_ch});
  }

  void init(std::mt19937_64& rng) {
    kaiming_uniform(w.value, spec.in_ch * spec.z.kernel * spec.r.kernel * spec.t.kernel, rng);
    b.value.zero();
  }

  TensorT<T> forward(const TensorT<T>& y, int out_z, int out_r, int out_t, int threads = 1) {
    saved_y = y;
    return tconv3d_forward(y, w.value, b.value, spec, out_z, out_r, out_t, threads);
  }

  TensorT<T> backward(const TensorT<T>& grad_out, int threads = 1) {
    TensorT<T> grad_y;
    tconv3d_backward(saved_y, w.value, spec, grad_out, grad_y, w.grad, b.grad, threads);
    return grad_y;
  }

  void collect(const std::string& prefix, NamedParams<T>& out) {
    out.emplace_back(prefix + ".w", &w);
    out.emplace_back(prefix + ".b", &b);
  }
};

template <class T>
struct ReluLayer {
  TensorT<T> saved_out;

  TensorT<T> forward(TensorT<T> x) {
    for (auto& v : x.data)
      if (v < T(0)) v = T(0);
    saved_out = x;
    return x;
  }

  TensorT<T> backward(TensorT<T> grad_out) const {
    for (int64_t i = 0; i < grad_out.numel(); ++i)
      if (saved_out.data[i] <= T(0)) grad_out.data[i] = T(0);
    return grad_out;
  }
};

// Multiplicative range gating: four parallel convolutions on the feature map,
// each modulated by a 1x1 convolution on the range-only matrix, concatenated,
// reduced back by a 1x1 convolution and joined by a residual connection.
template <class T>
struct GuidingUnit {
  static constexpr int kBranches = 4;
  int in_ch = 0, out_ch = 0, mid_ch = 0;
  std::array<Conv3dLayer<T>, kBranches> branch;
  std::array<Conv3dLayer<T>, kBranches> gate;
  Conv3dLayer<T> reduce;
  std::optional<Conv3dLayer<T>> proj;  // residual projection when in_ch != out_ch

  std::array<TensorT<T>, kBranches> saved_m, saved_g;
  TensorT<T> saved_x;

  void configure(int in_channels, int out_channels, int mid_channels,
                 const std::array<int, 3>& kernel, PadMode theta_pad = PadMode::Circular) {
    in_ch = in_channels;
    out_ch = out_channels;
    mid_ch = mid_channels;
    Conv3dSpec bs;
    bs.in_ch = in_ch;
    bs.out_ch = mid_ch;
    bs.z = {kernel[0], 1, 1, PadMode::Zero};
    bs.r = {kernel[1], 1, 1, PadMode::Zero};
    bs.t = {kernel[2], 1, 1, theta_pad};
    Conv3dSpec gs;
    gs.in_ch = 1;
    gs.out_ch = mid_ch;
    gs.z = gs.r = gs.t = {1, 1, 1, PadMode::Zero};
    for (int i = 0; i < kBranches; ++i) {
      branch[i].configure(bs);
      gate[i].configure(gs);
    }
    Conv3dSpec rs;
    rs.in_ch = kBranches * mid_ch;
    rs.out_ch = out_ch;
    rs.z = rs.r = rs.t = {1, 1, 1, PadMode::Zero};
    reduce.configure(rs);
    if (in_ch != out_ch) {
      Conv3dSpec ps;
      ps.in_ch = in_ch;
      ps.out_ch = out_ch;
      ps.z = ps.r = ps.t = {1, 1, 1, PadMode::Zero};
      proj.emplace();
      proj->configure(ps);
    }
  }

  void init(std::mt19937_64& rng) {
    for (auto& c : branch) c.init(rng);
    for (auto& g : gate) {
      g.init(rng);
      // Neutral gates at start: g = 1 everywhere until the range weights move.
      g.w.value.zero();
      g.b.value.fill(T(1));
    }
    reduce.init(rng);
    if (proj) proj->init(rng);
  }

  // x [N, in_ch, Z, R, T]; range [1, 1, 1, R, T] broadcast over batch and z.
  TensorT<T> forward(const TensorT<T>& x, const TensorT<T>& range, int threads = 1) {
    saved_x = x;
    const int64_t N = x.dim(0), Z = x.dim(2), R = x.dim(3), Tn = x.dim(4);
    TensorT<T> cat({N, kBranches * mid_ch, Z, R, Tn});
    for (int bi = 0; bi < kBranches; ++bi) {
      saved_m[bi] = branch[bi].forward(x, threads);
      saved_g[bi] = gate[bi].forward(range, threads);  // [1, mid, 1, R, T]
      const TensorT<T>& m = saved_m[bi];
      const TensorT<T>& g = saved_g[bi];
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < mid_ch; ++c) {
          const T* g_row = g.data.data() + c * R * Tn;
          for (int64_t z = 0; z < Z; ++z) {
            const T* m_row = m.data.data() + (((n * mid_ch + c) * Z + z) * R) * Tn;
            T* o_row =
                cat.data.data() +
                (((n * kBranches * mid_ch + bi * mid_ch + c) * Z + z) * R) * Tn;
            for (int64_t i = 0; i < R * Tn; ++i) o_row[i] = m_row[i] * g_row[i];
          }
        }
    }
    TensorT<T> out = reduce.forward(cat, threads);
    if (proj) {
      TensorT<T> res = proj->forward(x, threads);
      for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += res.data[i];
    } else {
      for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += x.data[i];
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out, int threads = 1) {
    const int64_t N = saved_x.dim(0), Z = saved_x.dim(2), R = saved_x.dim(3),
                  Tn = saved_x.dim(4);
    TensorT<T> grad_cat = reduce.backward(grad_out, threads);
    TensorT<T> grad_x(saved_x.shape);
    if (proj) {
      grad_x = proj->backward(grad_out, threads);
    } else {
      grad_x = grad_out;
    }
    for (int bi = 0; bi < kBranches; ++bi) {
      const TensorT<T>& m = saved_m[bi];
      const TensorT<T>& g = saved_g[bi];
      TensorT<T> grad_m(m.shape);
      TensorT<T> grad_g(g.shape);
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < mid_ch; ++c) {
          const T* g_row = g.data.data() + c * R * Tn;
          T* gg_row = grad_g.data.data() + c * R * Tn;
          for (int64_t z = 0; z < Z; ++z) {
            int64_t m_off = (((n * mid_ch + c) * Z + z) * R) * Tn;
            int64_t cat_off =
                (((n * kBranches * mid_ch + bi * mid_ch + c) * Z + z) * R) * Tn;
            const T* go_row = grad_cat.data.data() + cat_off;
            const T* m_row = m.data.data() + m_off;
            T* gm_row = grad_m.data.data() + m_off;
            for (int64_t i = 0; i < R * Tn; ++i) {
              gm_row[i] = go_row[i] * g_row[i];
              gg_row[i] += go_row[i] * m_row[i];
            }
          }
        }
      TensorT<T> gx_b = branch[bi].backward(grad_m, threads);
      for (int64_t i = 0; i < grad_x.numel(); ++i) grad_x.data[i] += gx_b.data[i];
      gate[bi].backward(grad_g, threads);  // range input carries no gradient
    }
    return grad_x;
  }

  void collect(const std::string& prefix, NamedParams<T>& out) {
    for (int i = 0; i < kBranches; ++i) {
      branch[i].collect(prefix + ".branch" + std::to_string(i), out);
      gate[i].collect(prefix + ".gate" + std::to_string(i), out);
    }
    reduce.collect(prefix + ".reduce", out);
    if (proj) proj->collect(prefix + ".proj", out);
  }
};

}  // namespace cyldet
