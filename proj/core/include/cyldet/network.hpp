#pragma once

#include <string>
#include <vector>

#include "cyldet/errors.hpp"
#include "cyldet/layers.hpp"
#include "cyldet/voxelizer.hpp"

namespace cyldet {

struct StageSpec {
  int channels = 16;
  int stride_z = 2, stride_r = 2, stride_theta = 2;
  bool guided = false;
};

struct NetworkSpec {
  int in_channels = 6;  // 5 voxel features + occupancy
  // Toy defaults sized for CPU training; the full-scale stage plan comes from
  // the config file.
  std::vector<StageSpec> stages = {{16, 2, 2, 2, false}, {32, 2, 2, 2, true}, {48, 2, 1, 1, true}};
  int kernel = 3;        // backbone kernel on z and r
  int theta_kernel = 3;  // 5 in the full-scale configuration
  int guide_mid = 8;
  std::array<int, 3> guide_kernel = {1, 3, 3};
  int rpn_channels = 32;
  int head_shared = 64;
  int num_classes = 4;
  std::vector<std::vector<int>> head_groups = {{0, 1, 2, 3}};

  int total_stride_r() const {
    int s = 1;
    for (const auto& st : stages) s *= st.stride_r;
    return s;
  }
  int total_stride_theta() const {
    int s = 1;
    for (const auto& st : stages) s *= st.stride_theta;
    return s;
  }

  // Output cells of the BEV map for a given input grid (shape arithmetic only).
  std::pair<int, int> bev_shape(int n_r, int n_theta) const {
    int r = n_r, t = n_theta;
    for (const auto& st : stages) {
      r = (r + st.stride_r - 1) / st.stride_r;
      t = (t + st.stride_theta - 1) / st.stride_theta;
    }
    return {r, t};
  }
  int bev_z(int n_z) const {
    int z = n_z;
    for (const auto& st : stages) z = (z + st.stride_z - 1) / st.stride_z;
    return z;
  }

  void validate() const {
    if (stages.empty()) throw ConfigError("network needs at least one backbone stage");
    if (theta_kernel % 2 == 0 || kernel % 2 == 0)
      throw ConfigError("convolution kernels must be odd");
    std::vector<int> seen(num_classes, 0);
    for (const auto& g : head_groups)
      for (int c : g) {
        if (c < 0 || c >= num_classes) throw ConfigError("head group has unknown class id");
        if (seen[c]++) throw ConfigError("head groups overlap on class " + std::to_string(c));
      }
    for (int c = 0; c < num_classes; ++c)
      if (!seen[c]) throw ConfigError("class missing from head groups: " + std::to_string(c));
  }
};

template <class T>
struct BackboneStage {
  Conv3dLayer<T> conv;
  ReluLayer<T> relu1;
  std::optional<GuidingUnit<T>> guide;
  ReluLayer<T> relu2;
};

template <class T>
struct HeadGroupLayer {
  Conv3dLayer<T> shared;
  ReluLayer<T> relu;
  Conv3dLayer<T> hm;
  Conv3dLayer<T> reg;
};

template <class T>
struct HeadOutput {
  TensorT<T> hm;   // [N, K_g, 1, R, T] logits
  TensorT<T> reg;  // [N, 10, 1, R, T]
};

// Range-guided backbone + two-level RPN + multi-group center head.
template <class T>
struct Network {
  NetworkSpec spec;
  std::vector<BackboneStage<T>> stages;
  Conv3dLayer<T> rpn_a1, rpn_a2;
  Conv3dLayer<T> rpn_b_down, rpn_b_mid;
  TConv3dLayer<T> rpn_b_up;
  ReluLayer<T> rpn_relu_a1, rpn_relu_a2, rpn_relu_b1, rpn_relu_b2, rpn_relu_b3;
  std::vector<HeadGroupLayer<T>> heads;

  // saved for backward
  std::vector<int64_t> saved_pre_fold_shape;
  TensorT<T> saved_bev;
  std::vector<TensorT<T>> saved_ranges;  // per-stage pooled range matrices
  int64_t saved_bev_r = 0, saved_bev_t = 0;

  explicit Network(const NetworkSpec& s = {}) { configure(s); }

  void configure(const NetworkSpec& s) {
    spec = s;
    spec.validate();
    stages.clear();
    heads.clear();

    int in_ch = spec.in_channels;
    int z_extent_mult = 1;  // tracked only to size the folded BEV channels
    for (const auto& st : spec.stages) {
      BackboneStage<T> stage;
      Conv3dSpec cs;
      cs.in_ch = in_ch;
      cs.out_ch = st.channels;
      cs.z = {spec.kernel, st.stride_z, 1, PadMode::Zero};
      cs.r = {spec.kernel, st.stride_r, 1, PadMode::Zero};
      cs.t = {spec.theta_kernel, st.stride_theta, 1, PadMode::Circular};
      stage.conv.configure(cs);
      if (st.guided) {
        stage.guide.emplace();
        stage.guide->configure(st.channels, st.channels, spec.guide_mid, spec.guide_kernel);
      }
      stages.push_back(std::move(stage));
      in_ch = st.channels;
    }
    (void)z_extent_mult;

    // BEV channel count depends on the input z extent; RPN layers are sized
    // lazily on the first forward. Heads depend only on rpn output width.
    int rpn_out = 2 * spec.rpn_channels;
    for (const auto& group : spec.head_groups) {
      HeadGroupLayer<T> head;
      Conv3dSpec hs;
      hs.in_ch = rpn_out;
      hs.out_ch = spec.head_shared;
      hs.z = {1, 1, 1, PadMode::Zero};
      hs.r = {3, 1, 1, PadMode::Zero};
      hs.t = {3, 1, 1, PadMode::Circular};
      head.shared.configure(hs);
      Conv3dSpec one;
      one.in_ch = spec.head_shared;
      one.z = one.r = one.t = {1, 1, 1, PadMode::Zero};
      one.out_ch = static_cast<int>(group.size());
      head.hm.configure(one);
      one.out_ch = 10;
      head.reg.configure(one);
      heads.push_back(std::move(head));
    }
  }

  // Sizes the RPN for a given input z extent (BEV channels = C * folded z).
  void bind_input_depth(int n_z) {
    int z = n_z;
    for (const auto& st : spec.stages) z = (z + st.stride_z - 1) / st.stride_z;
    int bev_ch = spec.stages.back().channels * z;

    Conv3dSpec a;
    a.in_ch = bev_ch;
    a.out_ch = spec.rpn_channels;
    a.z = {1, 1, 1, PadMode::Zero};
    a.r = {3, 1, 1, PadMode::Zero};
    a.t = {3, 1, 1, PadMode::Circular};
    rpn_a1.configure(a);
    a.in_ch = spec.rpn_channels;
    rpn_a2.configure(a);

    Conv3dSpec bdown = a;
    bdown.in_ch = bev_ch;
    bdown.r.stride = 2;
    bdown.t.stride = 2;
    rpn_b_down.configure(bdown);
    Conv3dSpec bmid = a;
    bmid.in_ch = spec.rpn_channels;
    rpn_b_mid.configure(bmid);
    Conv3dSpec bup = bmid;
    bup.r.stride = 2;
    bup.t.stride = 2;
    rpn_b_up.configure(bup);
  }

  void init(uint64_t seed, int n_z) {
    bind_input_depth(n_z);
    std::mt19937_64 rng(seed);
    for (auto& st : stages) {
      st.conv.init(rng);
      if (st.guide) st.guide->init(rng);
    }
    rpn_a1.init(rng);
    rpn_a2.init(rng);
    rpn_b_down.init(rng);
    rpn_b_mid.init(rng);
    rpn_b_up.init(rng);
    for (auto& h : heads) {
      h.shared.init(rng);
      h.hm.init(rng);
      h.reg.init(rng);
      // Start the heatmap near p = 0.05: tame focal loss at step 0 and a
      // resting score safely under the 0.1 decode gate.
      h.hm.b.value.fill(static_cast<T>(-2.9444389791664403));
    }
  }

  NamedParams<T> named_params() {
    NamedParams<T> out;
    for (size_t i = 0; i < stages.size(); ++i) {
      std::string p = "backbone.stage" + std::to_string(i);
      stages[i].conv.collect(p + ".conv", out);
      if (stages[i].guide) stages[i].guide->collect(p + ".guide", out);
    }
    rpn_a1.collect("rpn.a1", out);
    rpn_a2.collect("rpn.a2", out);
    rpn_b_down.collect("rpn.b_down", out);
    rpn_b_mid.collect("rpn.b_mid", out);
    rpn_b_up.collect("rpn.b_up", out);
    for (size_t g = 0; g < heads.size(); ++g) {
      std::string p = "head.group" + std::to_string(g);
      heads[g].shared.collect(p + ".shared", out);
      heads[g].hm.collect(p + ".hm", out);
      heads[g].reg.collect(p + ".reg", out);
    }
    return out;
  }

  void zero_grads() {
    for (auto& [name, p] : named_params()) p->zero_grad();
  }

  // x [N, C_in, Z, R, T]; range [1, 1, R, T] from the voxelizer.
  std::vector<HeadOutput<T>> forward(const TensorT<T>& x, const TensorT<T>& range,
                                     int threads = 1) {
    TensorT<T> cur = x;
    TensorT<T> range5({1, 1, 1, range.dim(1), range.dim(2)});
    range5.data = range.data;
    // The gates see the range normalized to [0, 1]; meters would let their
    // 1x1 weights swing activations by two orders of magnitude.
    T r_max = T(0);
    for (T v : range5.data) r_max = std::max(r_max, v);
    if (r_max > T(0))
      for (T& v : range5.data) v /= r_max;
    saved_ranges.assign(stages.size(), {});

    for (size_t i = 0; i < stages.size(); ++i) {
      const StageSpec& st = spec.stages[i];
      cur = stages[i].conv.forward(cur, threads);
      cur = stages[i].relu1.forward(std::move(cur));
      // The range branch is downsampled in lockstep with the main branch.
      range5 = avg_pool3d(range5, 1, st.stride_r, st.stride_theta);
      if (stages[i].guide) {
        saved_ranges[i] = range5;
        cur = stages[i].guide->forward(cur, range5, threads);
        cur = stages[i].relu2.forward(std::move(cur));
      }
    }

    // Collapse z into channels: [N, C, Z, R, T] -> [N, C*Z, 1, R, T].
    saved_pre_fold_shape = cur.shape;
    TensorT<T> bev = std::move(cur);
    bev.shape = {bev.shape[0], bev.shape[1] * bev.shape[2], 1, bev.shape[3], bev.shape[4]};
    saved_bev_r = bev.dim(3);
    saved_bev_t = bev.dim(4);

    TensorT<T> a = rpn_relu_a1.forward(rpn_a1.forward(bev, threads));
    a = rpn_relu_a2.forward(rpn_a2.forward(a, threads));
    TensorT<T> bb = rpn_relu_b1.forward(rpn_b_down.forward(bev, threads));
    bb = rpn_relu_b2.forward(rpn_b_mid.forward(bb, threads));
    bb = rpn_relu_b3.forward(rpn_b_up.forward(bb, 1, static_cast<int>(saved_bev_r),
                                              static_cast<int>(saved_bev_t), threads));

    const int64_t N = a.dim(0), CA = a.dim(1), CB = bb.dim(1), R = a.dim(3), Tn = a.dim(4);
    TensorT<T> feat({N, CA + CB, 1, R, Tn});
    for (int64_t n = 0; n < N; ++n) {
      std::copy_n(a.data.data() + n * CA * R * Tn, CA * R * Tn,
                  feat.data.data() + n * (CA + CB) * R * Tn);
      std::copy_n(bb.data.data() + n * CB * R * Tn, CB * R * Tn,
                  feat.data.data() + (n * (CA + CB) + CA) * R * Tn);
    }
    saved_bev = feat;

    std::vector<HeadOutput<T>> out;
    for (auto& h : heads) {
      HeadOutput<T> o;
      TensorT<T> s = h.relu.forward(h.shared.forward(feat, threads));
      o.hm = h.hm.forward(s, threads);
      o.reg = h.reg.forward(s, threads);
      out.push_back(std::move(o));
    }
    return out;
  }

  void backward(const std::vector<HeadOutput<T>>& grads, int threads = 1) {
    TensorT<T> grad_feat(saved_bev.shape);
    for (size_t g = 0; g < heads.size(); ++g) {
      auto& h = heads[g];
      TensorT<T> gs = h.hm.backward(grads[g].hm, threads);
      TensorT<T> gs2 = h.reg.backward(grads[g].reg, threads);
      for (int64_t i = 0; i < gs.numel(); ++i) gs.data[i] += gs2.data[i];
      gs = h.relu.backward(std::move(gs));
      TensorT<T> gf = h.shared.backward(gs, threads);
      for (int64_t i = 0; i < grad_feat.numel(); ++i) grad_feat.data[i] += gf.data[i];
    }

    const int64_t N = grad_feat.dim(0), CA = spec.rpn_channels,
                  CB = grad_feat.dim(1) - CA, R = grad_feat.dim(3), Tn = grad_feat.dim(4);
    TensorT<T> ga({N, CA, 1, R, Tn});
    TensorT<T> gb({N, CB, 1, R, Tn});
    for (int64_t n = 0; n < N; ++n) {
      std::copy_n(grad_feat.data.data() + n * (CA + CB) * R * Tn, CA * R * Tn,
                  ga.data.data() + n * CA * R * Tn);
      std::copy_n(grad_feat.data.data() + (n * (CA + CB) + CA) * R * Tn, CB * R * Tn,
                  gb.data.data() + n * CB * R * Tn);
    }

    ga = rpn_relu_a2.backward(std::move(ga));
    TensorT<T> grad_bev = rpn_a1.backward(rpn_relu_a1.backward(rpn_a2.backward(ga, threads)),
                                          threads);
    gb = rpn_relu_b3.backward(std::move(gb));
    gb = rpn_b_up.backward(gb, threads);
    gb = rpn_relu_b2.backward(std::move(gb));
    gb = rpn_b_mid.backward(gb, threads);
    gb = rpn_relu_b1.backward(std::move(gb));
    TensorT<T> gbev2 = rpn_b_down.backward(gb, threads);
    for (int64_t i = 0; i < grad_bev.numel(); ++i) grad_bev.data[i] += gbev2.data[i];

    grad_bev.shape = saved_pre_fold_shape;  // unfold z from channels

    TensorT<T> cur = std::move(grad_bev);
    for (size_t i = stages.size(); i-- > 0;) {
      if (stages[i].guide) {
        cur = stages[i].relu2.backward(std::move(cur));
        cur = stages[i].guide->backward(cur, threads);
      }
      cur = stages[i].relu1.backward(std::move(cur));
      cur = stages[i].conv.backward(cur, threads);
    }
  }
};

}  // namespace cyldet
