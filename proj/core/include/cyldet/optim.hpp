#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cyldet/layers.hpp"
#include "cyldet/tensor.hpp"

namespace cyldet {

// One-cycle schedule over normalized training progress t in [0, 1]:
// cosine warm-up from lr_max/div_factor to lr_max at pct_start, then cosine
// annealing to lr_max/(div_factor*final_div). Momentum runs the opposite way
// between momentum_high and momentum_low.
struct OneCycle {
  double lr_max = 0.0035;
  double div_factor = 10.0;
  double final_div = 1e4;
  double pct_start = 0.4;
  double momentum_low = 0.85;
  double momentum_high = 0.95;

  double lr(double t) const;
  double momentum(double t) const;
};

// Adaptive moment estimation with decoupled weight decay. beta1 comes from
// the schedule per step; beta2 and eps are fixed.
class AdamW {
 public:
  AdamW(NamedParams<float> params, double weight_decay = 0.01);

  void step(double lr, double beta1);

  int64_t step_count() const { return t_; }

  // Optimizer state exposure for exact checkpoint resume.
  std::vector<std::pair<std::string, const Tensor*>> state_tensors() const;
  void restore(const std::map<std::string, Tensor>& tensors, int64_t step_count);

 private:
  struct Slot {
    std::string name;
    Param<float>* param;
    Tensor m, v;
  };
  std::vector<Slot> slots_;
  double weight_decay_;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  int64_t t_ = 0;
};

}  // namespace cyldet
