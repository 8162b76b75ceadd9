#include "cyldet/optim.hpp"

#include "cyldet/errors.hpp"
#include "cyldet/geometry.hpp"

namespace cyldet {
namespace {

double cosine_anneal(double from, double to, double u) {
  return to + (from - to) * (1.0 + std::cos(kPi * u)) / 2.0;
}

}  // namespace

double OneCycle::lr(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  if (t < pct_start) return cosine_anneal(lr_max / div_factor, lr_max, t / pct_start);
  return cosine_anneal(lr_max, lr_max / (div_factor * final_div),
                       (t - pct_start) / (1.0 - pct_start));
}

double OneCycle::momentum(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  if (t < pct_start) return cosine_anneal(momentum_high, momentum_low, t / pct_start);
  return cosine_anneal(momentum_low, momentum_high, (t - pct_start) / (1.0 - pct_start));
}

AdamW::AdamW(NamedParams<float> params, double weight_decay) : weight_decay_(weight_decay) {
  for (auto& [name, p] : params)
    slots_.push_back(Slot{name, p, Tensor(p->value.shape), Tensor(p->value.shape)});
}

void AdamW::step(double lr, double beta1) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Slot& s : slots_) {
    float* w = s.param->value.data.data();
    const float* g = s.param->grad.data.data();
    float* m = s.m.data.data();
    float* v = s.v.data.data();
    const int64_t n = s.param->value.numel();
    for (int64_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double mi = beta1 * m[i] + (1.0 - beta1) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      const double update = m_hat / (std::sqrt(v_hat) + eps_) + weight_decay_ * w[i];
      w[i] = static_cast<float>(w[i] - lr * update);
    }
  }
}

std::vector<std::pair<std::string, const Tensor*>> AdamW::state_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (const Slot& s : slots_) {
    out.emplace_back("adam.m." + s.name, &s.m);
    out.emplace_back("adam.v." + s.name, &s.v);
  }
  return out;
}

void AdamW::restore(const std::map<std::string, Tensor>& tensors, int64_t step_count) {
  for (Slot& s : slots_) {
    auto m = tensors.find("adam.m." + s.name);
    auto v = tensors.find("adam.v." + s.name);
    if (m == tensors.end() || v == tensors.end())
      throw SpecMismatchError("checkpoint is missing optimizer state for " + s.name);
    if (!m->second.same_shape(s.m) || !v->second.same_shape(s.v))
      throw SpecMismatchError("optimizer state shape mismatch for " + s.name);
    s.m = m->second;
    s.v = v->second;
  }
  t_ = step_count;
}

}  // namespace cyldet
