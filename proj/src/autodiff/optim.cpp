// SPDX-License-Identifier: Apache-2.0
#include "shapefat/autodiff/optim.hpp"

#include <cmath>
#include <utility>

#include "shapefat/error.hpp"

namespace shapefat::ad {

const Var& ParamSet::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  const std::size_t n = init.size();
  auto [it, inserted] = entries_.emplace(name, Entry{parameter(std::move(init)), {}});
  it->second.velocity.assign(n, 0.0);
  return it->second.param;
}

const Var& ParamSet::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second.param;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.param->value.size();
  return n;
}

void ParamSet::clear_grads() {
  for (auto& [name, e] : entries_) e.param->value.clear_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [name, e] : entries_) {
    const Tensor& t = e.param->value;
    Tensor copy(t.shape(), std::vector<double>(t.values().begin(), t.values().end()));
    out.entries_.emplace(name, Entry{parameter(std::move(copy)), e.velocity});
  }
  return out;
}

void sgd_momentum_step(ParamSet& params, double lr, double momentum) {
  for (const auto& [name, e] : params.entries()) {
    if (!e.param->value.has_grad()) {
      throw Error("sgd_momentum_step: parameter '" + name + "' has no gradient");
    }
  }
  for (auto& [name, e] : params.entries()) {
    Tensor& p = e.param->value;
    const auto g = std::as_const(p).grad();
    auto values = p.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      e.velocity[i] = momentum * e.velocity[i] + g[i];
      values[i] -= lr * e.velocity[i];
    }
    p.clear_grad();
  }
}

double clip_grad_norm(ParamSet& params, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip_grad_norm: max_norm must be > 0");
  double sq = 0.0;
  for (const auto& [name, e] : params.entries()) {
    const Tensor& p = e.param->value;
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("clip_grad_norm: non-finite gradient norm");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, e] : params.entries()) {
      Tensor& p = e.param->value;
      if (!p.has_grad()) continue;
      for (double& g : p.grad()) g *= scale;
    }
  }
  return norm;
}

void Schedule::validate() const {
  if (!(base_lr > 0.0)) throw ConfigError("schedule: base_lr must be > 0");
  if (!(decay_factor > 0.0 && decay_factor < 1.0)) {
    throw ConfigError("schedule: decay_factor must lie in (0, 1)");
  }
  if (decay_every < 1) throw ConfigError("schedule: decay_every must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("schedule: momentum must lie in [0, 1)");
}

double lr_at_epoch(const Schedule& schedule, int epoch) {
  if (epoch < 0) throw ConfigError("lr_at_epoch: epoch must be >= 0");
  const int decays = epoch / schedule.decay_every;
  // Dividing by (1/decay)^k keeps decimal schedules exact: 0.01 / 10 == 0.001
  // in binary floating point, whereas 0.01 * 0.1 does not.
  return schedule.base_lr / std::pow(1.0 / schedule.decay_factor, decays);
}

}  // namespace shapefat::ad
