#include "gdial/optim.hpp"

#include <cmath>

#include "gdial/errors.hpp"

namespace gdial {

AdamState::AdamState(std::span<Parameter* const> params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Parameter* p : params) {
    m_.push_back(Array::zeros(p->value.shape()));
    v_.push_back(Array::zeros(p->value.shape()));
  }
}

void AdamState::step(std::span<Parameter* const> params) {
  if (params.size() != m_.size()) {
    throw ContractError("AdamState::step: parameter list does not match optimizer state");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.value.same_shape(m_[i])) {
      throw DimensionError("AdamState::step: shape changed for parameter " + p.name);
    }
    Array& m = m_[i];
    Array& v = v_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

void AdamState::restore(std::uint64_t t, std::vector<Array> m, std::vector<Array> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw CompatError("AdamState::restore: moment count mismatch");
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i].same_shape(m_[i]) || !v[i].same_shape(v_[i])) {
      throw CompatError("AdamState::restore: moment shape mismatch at slot " + std::to_string(i));
    }
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace gdial
