#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gdial/tape.hpp"

namespace gdial {

struct AdamConfig {
  double learning_rate = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Moment accumulators are kept per parameter, in the
// order the parameter list was given at construction.
class AdamState {
 public:
  AdamState(std::span<Parameter* const> params, AdamConfig cfg);

  // Applies one update from the gradients currently stored in the
  // parameters. Gradients are left untouched; the caller resets them.
  void step(std::span<Parameter* const> params);

  std::uint64_t step_count() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

  std::size_t slots() const noexcept { return m_.size(); }
  const Array& first_moment(std::size_t i) const { return m_[i]; }
  const Array& second_moment(std::size_t i) const { return v_[i]; }
  void restore(std::uint64_t t, std::vector<Array> m, std::vector<Array> v);

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Array> m_;
  std::vector<Array> v_;
};

}  // namespace gdial
