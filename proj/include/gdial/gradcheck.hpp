#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gdial/tape.hpp"

namespace gdial {

// Builds a scalar loss on the given tape from some set of parameters.
using Fragment = std::function<Value(Tape&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares analytic gradients against central finite differences, one
// parameter coordinate at a time:
//   rel_err = |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Parameters are restored to their original values before returning.
GradCheckReport grad_check(std::span<Parameter* const> params, const Fragment& fragment,
                           double epsilon = 1e-5);

}  // namespace gdial
