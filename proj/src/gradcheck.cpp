#include "gdial/gradcheck.hpp"

#include <cmath>

#include "gdial/errors.hpp"

namespace gdial {

GradCheckReport grad_check(std::span<Parameter* const> params, const Fragment& fragment,
                           double epsilon) {
  for (Parameter* p : params) p->zero_grad();
  std::vector<Array> analytic;
  {
    Tape tape;
    Value loss = fragment(tape);
    if (loss.array().size() != 1) {
      throw ContractError("grad_check: fragment must produce a scalar loss");
    }
    tape.backward(loss);
  }
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    Tape tape(/*grad_enabled=*/false);
    return fragment(tape).array()[0];
  };

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double saved = p.value[j];
      p.value[j] = saved + epsilon;
      const double lp = eval();
      p.value[j] = saved - epsilon;
      const double lm = eval();
      p.value[j] = saved;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double a = analytic[pi][j];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p.name;
        report.worst_index = j;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
  return report;
}

}  // namespace gdial
