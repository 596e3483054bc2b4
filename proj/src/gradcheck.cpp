#include "dgzsl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dgzsl/error.hpp"

namespace dgzsl {

GradCheckReport grad_check(const CheckedObjective& objective, std::vector<Matrix> params,
                           double epsilon) {
  std::vector<Matrix> analytic;
  objective(params, &analytic);
  if (analytic.size() != params.size()) {
    throw ShapeError("grad_check: objective returned " + std::to_string(analytic.size()) +
                     " gradients for " + std::to_string(params.size()) + " tensors");
  }

  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!analytic[t].same_shape(params[t])) {
      throw ShapeError("grad_check: gradient " + analytic[t].shape_string() +
                       " does not match parameter " + params[t].shape_string());
    }
    for (std::size_t e = 0; e < params[t].size(); ++e) {
      double& slot = params[t].data()[e];
      const double saved = slot;
      slot = saved + epsilon;
      const double up = objective(params, nullptr);
      slot = saved - epsilon;
      const double down = objective(params, nullptr);
      slot = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = analytic[t].data()[e];
      double rel;
      if (std::isnan(numeric) || std::isnan(exact)) {
        report.saw_nan = true;
        rel = std::numeric_limits<double>::infinity();
      } else {
        const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-4});
        rel = std::abs(exact - numeric) / denom;
      }
      ++report.entries_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_tensor = t;
        report.worst_entry = e;
      }
    }
  }
  return report;
}

}  // namespace dgzsl
