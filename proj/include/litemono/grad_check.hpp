#pragma once

#include <functional>
#include <vector>

#include "litemono/tensor.hpp"

namespace litemono {

using ScalarProgram = std::function<Tensord(const std::vector<Tensord>&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// Upper bound on checked coordinates per input; 0 checks all of them.
  /// Sampled coordinates are drawn deterministically from `seed`.
  Index max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0;
  Index worst_input = -1;
  Index worst_coord = -1;
  double analytic_at_worst = 0;
  double numeric_at_worst = 0;
  Index coords_checked = 0;
};

/// Compares reverse-mode gradients of a scalar program against central
/// finite differences (f(x+eps) - f(x-eps)) / (2 eps). The error per
/// coordinate is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check_report(const ScalarProgram& f, std::vector<Tensord> inputs,
                                  const GradCheckOptions& options = {});

double grad_check(const ScalarProgram& f, std::vector<Tensord> inputs, double eps = 1e-5);

}  // namespace litemono
