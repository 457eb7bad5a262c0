#include "litemono/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace litemono {

GradCheckReport grad_check_report(const ScalarProgram& f, std::vector<Tensord> inputs,
                                  const GradCheckOptions& options) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tensord loss = f(inputs);
    if (loss.numel() != 1) throw ShapeError("grad_check: program must return a scalar");
    loss.backward();
  }
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].data();
    std::vector<Index> coords(values.size());
    std::iota(coords.begin(), coords.end(), Index(0));
    if (options.max_coords_per_input > 0 &&
        static_cast<Index>(coords.size()) > options.max_coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_input);
    }
    for (Index c : coords) {
      const double original = values[c];
      values[c] = original + options.eps;
      const double up = f(inputs).item();
      values[c] = original - options.eps;
      const double down = f(inputs).item();
      values[c] = original;
      const double numeric = (up - down) / (2 * options.eps);
      const double a = analytic[k][c];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (err > report.max_relative_error || report.worst_input < 0) {
        report.max_relative_error = err;
        report.worst_input = static_cast<Index>(k);
        report.worst_coord = c;
        report.analytic_at_worst = a;
        report.numeric_at_worst = numeric;
      }
    }
  }
  return report;
}

double grad_check(const ScalarProgram& f, std::vector<Tensord> inputs, double eps) {
  GradCheckOptions opt;
  opt.eps = eps;
  return grad_check_report(f, std::move(inputs), opt).max_relative_error;
}

}  // namespace litemono
