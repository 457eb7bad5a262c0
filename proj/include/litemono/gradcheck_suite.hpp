#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace litemono {

struct GradCheckCase {
  std::string name;
  /// Whole-loss checks get the looser tolerance.
  bool end_to_end = false;
  double error = 0;
  double tolerance = 0;
  bool passed() const { return error < tolerance; }
};

/// Central-difference checks (float64, eps 1e-5) of every differentiable op
/// and of the composite blocks: CDC, LGFI, decoder level, view synthesis and
/// the total loss on 8x8 frames. Tolerances 1e-4 (ops, blocks) and 1e-3
/// (end to end). `on_case` sees each result as soon as it is computed.
std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed = 0,
                                               const std::function<void(const GradCheckCase&)>& on_case = {});

}  // namespace litemono
