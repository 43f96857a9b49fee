#pragma once

#include <chrono>
#include <vector>

#include "franklin/pwl_algebra.hpp"

namespace franklin {

[[nodiscard]] double elapsed_ms(std::chrono::steady_clock::time_point start);
/// i / 2^xi_level for i < 2^xi_level.
[[nodiscard]] std::vector<double> dyadic_shifts(int xi_level);
[[nodiscard]] StepFunction pointwise_max(const StepFunction& f, const StepFunction& g);

}  // namespace franklin
