#pragma once

#include "nlvn/matrix.hpp"

#include <map>
#include <string>
#include <vector>

namespace nlvn {

// Sampled matrix trajectory. metadata carries scalar run facts (iteration
// count, shift parameter, residual summaries) keyed by name.
struct TimeSeries {
  std::vector<double> times;
  std::vector<CMatrix> matrices;
  std::map<std::string, double> metadata;
};

inline std::vector<double> linspace(double start, double end, std::size_t steps) {
  if (steps == 0) return {};
  if (steps == 1) return {start};
  std::vector<double> out(steps);
  const double h = (end - start) / static_cast<double>(steps - 1);
  for (std::size_t i = 0; i < steps; ++i) out[i] = start + h * static_cast<double>(i);
  out.back() = end;
  return out;
}

} // namespace nlvn
