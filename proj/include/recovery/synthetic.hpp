#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "recovery/core_model.hpp"
#include "recovery/fitting.hpp"

namespace recovery {

/// Multiplicative Gaussian noise: G(t) = W(t) [1 + nu * eta(t)].
struct NoiseSpec {
  double nu{0};
  std::uint64_t seed{0};
};

struct Episode {
  ResponseParams params;
  Eigen::Index length{1};
};

/// Samples `params` at t = 0 .. n-1 with multiplicative noise. Draws with
/// 1 + nu * eta <= 0.01 are resampled.
SeriesSegment generate(const ResponseParams& params, const NoiseSpec& noise, Eigen::Index n);

/// Concatenates episodes. Each episode after the first restarts the response
/// at its first index, with w0 set to the previous episode's noiseless value
/// there: the level is continuous and the trend breaks.
SeriesSegment generate_piecewise(const std::vector<Episode>& episodes, const NoiseSpec& noise);

/// Noiseless counterpart of generate_piecewise.
Eigen::VectorXd piecewise_curve(const std::vector<Episode>& episodes);

}  // namespace recovery
