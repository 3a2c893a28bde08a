#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recovery/core_model.hpp"

namespace recovery {

enum class PeriodUnit { year, quarter };

/// A contiguous run of GDP observations. Observation i sits at period index
/// `start_index + i`.
struct SeriesSegment {
  Eigen::VectorXd values;
  long start_index{0};
  PeriodUnit period_unit{PeriodUnit::year};
  std::string label;

  Eigen::Index size() const { return values.size(); }
  double time(Eigen::Index i) const { return static_cast<double>(start_index + i); }

  /// Sub-range [begin, end) in local observation indices.
  SeriesSegment slice(Eigen::Index begin, Eigen::Index end) const;
};

/// Throws DegenerateSegment unless the segment has at least 4 strictly
/// positive finite observations.
void validate_segment(const SeriesSegment& segment);

struct FitOptions {
  bool free_w0{false};
  double gradient_tolerance{1e-10};
  int max_iterations{500};
  std::uint64_t seed{0};
  /// Overrides the initialization heuristic when set (w0 and t0 are ignored).
  std::optional<ResponseParams> initial;
};

struct ResidualStats {
  double srs{0};
  double srm{0};
  double rsrs{0};
  double rsrm{0};
  Eigen::Index n{0};
};

struct FitResult {
  ResponseParams params;
  /// Standard errors, field by field; fixed parameters report 0.
  ResponseParams std_errors{0, 0, 0, 0, 0};
  double srs{0};
  double srm{0};
  double rsrs{0};
  double rsrm{0};
  Eigen::Index n{0};
  bool converged{false};
  int iterations{0};
  std::vector<std::string> boundary_hit;
};

// Box constraints applied during fitting.
inline constexpr double kLambdaMinusLower = -1.0;
inline constexpr double kLambdaMinusUpper = 0.0;
inline constexpr double kLambdaPlusLower = -1.0;
inline constexpr double kLambdaPlusUpper = 1.0;
inline constexpr double kBoundaryTolerance = 1e-9;

/// Sums of squared absolute and percent residuals of `params` against `segment`.
ResidualStats residual_stats(const SeriesSegment& segment, const ResponseParams& params);

/// The starting point used by fit_episode when no explicit initial guess is given.
ResponseParams initial_guess(const SeriesSegment& segment);

/// Bounded damped Gauss-Newton fit of the response function. w0 is pinned to
/// the first observation unless `options.free_w0` is set.
FitResult fit_episode(const SeriesSegment& segment, const FitOptions& options = {});

/// Best of `restarts` fits; the first start is the default heuristic and the
/// rest are seeded perturbations of it.
FitResult fit_with_restarts(const SeriesSegment& segment, int restarts,
                            const FitOptions& options = {});

}  // namespace recovery
