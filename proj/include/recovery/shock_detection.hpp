#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recovery/fitting.hpp"

namespace recovery {

struct HorizonPoint {
  Eigen::Index t0{0};      // in-sample size
  Eigen::Index t_pred{0};  // first out-of-sample index where the prediction breaks
};

struct HorizonCurve {
  double tolerance_p{0};
  std::vector<HorizonPoint> points;
  Eigen::Index series_length{0};
  /// In-sample sizes whose fit failed; they have no point on the curve.
  std::vector<Eigen::Index> failed_t0;
};

struct Shock {
  Eigen::Index time{0};
  /// Number of consecutive in-sample sizes sharing this horizon.
  Eigen::Index support{0};
};

/// Half-open interval [begin, end) of local observation indices.
struct EpisodeBounds {
  Eigen::Index begin{0};
  Eigen::Index end{0};
};

struct ShockReport {
  std::vector<Shock> shocks;
  double tolerance_p{0};
  std::vector<EpisodeBounds> episodes;
  HorizonCurve curve;
};

struct DetectionOptions {
  Eigen::Index min_support{3};
  /// First and last in-sample size; t0_last <= 0 means series length - 1.
  Eigen::Index t0_first{6};
  Eigen::Index t0_last{0};
  Eigen::Index t0_step{1};
  /// Multistart count for each in-sample fit.
  int restarts{5};
  std::uint64_t seed{0};
};

/// Fits the first `t0` observations and returns the first index t >= t0 where
/// |series(t) - prediction(t)| / series(t) > p, or the series length.
Eigen::Index prediction_horizon(const SeriesSegment& series, Eigen::Index t0, double p,
                                const DetectionOptions& options = {});

HorizonCurve horizon_curve(const SeriesSegment& series, double p,
                           const DetectionOptions& options = {});

/// Plateaus of the horizon curve: runs of at least `min_support` consecutive
/// points whose t_pred stay within +-1 of each other, below the series length.
/// Plateaus within one index of each other are merged.
std::vector<Shock> extract_shocks(const HorizonCurve& curve, Eigen::Index min_support);

/// Episodes delimited by the shock times and the series ends.
std::vector<EpisodeBounds> episodes_from_shocks(const std::vector<Shock>& shocks,
                                                Eigen::Index series_length);

ShockReport detect_shocks(const SeriesSegment& series, double p,
                          const DetectionOptions& options = {});

/// One report per tolerance in the sweep.
std::vector<ShockReport> detect_shocks_sweep(const SeriesSegment& series,
                                             const std::vector<double>& tolerances,
                                             const DetectionOptions& options = {});

struct EpisodeFit {
  EpisodeBounds bounds;
  SeriesSegment segment;  // rescaled to 100 at the episode start
  std::optional<FitResult> fit;
  std::string error;      // set when the episode could not be fitted
};

struct Segmentation {
  ShockReport report;
  std::vector<EpisodeFit> episodes;
};

/// Fits each detected episode independently, re-based to 100 at its start.
Segmentation segment_and_fit(const SeriesSegment& series, double p,
                             const DetectionOptions& options = {},
                             const FitOptions& fit_options = {});

/// Fits the given episodes without running detection.
std::vector<EpisodeFit> fit_episodes(const SeriesSegment& series,
                                     const std::vector<EpisodeBounds>& episodes,
                                     const FitOptions& fit_options = {});

}  // namespace recovery
