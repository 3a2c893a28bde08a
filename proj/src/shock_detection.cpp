#include "recovery/shock_detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "recovery/errors.hpp"

namespace recovery {

Eigen::Index prediction_horizon(const SeriesSegment& series, Eigen::Index t0, double p,
                                const DetectionOptions& options) {
  const Eigen::Index n = series.size();
  if (t0 < 4 || t0 > n) throw std::invalid_argument("in-sample size must lie in [4, length]");
  if (!(p > 0 && p < 1)) throw std::invalid_argument("tolerance must lie in (0, 1)");

  FitOptions fit_options;
  fit_options.seed = options.seed;
  FitResult fit;
  try {
    fit = fit_with_restarts(series.slice(0, t0), options.restarts, fit_options);
  } catch (const NumericalError& e) {
    throw FitFailed(std::string("in-sample fit failed at t0 = ") + std::to_string(t0) + ": " +
                    e.what());
  }

  for (Eigen::Index t = t0; t < n; ++t) {
    const double observed = series.values[t];
    const double predicted = evaluate(fit.params, series.time(t));
    if (std::abs(observed - predicted) / observed > p) return t;
  }
  return n;
}

HorizonCurve horizon_curve(const SeriesSegment& series, double p, const DetectionOptions& options) {
  const Eigen::Index n = series.size();
  const Eigen::Index last = options.t0_last > 0 ? options.t0_last : n - 1;
  if (options.t0_first < 4 || last > n || options.t0_step < 1) {
    throw std::invalid_argument("in-sample range must lie within [4, length]");
  }

  HorizonCurve curve;
  curve.tolerance_p = p;
  curve.series_length = n;
  for (Eigen::Index t0 = options.t0_first; t0 <= last; t0 += options.t0_step) {
    try {
      curve.points.push_back({t0, prediction_horizon(series, t0, p, options)});
    } catch (const FitFailed&) {
      curve.failed_t0.push_back(t0);
    }
  }
  return curve;
}

std::vector<Shock> extract_shocks(const HorizonCurve& curve, Eigen::Index min_support) {
  if (min_support < 2) throw std::invalid_argument("min_support must be at least 2");

  // Greedy runs of consecutive points whose t_pred span at most 2 indices.
  // A failed fit leaves a hole in t0 that breaks the run, and so does a
  // prediction that fails at the first out-of-sample index.
  std::vector<Shock> plateaus;
  const auto& pts = curve.points;
  Eigen::Index step = std::numeric_limits<Eigen::Index>::max();
  for (std::size_t k = 1; k < pts.size(); ++k) step = std::min(step, pts[k].t0 - pts[k - 1].t0);
  auto informative = [&](std::size_t k) { return pts[k].t_pred > pts[k].t0; };
  std::size_t i = 0;
  while (i < pts.size()) {
    if (!informative(i)) {
      ++i;
      continue;
    }
    Eigen::Index lo = pts[i].t_pred, hi = pts[i].t_pred;
    std::size_t j = i + 1;
    while (j < pts.size() && pts[j].t0 - pts[j - 1].t0 == step && informative(j)) {
      const Eigen::Index v = pts[j].t_pred;
      if (std::max(hi, v) - std::min(lo, v) > 2) break;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ++j;
    }
    const auto len = static_cast<Eigen::Index>(j - i);
    // Horizons that advance with t0 are failures right after the sample, not a plateau.
    const bool flat = hi - lo < pts[j - 1].t0 - pts[i].t0;
    if (len >= min_support && flat) {
      // Report the most frequent value in the run; ties go to the earliest index.
      std::map<Eigen::Index, int> counts;
      for (std::size_t k = i; k < j; ++k) ++counts[pts[k].t_pred];
      auto mode = std::max_element(counts.begin(), counts.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
      if (mode->first < curve.series_length && mode->first > 0) {
        plateaus.push_back({mode->first, len});
      }
    }
    i = j;
  }

  // Merge plateaus that name the same shock (within one index).
  std::sort(plateaus.begin(), plateaus.end(),
            [](const Shock& a, const Shock& b) { return a.time < b.time; });
  std::vector<Shock> merged;
  for (const Shock& s : plateaus) {
    if (!merged.empty() && s.time - merged.back().time <= 1) {
      if (s.support > merged.back().support) merged.back().time = s.time;
      merged.back().support += s.support;
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

std::vector<EpisodeBounds> episodes_from_shocks(const std::vector<Shock>& shocks,
                                                Eigen::Index series_length) {
  std::vector<EpisodeBounds> out;
  Eigen::Index begin = 0;
  for (const Shock& s : shocks) {
    if (s.time <= begin || s.time >= series_length) continue;
    out.push_back({begin, s.time});
    begin = s.time;
  }
  out.push_back({begin, series_length});
  return out;
}

ShockReport detect_shocks(const SeriesSegment& series, double p, const DetectionOptions& options) {
  ShockReport report;
  report.tolerance_p = p;
  report.curve = horizon_curve(series, p, options);
  report.shocks = extract_shocks(report.curve, options.min_support);
  report.episodes = episodes_from_shocks(report.shocks, series.size());
  return report;
}

std::vector<ShockReport> detect_shocks_sweep(const SeriesSegment& series,
                                             const std::vector<double>& tolerances,
                                             const DetectionOptions& options) {
  std::vector<ShockReport> out;
  out.reserve(tolerances.size());
  for (double p : tolerances) out.push_back(detect_shocks(series, p, options));
  return out;
}

std::vector<EpisodeFit> fit_episodes(const SeriesSegment& series,
                                     const std::vector<EpisodeBounds>& episodes,
                                     const FitOptions& fit_options) {
  std::vector<EpisodeFit> out;
  out.reserve(episodes.size());
  for (const EpisodeBounds& b : episodes) {
    EpisodeFit ef;
    ef.bounds = b;
    ef.segment = series.slice(b.begin, b.end);
    if (ef.segment.size() > 0 && ef.segment.values[0] > 0) {
      ef.segment.values *= 100.0 / ef.segment.values[0];
    }
    if (ef.segment.size() < 4) {
      ef.error = "episode shorter than 4 observations";
    } else {
      try {
        ef.fit = fit_episode(ef.segment, fit_options);
      } catch (const Error& e) {
        ef.error = e.what();
      }
    }
    out.push_back(std::move(ef));
  }
  return out;
}

Segmentation segment_and_fit(const SeriesSegment& series, double p, const DetectionOptions& options,
                             const FitOptions& fit_options) {
  Segmentation out;
  out.report = detect_shocks(series, p, options);
  out.episodes = fit_episodes(series, out.report.episodes, fit_options);
  return out;
}

}  // namespace recovery
