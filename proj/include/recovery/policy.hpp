#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "recovery/fitting.hpp"
#include "recovery/two_sector.hpp"

namespace recovery {

/// A transfer rate beta(t), piecewise constant: betas[k] holds on
/// [times[k], times[k+1]).
struct PolicySchedule {
  std::vector<double> times;
  std::vector<double> betas;
  double beta_min{1e-5};
  double beta_max{1.0};

  double at(double t) const;
  /// Throws std::invalid_argument on empty/unsorted samples or betas outside the bounds.
  void validate() const;
};

struct PolicyOutcome {
  PolicySchedule schedule;
  Trajectory trajectory;
  Eigen::VectorXd W;      // w1 + w2 at each trajectory sample
  Eigen::VectorXd delta;  // w1 / w2 at each trajectory sample
  std::optional<FitResult> effective_fit;
  /// Lookahead used by optimal_policy; 0 for the other policies.
  double lookahead{0};
};

/// Fixed ingredients shared by every policy experiment.
struct PolicySetup {
  double alpha1{0.02};
  double alpha2{-0.05};
  SectorState state0{0.1, 0.9, 0.0};
  double T{200};
  double dt{0.01};
  double beta_min{1e-5};
  double beta_max{1.0};
};

struct EnvelopeResult {
  Eigen::VectorXd envelope_W;
  PolicySchedule schedule;
  PolicyOutcome attained;
};

enum class PolicyKind { static_policy, dynamic_policy, indeterminate };

std::string to_string(PolicyKind kind);

/// `count` logarithmically spaced values covering [lo, hi]; count == 1 gives {lo}.
std::vector<double> log_grid(double lo, double hi, int count);

/// Sample times 0, dt, ..., T as produced by integrate().
std::vector<double> time_grid(double T, double dt);

PolicyOutcome make_outcome(PolicySchedule schedule, Trajectory trajectory);

/// One constant-beta closed-form trajectory per grid value.
std::vector<PolicyOutcome> static_sweep(const PolicySetup& setup, const std::vector<double>& beta_grid);

/// Upper envelope of the constant-beta scenarios, the beta schedule that
/// follows the argmax (ties go to the smaller beta) and the trajectory that
/// schedule actually produces.
EnvelopeResult envelope_policy(const PolicySetup& setup, const std::vector<double>& beta_grid);

/// Greedy control: at every step pick the beta in [beta_min, beta_max] that
/// maximises the closed-form W after `lookahead` periods of constant beta,
/// then advance one dt with it.
PolicyOutcome optimal_policy(const PolicySetup& setup, double lookahead = 1.0);

/// Scalar maximisation used by optimal_policy: coarse log-spaced scan to
/// bracket the best value, then golden-section search to the requested
/// relative tolerance. Near-ties resolve to beta_min.
double best_transfer_rate(double alpha1, double alpha2, const SectorState& state, double lookahead,
                          double beta_min, double beta_max, double rel_tol = 1e-8);

struct ClassifierOptions {
  /// A second difference counts as flat below this multiple of max |change|.
  double flat_threshold{1e-3};
  /// Share of the non-flat second differences after the turn that must be positive.
  double majority{0.75};
};

/// Curvature signature of a sector-inequality trajectory Delta(t):
///  - dynamic: starts flat or concave, then turns predominantly convex;
///  - static: convex then concave (or one of the two) and never turns back up;
///  - indeterminate: no curvature at all, or any other pattern.
/// Pass the samples of the pre-asymptotic window (see classification_window()).
PolicyKind classify_policy(const Eigen::VectorXd& delta, const ClassifierOptions& options = {});

/// Inequality samples at unit periods over the first `periods` periods.
Eigen::VectorXd classification_window(const PolicyOutcome& outcome, double periods);

/// W sampled at integer periods 0, 1, ..., floor(T).
SeriesSegment unit_period_series(const PolicyOutcome& outcome);

/// Fits the response function to the simulated W at unit periods and stores
/// the result in the outcome.
const FitResult& effective_fit(PolicyOutcome& outcome, const FitOptions& options = {});

}  // namespace recovery
