#include "recovery/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace recovery {

double PolicySchedule::at(double t) const {
  if (times.empty()) throw std::logic_error("empty policy schedule");
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = it == times.begin() ? 0 : (it - times.begin()) - 1;
  return betas[static_cast<std::size_t>(k)];
}

void PolicySchedule::validate() const {
  if (times.empty() || times.size() != betas.size()) {
    throw std::invalid_argument("schedule needs matching, non-empty times and betas");
  }
  if (!(beta_min > 0) || beta_min > beta_max) {
    throw std::invalid_argument("schedule bounds need 0 < beta_min <= beta_max");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw std::invalid_argument("schedule times must be strictly increasing");
    }
    if (betas[k] < beta_min || betas[k] > beta_max) {
      throw std::invalid_argument("schedule beta outside [beta_min, beta_max]");
    }
  }
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::static_policy: return "static";
    case PolicyKind::dynamic_policy: return "dynamic";
    case PolicyKind::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0) || hi < lo) throw std::invalid_argument("invalid log grid");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(a + (b - a) * i / (count - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> time_grid(double T, double dt) {
  if (!(dt > 0) || !(T >= dt)) throw std::invalid_argument("invalid time grid");
  const auto steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (long k = 0; k < steps; ++k) t[k] = static_cast<double>(k) * dt;
  t.back() = T;
  return t;
}

PolicyOutcome make_outcome(PolicySchedule schedule, Trajectory trajectory) {
  PolicyOutcome out;
  out.schedule = std::move(schedule);
  out.trajectory = std::move(trajectory);
  const auto n = static_cast<Eigen::Index>(out.trajectory.size());
  out.W.resize(n);
  out.delta.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = out.trajectory[static_cast<std::size_t>(i)];
    out.W[i] = s.w1 + s.w2;
    out.delta[i] = s.w2 != 0 ? s.w1 / s.w2 : std::numeric_limits<double>::infinity();
  }
  return out;
}

namespace {

void check_setup(const PolicySetup& s) {
  if (!(s.beta_min > 0) || s.beta_min > s.beta_max) {
    throw std::invalid_argument("policy bounds need 0 < beta_min <= beta_max");
  }
  if (!(s.dt > 0) || !(s.T >= s.dt)) throw std::invalid_argument("invalid policy horizon");
}

void check_grid(const PolicySetup& s, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("beta grid is empty");
  for (double b : grid) {
    if (!(b >= 0) || b > s.beta_max) throw std::invalid_argument("beta grid value out of bounds");
  }
}

PolicySchedule constant_schedule(const PolicySetup& s, double beta) {
  return {{0.0}, {beta}, std::min(s.beta_min, beta), std::max(s.beta_max, beta)};
}

}  // namespace

std::vector<PolicyOutcome> static_sweep(const PolicySetup& setup, const std::vector<double>& beta_grid) {
  check_setup(setup);
  check_grid(setup, beta_grid);
  const auto times = time_grid(setup.T, setup.dt);
  std::vector<PolicyOutcome> out;
  out.reserve(beta_grid.size());
  for (double beta : beta_grid) {
    const SectorParams p{setup.alpha1, setup.alpha2, beta};
    const EigenSystem es = decompose(p, setup.state0);
    Trajectory traj;
    traj.reserve(times.size());
    for (double t : times) {
      if (t == 0) {
        traj.push_back({setup.state0.w1, setup.state0.w2, 0.0});
        continue;
      }
      const Eigen::Vector2d w = modal_state(es, t);
      traj.push_back({w[0], w[1], t});
    }
    out.push_back(make_outcome(constant_schedule(setup, beta), std::move(traj)));
  }
  return out;
}

EnvelopeResult envelope_policy(const PolicySetup& setup, const std::vector<double>& beta_grid) {
  check_setup(setup);
  check_grid(setup, beta_grid);

  // Visit the grid in increasing beta so strict '>' keeps the smaller beta on ties.
  std::vector<double> grid = beta_grid;
  std::sort(grid.begin(), grid.end());

  // W_i(t) = a_i exp(lambda+_i t) + b_i exp(lambda-_i t).
  struct Mode { double a, lp, b, lm; };
  std::vector<Mode> modes;
  modes.reserve(grid.size());
  for (double beta : grid) {
    const EigenSystem es = decompose(SectorParams{setup.alpha1, setup.alpha2, beta}, setup.state0);
    modes.push_back({es.omega_plus * es.v_plus.sum(), es.lambda_plus,
                     es.omega_minus * es.v_minus.sum(), es.lambda_minus});
  }

  const auto times = time_grid(setup.T, setup.dt);
  EnvelopeResult out;
  out.envelope_W.resize(static_cast<Eigen::Index>(times.size()));
  out.schedule.times = times;
  out.schedule.betas.resize(times.size());
  out.schedule.beta_min = std::min(setup.beta_min, grid.front());
  out.schedule.beta_max = std::max(setup.beta_max, grid.back());

  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const double w = t == 0 ? setup.state0.total()
                              : modes[i].a * std::exp(modes[i].lp * t) +
                                    modes[i].b * std::exp(modes[i].lm * t);
      if (w > best) {
        best = w;
        arg = i;
      }
    }
    out.envelope_W[static_cast<Eigen::Index>(k)] = best;
    out.schedule.betas[k] = grid[arg];
  }

  const PolicySchedule& sched = out.schedule;
  auto traj = integrate([&sched](double t) { return sched.at(t); }, setup.alpha1, setup.alpha2,
                        setup.state0, setup.T, setup.dt);
  out.attained = make_outcome(out.schedule, std::move(traj));
  return out;
}

double best_transfer_rate(double alpha1, double alpha2, const SectorState& state, double lookahead,
                          double beta_min, double beta_max, double rel_tol) {
  if (!(lookahead > 0)) throw std::invalid_argument("lookahead must be positive");
  if (!(beta_min > 0) || beta_min > beta_max) throw std::invalid_argument("invalid beta bounds");
  if (beta_min == beta_max) return beta_min;

  auto objective = [&](double log_beta) {
    return closed_form_total(SectorParams{alpha1, alpha2, std::exp(log_beta)}, state, lookahead);
  };

  // Bracket on a log grid, then refine in log(beta).
  constexpr int kScan = 24;
  const double lo = std::log(beta_min), hi = std::log(beta_max);
  std::vector<double> xs(kScan), fs(kScan);
  int arg = 0;
  for (int i = 0; i < kScan; ++i) {
    xs[i] = lo + (hi - lo) * i / (kScan - 1);
    fs[i] = objective(xs[i]);
    if (fs[i] > fs[arg]) arg = i;
  }
  double a = xs[std::max(arg - 1, 0)];
  double b = xs[std::min(arg + 1, kScan - 1)];

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  // Tolerance on beta itself: |delta beta| / beta ~ |delta log beta|.
  while (b - a > rel_tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double best_x = fc >= fd ? c : d;
  double best_f = std::max(fc, fd);
  if (fs[arg] > best_f) {
    best_x = xs[arg];
    best_f = fs[arg];
  }
  // Prefer the floor unless a larger beta is strictly better beyond rounding.
  const double f_floor = fs[0];
  if (f_floor >= best_f - 1e-12 * std::abs(best_f)) return beta_min;
  return std::clamp(std::exp(best_x), beta_min, beta_max);
}

PolicyOutcome optimal_policy(const PolicySetup& setup, double lookahead) {
  check_setup(setup);
  const auto times = time_grid(setup.T, setup.dt);

  PolicySchedule sched;
  sched.beta_min = setup.beta_min;
  sched.beta_max = setup.beta_max;
  sched.times.assign(times.begin(), times.end() - 1);
  sched.betas.reserve(sched.times.size());

  Trajectory traj;
  traj.reserve(times.size());
  SectorState s{setup.state0.w1, setup.state0.w2, 0.0};
  traj.push_back(s);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double beta = best_transfer_rate(setup.alpha1, setup.alpha2, s, lookahead,
                                           setup.beta_min, setup.beta_max);
    sched.betas.push_back(beta);
    const double h = times[k + 1] - times[k];
    const Eigen::Vector2d w = modal_state(decompose(SectorParams{setup.alpha1, setup.alpha2, beta}, s), h);
    if (!w.allFinite()) throw NonFiniteState("non-finite state in optimal policy");
    s = {w[0], w[1], times[k + 1]};
    traj.push_back(s);
  }
  PolicyOutcome out = make_outcome(std::move(sched), std::move(traj));
  out.lookahead = lookahead;
  return out;
}

PolicyKind classify_policy(const Eigen::VectorXd& delta, const ClassifierOptions& options) {
  const Eigen::Index n = delta.size();
  if (n < 5) throw std::invalid_argument("classification needs at least 5 samples");
  if (!delta.allFinite()) return PolicyKind::indeterminate;

  // Under a constant beta, Delta(t) is a Moebius function of exp(r t): its
  // curvature can only go from positive to negative. A stretch of flat or
  // negative curvature followed by positive curvature needs a varying beta.
  const Eigen::VectorXd d1 = delta.tail(n - 1) - delta.head(n - 1);
  const Eigen::VectorXd d2 = d1.tail(n - 2) - d1.head(n - 2);
  const double scale = d1.cwiseAbs().maxCoeff();
  if (scale == 0) return PolicyKind::indeterminate;
  const double flat = options.flat_threshold * scale;

  const Eigen::Index m = d2.size();
  std::vector<int> sign(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) sign[i] = d2[i] > flat ? 1 : (d2[i] < -flat ? -1 : 0);
  if (std::all_of(sign.begin(), sign.end(), [](int v) { return v == 0; })) {
    return PolicyKind::indeterminate;
  }

  // Leading non-positive stretch, then the first positive sample.
  const auto turn = std::find(sign.begin(), sign.end(), 1);
  if (turn != sign.begin() && turn != sign.end()) {
    Eigen::Index positive = 0, nonflat = 0;
    for (auto it = turn; it != sign.end(); ++it) {
      positive += *it == 1;
      nonflat += *it != 0;
    }
    if (static_cast<double>(positive) >= options.majority * static_cast<double>(nonflat)) {
      return PolicyKind::dynamic_policy;
    }
    return PolicyKind::indeterminate;
  }

  // Positive then non-positive, never back: the constant-beta signature.
  const auto first_nonpositive =
      std::find_if(sign.begin(), sign.end(), [](int v) { return v != 1; });
  if (std::find(first_nonpositive, sign.end(), 1) == sign.end()) return PolicyKind::static_policy;
  return PolicyKind::indeterminate;
}

Eigen::VectorXd classification_window(const PolicyOutcome& outcome, double periods) {
  std::vector<double> samples;
  double next = 0;
  for (std::size_t i = 0; i < outcome.trajectory.size(); ++i) {
    const double t = outcome.trajectory[i].t;
    if (t > periods + 1e-9) break;
    if (t + 1e-6 >= next) {
      samples.push_back(outcome.delta[static_cast<Eigen::Index>(i)]);
      next += 1.0;
    }
  }
  return Eigen::Map<Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(samples.size()));
}

SeriesSegment unit_period_series(const PolicyOutcome& outcome) {
  std::vector<double> samples;
  double next = 0;
  for (std::size_t i = 0; i < outcome.trajectory.size(); ++i) {
    const double t = outcome.trajectory[i].t;
    if (t + 1e-6 >= next) {
      samples.push_back(outcome.W[static_cast<Eigen::Index>(i)]);
      next += 1.0;
    }
  }
  SeriesSegment seg;
  seg.values = Eigen::Map<Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(samples.size()));
  seg.start_index = 0;
  seg.label = "simulated W";
  return seg;
}

const FitResult& effective_fit(PolicyOutcome& outcome, const FitOptions& options) {
  SeriesSegment seg = unit_period_series(outcome);
  if (seg.size() > 0 && (seg.values.array() > 0).all()) seg.values *= 100.0 / seg.values[0];
  outcome.effective_fit = fit_episode(seg, options);
  return *outcome.effective_fit;
}

}  // namespace recovery
