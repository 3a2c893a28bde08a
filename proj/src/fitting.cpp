#include "recovery/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "recovery/errors.hpp"

namespace recovery {

SeriesSegment SeriesSegment::slice(Eigen::Index begin, Eigen::Index end) const {
  SeriesSegment out;
  out.values = values.segment(begin, end - begin);
  out.start_index = start_index + begin;
  out.period_unit = period_unit;
  out.label = label;
  return out;
}

void validate_segment(const SeriesSegment& segment) {
  if (segment.size() < 4) {
    throw DegenerateSegment("segment '" + segment.label + "' has " +
                            std::to_string(segment.size()) +
                            " observations, at least 4 required");
  }
  for (Eigen::Index i = 0; i < segment.size(); ++i) {
    const double v = segment.values[i];
    if (!std::isfinite(v) || v <= 0) {
      throw DegenerateSegment("segment '" + segment.label +
                              "' has a non-positive value at period " +
                              std::to_string(segment.start_index + i));
    }
  }
}

ResidualStats residual_stats(const SeriesSegment& segment, const ResponseParams& params) {
  ResidualStats s;
  s.n = segment.size();
  for (Eigen::Index i = 0; i < s.n; ++i) {
    const double model = evaluate(params, segment.time(i));
    const double d = segment.values[i] - model;
    const double rel = 100.0 * d / model;
    s.srs += d * d;
    s.rsrs += rel * rel;
  }
  if (s.n > 0) {
    s.srm = s.srs / static_cast<double>(s.n);
    s.rsrm = s.rsrs / static_cast<double>(s.n);
  }
  return s;
}

namespace {

constexpr double kFLower = 0.0;
constexpr double kFUpper = 1.0;

// Layout of the optimizer's parameter vector.
enum Slot : Eigen::Index { kF = 0, kLp = 1, kLm = 2, kW0 = 3 };

struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  explicit Bounds(Eigen::Index k) : lower(k), upper(k) {
    lower.head<3>() << kFLower, kLambdaPlusLower, kLambdaMinusLower;
    upper.head<3>() << kFUpper, kLambdaPlusUpper, kLambdaMinusUpper;
    if (k > kW0) {
      lower[kW0] = 0.0;
      upper[kW0] = std::numeric_limits<double>::infinity();
    }
  }
};

ResponseParams unpack(const Eigen::VectorXd& x, const ResponseParams& base) {
  ResponseParams p = base;
  p.f = x[kF];
  p.lambda_plus = x[kLp];
  p.lambda_minus = x[kLm];
  if (x.size() > kW0) p.w0 = x[kW0];
  return p;
}

struct Problem {
  const SeriesSegment& segment;
  ResponseParams base;  // carries w0 / t0 when they are not optimized
  Eigen::Index k;       // 3 or 4 free parameters

  void residuals(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
    const ResponseParams p = unpack(x, base);
    r.resize(segment.size());
    for (Eigen::Index i = 0; i < segment.size(); ++i) {
      r[i] = evaluate(p, segment.time(i)) - segment.values[i];
    }
  }

  void jacobian(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
    const ResponseParams p = unpack(x, base);
    J.resize(segment.size(), k);
    for (Eigen::Index i = 0; i < segment.size(); ++i) {
      J.row(i) = gradient(p, segment.time(i)).head(k).transpose();
    }
  }
};

Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const Bounds& b) {
  Eigen::VectorXd out = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(x[i], b.lower[i], b.upper[i]);
  }
  if (out.size() > kW0 && out[kW0] <= 0) out[kW0] = 1e-12 * std::abs(x[kW0]) + 1e-300;
  return out;
}

// Components of the gradient that point into the box; the rest are blocked
// by an active bound.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Bounds& b) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= b.lower[i] && g[i] > 0) || (x[i] >= b.upper[i] && g[i] < 0)) pg[i] = 0;
  }
  return pg;
}

std::vector<std::string> bounds_touched(const ResponseParams& p, bool free_w0) {
  std::vector<std::string> hit;
  auto near = [](double v, double b) { return std::abs(v - b) <= kBoundaryTolerance; };
  if (near(p.f, kFLower) || near(p.f, kFUpper)) hit.emplace_back("f");
  if (near(p.lambda_plus, kLambdaPlusLower) || near(p.lambda_plus, kLambdaPlusUpper))
    hit.emplace_back("lambda_plus");
  if (near(p.lambda_minus, kLambdaMinusLower) || near(p.lambda_minus, kLambdaMinusUpper))
    hit.emplace_back("lambda_minus");
  if (free_w0 && p.w0 <= kBoundaryTolerance) hit.emplace_back("w0");
  return hit;
}

FitResult solve(const SeriesSegment& segment, const FitOptions& options,
                const ResponseParams& start) {
  const Eigen::Index k = options.free_w0 ? 4 : 3;
  ResponseParams base = start;
  base.t0 = segment.time(0);
  if (!options.free_w0) base.w0 = segment.values[0];

  Problem problem{segment, base, k};
  const Bounds bounds(k);

  Eigen::VectorXd x(k);
  x[kF] = start.f;
  x[kLp] = start.lambda_plus;
  x[kLm] = start.lambda_minus;
  if (k > kW0) x[kW0] = start.w0 > 0 ? start.w0 : segment.values[0];
  x = clamp_to(x, bounds);

  Eigen::VectorXd r, r_new;
  Eigen::MatrixXd J;
  problem.residuals(x, r);
  double cost = 0.5 * r.squaredNorm();
  const double data_scale = segment.values.squaredNorm();

  double mu = -1;  // damping, initialised from the first J^T J
  double nu = 2;
  bool converged = false;
  int iter = 0;

  for (; iter < options.max_iterations && !converged; ++iter) {
    problem.jacobian(x, J);
    const Eigen::VectorXd g = J.transpose() * r;
    const Eigen::VectorXd pg = projected_gradient(x, g, bounds);

    // Scale-free stationarity test: cosine between each column and the residual.
    const double rnorm = r.norm();
    double worst = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double cn = J.col(j).norm();
      if (cn > 0 && rnorm > 0) worst = std::max(worst, std::abs(pg[j]) / (cn * rnorm));
    }
    if (rnorm == 0 || cost <= 1e-30 * data_scale || worst <= options.gradient_tolerance) {
      converged = true;
      break;
    }

    Eigen::MatrixXd H = J.transpose() * J;
    Eigen::VectorXd diag = H.diagonal().cwiseMax(1e-12 * std::max(1.0, H.diagonal().maxCoeff()));
    if (mu < 0) mu = 1e-3;

    // Inner loop: raise damping until a step reduces the cost.
    bool accepted = false;
    while (!accepted) {
      Eigen::VectorXd free = Eigen::VectorXd::Ones(k);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (pg[j] == 0 && g[j] != 0) free[j] = 0;
      }
      Eigen::MatrixXd A = H;
      for (Eigen::Index j = 0; j < k; ++j) {
        A(j, j) += mu * diag[j];
        if (free[j] == 0) {
          A.row(j).setZero();
          A.col(j).setZero();
          A(j, j) = 1;
        }
      }
      Eigen::VectorXd rhs = -g.cwiseProduct(free);
      Eigen::VectorXd step = A.ldlt().solve(rhs);
      Eigen::VectorXd x_new = clamp_to(x + step, bounds);
      Eigen::VectorXd taken = x_new - x;

      if (taken.norm() <= 1e-15 * (x.norm() + 1e-15)) {
        // No representable progress left: x is stationary up to rounding.
        converged = true;
        break;
      }

      problem.residuals(x_new, r_new);
      const double cost_new = 0.5 * r_new.squaredNorm();
      const double predicted = -(g.dot(taken) + 0.5 * taken.dot(H * taken));
      const double actual = cost - cost_new;
      const double rho = predicted > 0 ? actual / predicted : -1;

      if (std::isfinite(cost_new) && actual > 0 && rho > 1e-4) {
        const double rel_drop = actual / std::max(cost, 1e-300);
        x = x_new;
        r = r_new;
        cost = cost_new;
        mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        nu = 2;
        accepted = true;
        if (rel_drop <= 1e-15 && predicted / std::max(cost, 1e-300) <= 1e-15) converged = true;
      } else {
        mu *= nu;
        nu *= 2;
        if (mu > 1e32) {
          converged = true;
          break;
        }
      }
    }
  }

  if (!converged) {
    throw NonConvergence("fit of '" + segment.label + "' did not converge within " +
                         std::to_string(options.max_iterations) + " iterations");
  }

  const ResponseParams raw = unpack(x, base);
  FitResult out;
  out.params = canonicalize(raw);
  out.converged = true;
  out.iterations = iter;

  const ResidualStats stats = residual_stats(segment, out.params);
  out.srs = stats.srs;
  out.srm = stats.srm;
  out.rsrs = stats.rsrs;
  out.rsrm = stats.rsrm;
  out.n = stats.n;

  // Gauss-Newton covariance sigma^2 (J^T J)^+ at the optimum.
  problem.jacobian(x, J);
  const double dof = static_cast<double>(std::max<Eigen::Index>(1, segment.size() - k));
  const double sigma2 = stats.srs / dof;
  const Eigen::MatrixXd cov =
      sigma2 * Eigen::MatrixXd(J.transpose() * J).completeOrthogonalDecomposition().pseudoInverse();
  auto se = [&](Eigen::Index j) { return std::sqrt(std::max(0.0, cov(j, j))); };
  const bool swapped = raw.lambda_plus < raw.lambda_minus;
  out.std_errors.f = se(kF);
  out.std_errors.lambda_plus = swapped ? se(kLm) : se(kLp);
  out.std_errors.lambda_minus = swapped ? se(kLp) : se(kLm);
  out.std_errors.w0 = k > kW0 ? se(kW0) : 0.0;
  out.std_errors.t0 = 0;

  out.boundary_hit = bounds_touched(out.params, options.free_w0);
  return out;
}

}  // namespace

ResponseParams initial_guess(const SeriesSegment& segment) {
  const auto& y = segment.values;
  const Eigen::Index n = y.size();
  Eigen::Index t_min = 0;
  y.minCoeff(&t_min);

  ResponseParams p;
  p.w0 = y[0];
  p.t0 = segment.time(0);

  // Decay from the opening slope when the series dips at all.
  double lm = std::log(y[1] / y[0]);
  if (t_min == 0 || !(lm < -1e-3)) lm = -0.1;
  p.lambda_minus = std::clamp(lm, kLambdaMinusLower + 1e-3, -1e-3);

  double lp = std::log(y[n - 1] / y[n - 2]);
  if (!(lp > 1e-4)) lp = 0.01;
  p.lambda_plus = std::clamp(lp, p.lambda_minus + 1e-3, kLambdaPlusUpper - 1e-3);

  // Choose f so the curve passes through the final observation.
  const double T = static_cast<double>(n - 1);
  const double ep = std::exp(p.lambda_plus * T);
  const double em = std::exp(p.lambda_minus * T);
  double f = (y[n - 1] / y[0] - em) / (ep - em);
  if (!std::isfinite(f)) f = 0.5;
  p.f = std::clamp(f, 0.01, 0.99);
  return p;
}

FitResult fit_episode(const SeriesSegment& segment, const FitOptions& options) {
  validate_segment(segment);
  ResponseParams start = options.initial ? *options.initial : initial_guess(segment);
  if (options.initial && !options.free_w0) start.w0 = segment.values[0];
  return solve(segment, options, start);
}

FitResult fit_with_restarts(const SeriesSegment& segment, int restarts,
                            const FitOptions& options) {
  if (restarts < 1) throw std::invalid_argument("restart count must be at least 1");
  validate_segment(segment);

  const ResponseParams heuristic = options.initial ? *options.initial : initial_guess(segment);
  std::mt19937_64 rng(options.seed);
  std::lognormal_distribution<double> jitter(0.0, 0.7);
  std::uniform_real_distribution<double> unit(0.02, 0.98);

  std::optional<FitResult> best;
  std::optional<NonConvergence> last_error;
  for (int k = 0; k < restarts; ++k) {
    ResponseParams start = heuristic;
    if (k > 0) {
      start.f = unit(rng);
      start.lambda_plus = std::clamp(heuristic.lambda_plus * jitter(rng), -0.999, 0.999);
      start.lambda_minus = std::clamp(heuristic.lambda_minus * jitter(rng), -0.999, -1e-4);
    }
    FitOptions opt = options;
    opt.initial = start;
    try {
      FitResult r = fit_episode(segment, opt);
      if (!best || r.srs < best->srs) best = std::move(r);
    } catch (const NonConvergence& e) {
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return *best;
}

}  // namespace recovery
