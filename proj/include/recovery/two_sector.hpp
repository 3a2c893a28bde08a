#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "recovery/errors.hpp"

namespace recovery {

class DegenerateRates : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Two sectors with intrinsic rates alpha1 (growing) and alpha2 (shrinking)
/// exchanging activity at rate beta:
///
///   dw1/dt = alpha1 w1 + beta (<w> - w1)
///   dw2/dt = alpha2 w2 + beta (<w> - w2),   <w> = (w1 + w2) / 2
template <typename Scalar>
struct SectorParamsT {
  Scalar alpha1{0};
  Scalar alpha2{0};
  Scalar beta{0};

  Scalar delta() const { return alpha1 - alpha2; }
  Scalar sigma() const { return alpha1 + alpha2; }
  Scalar zeta() const { return beta / delta(); }
};

template <typename Scalar>
struct SectorStateT {
  Scalar w1{0};
  Scalar w2{0};
  Scalar t{0};

  Scalar total() const { return w1 + w2; }
  Scalar mean() const { return (w1 + w2) / Scalar(2); }
  Eigen::Matrix<Scalar, 2, 1> vector() const { return {w1, w2}; }
};

/// Eigenvalues and orthonormal eigenvectors of the system matrix, plus the
/// modal amplitudes of an initial state when produced by decompose().
template <typename Scalar>
struct EigenSystemT {
  using Vec = Eigen::Matrix<Scalar, 2, 1>;
  Scalar lambda_plus{0};
  Scalar lambda_minus{0};
  Vec v_plus{Vec::UnitX()};
  Vec v_minus{Vec::UnitY()};
  Scalar omega_plus{0};
  Scalar omega_minus{0};
};

using SectorParams = SectorParamsT<double>;
using SectorState = SectorStateT<double>;
using EigenSystem = EigenSystemT<double>;
using Trajectory = std::vector<SectorState>;

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> system_matrix(const SectorParamsT<Scalar>& p) {
  const Scalar h = p.beta / Scalar(2);
  Eigen::Matrix<Scalar, 2, 2> A;
  A << p.alpha1 - h, h,
       h, p.alpha2 - h;
  return A;
}

/// Time derivative of the state.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> rhs(const SectorParamsT<Scalar>& p, Scalar w1, Scalar w2) {
  const Scalar mean = (w1 + w2) / Scalar(2);
  return {p.alpha1 * w1 + p.beta * (mean - w1), p.alpha2 * w2 + p.beta * (mean - w2)};
}

/// Closed-form eigensystem:
///   lambda_+- = (sigma - beta +- sqrt(delta^2 + beta^2)) / 2
/// which is delta [sigma/delta - zeta +- sqrt(1 + zeta^2)] / 2 written without
/// dividing by delta. The eigenvectors are the rescaled (zeta, -1 +- sqrt(1 + zeta^2)):
/// v+ ~ (delta + r, beta) and v- ~ (-beta, delta + r) for delta >= 0, where
/// r = sqrt(delta^2 + beta^2). v+ has non-negative components.
template <typename Scalar>
EigenSystemT<Scalar> eigen(const SectorParamsT<Scalar>& p) {
  using std::hypot;
  using Vec = typename EigenSystemT<Scalar>::Vec;
  const Scalar delta = p.delta();
  const Scalar r = hypot(delta, p.beta);

  EigenSystemT<Scalar> es;
  es.lambda_plus = (p.sigma() - p.beta + r) / Scalar(2);
  es.lambda_minus = (p.sigma() - p.beta - r) / Scalar(2);
  if (p.beta == Scalar(0)) {
    // Uncoupled sectors: the rates themselves, without the rounding of (sigma +- r) / 2.
    using std::max;
    using std::min;
    es.lambda_plus = max(p.alpha1, p.alpha2);
    es.lambda_minus = min(p.alpha1, p.alpha2);
  }

  if (r == Scalar(0)) {
    // Scalar multiple of the identity: any orthonormal basis will do.
    es.v_plus = Vec::UnitX();
    es.v_minus = Vec::UnitY();
    return es;
  }
  // The row that avoids cancellation for the sign of delta.
  Vec v = delta >= Scalar(0) ? Vec(delta + r, p.beta) : Vec(p.beta, r - delta);
  es.v_plus = v.normalized();
  es.v_minus = Vec(-es.v_plus[1], es.v_plus[0]);
  return es;
}

/// Reference eigensystem from a general symmetric solver, oriented like eigen().
template <typename Scalar>
EigenSystemT<Scalar> eigen_direct(const SectorParamsT<Scalar>& p) {
  using Vec = typename EigenSystemT<Scalar>::Vec;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> solver(system_matrix(p));
  EigenSystemT<Scalar> es;
  // Eigenvalues come back in increasing order.
  es.lambda_minus = solver.eigenvalues()[0];
  es.lambda_plus = solver.eigenvalues()[1];
  Vec vp = solver.eigenvectors().col(1);
  if (vp[0] + vp[1] < Scalar(0)) vp = -vp;
  es.v_plus = vp;
  es.v_minus = Vec(-vp[1], vp[0]);
  return es;
}

/// Projects the initial state on the eigenbasis.
template <typename Scalar>
EigenSystemT<Scalar> decompose(const SectorParamsT<Scalar>& p, const SectorStateT<Scalar>& s0) {
  EigenSystemT<Scalar> es = eigen(p);
  const auto w = s0.vector();
  es.omega_plus = w.dot(es.v_plus);
  es.omega_minus = w.dot(es.v_minus);
  return es;
}

/// Modal solution at elapsed time `t` from a decomposed initial state.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> modal_state(const EigenSystemT<Scalar>& es, Scalar t) {
  using std::exp;
  return es.omega_plus * es.v_plus * exp(es.lambda_plus * t) +
         es.omega_minus * es.v_minus * exp(es.lambda_minus * t);
}

template <typename Scalar>
SectorStateT<Scalar> closed_form(const SectorParamsT<Scalar>& p, const SectorStateT<Scalar>& s0,
                                 Scalar t) {
  if (t == Scalar(0)) return {s0.w1, s0.w2, s0.t};
  const auto w = modal_state(decompose(p, s0), t);
  return {w[0], w[1], s0.t + t};
}

/// Total activity W = w1 + w2 after elapsed time `t` at constant beta.
template <typename Scalar>
Scalar closed_form_total(const SectorParamsT<Scalar>& p, const SectorStateT<Scalar>& s0,
                         Scalar t) {
  const auto w = modal_state(decompose(p, s0), t);
  return w[0] + w[1];
}

/// Classic RK4 with beta(t) read at the start of each step (piecewise
/// constant). `beta_at` is any callable double -> double. The trajectory
/// holds t = 0, dt, 2 dt, ... and ends exactly at T.
template <typename BetaAt>
Trajectory integrate(BetaAt&& beta_at, double alpha1, double alpha2, const SectorState& s0,
                     double T, double dt = 0.01) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  if (!(T >= dt)) throw std::invalid_argument("horizon must be at least one step");

  const auto steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  Trajectory out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back({s0.w1, s0.w2, 0.0});

  Eigen::Vector2d w(s0.w1, s0.w2);
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double h = (k + 1 == steps) ? T - t : dt;
    const SectorParams p{alpha1, alpha2, static_cast<double>(beta_at(t))};
    const Eigen::Vector2d k1 = rhs(p, w[0], w[1]);
    const Eigen::Vector2d a = w + 0.5 * h * k1;
    const Eigen::Vector2d k2 = rhs(p, a[0], a[1]);
    const Eigen::Vector2d b = w + 0.5 * h * k2;
    const Eigen::Vector2d k3 = rhs(p, b[0], b[1]);
    const Eigen::Vector2d c = w + h * k3;
    const Eigen::Vector2d k4 = rhs(p, c[0], c[1]);
    w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!w.allFinite()) {
      throw NonFiniteState("non-finite state at t = " + std::to_string(t + h));
    }
    out.push_back({w[0], w[1], (k + 1 == steps) ? T : t + h});
  }
  return out;
}

inline Trajectory integrate(double beta, double alpha1, double alpha2, const SectorState& s0,
                            double T, double dt = 0.01) {
  return integrate([beta](double) { return beta; }, alpha1, alpha2, s0, T, dt);
}

/// Instantaneous sector inequality w1 / w2.
template <typename Scalar>
Scalar inequality(const SectorStateT<Scalar>& s) {
  if (s.w2 == Scalar(0)) throw DivisionByZero("inequality undefined for w2 = 0");
  return s.w1 / s.w2;
}

/// Long-run w1 / w2 = v+_1 / v+_2 = zeta / (sqrt(1 + zeta^2) - 1), evaluated
/// as (sqrt(1 + zeta^2) + 1) / zeta to avoid cancellation at small zeta.
template <typename Scalar>
Scalar asymptotic_inequality(const SectorParamsT<Scalar>& p) {
  using std::sqrt;
  if (p.beta == Scalar(0)) throw DivisionByZero("asymptotic inequality diverges at beta = 0");
  if (!(p.delta() > Scalar(0))) throw DegenerateRates("asymptotic inequality requires alpha1 > alpha2");
  const Scalar z = p.zeta();
  return (sqrt(Scalar(1) + z * z) + Scalar(1)) / z;
}

/// Time to reach the asymptotic regime, 1 / (lambda+ + |lambda-|).
template <typename Scalar>
Scalar relaxation_time(const SectorParamsT<Scalar>& p) {
  using std::abs;
  const auto es = eigen(p);
  return Scalar(1) / (es.lambda_plus + abs(es.lambda_minus));
}

}  // namespace recovery
