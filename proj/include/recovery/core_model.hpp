#pragma once

#include <Eigen/Core>
#include <cmath>

namespace recovery {

/// Parameters of the two-exponential recession/recovery response
///
///   W(t) = w0 [ f exp(lambda_plus (t - t0)) + (1 - f) exp(lambda_minus (t - t0)) ]
///
/// `f` is the fraction of the economy growing at `lambda_plus`; the remainder
/// decays at `lambda_minus`. Time is a dimensionless period index.
template <typename Scalar>
struct ResponseParamsT {
  Scalar f{0.5};
  Scalar lambda_plus{0};
  Scalar lambda_minus{0};
  Scalar w0{1};
  Scalar t0{0};
};

using ResponseParams = ResponseParamsT<double>;

/// Partial derivatives of W(t) with respect to (f, lambda_plus, lambda_minus, w0).
template <typename Scalar>
using ResponseGradient = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar>
Scalar evaluate(const ResponseParamsT<Scalar>& p, Scalar t) {
  using std::exp;
  const Scalar dt = t - p.t0;
  return p.w0 * (p.f * exp(p.lambda_plus * dt) +
                 (Scalar(1) - p.f) * exp(p.lambda_minus * dt));
}

template <typename Scalar>
ResponseGradient<Scalar> gradient(const ResponseParamsT<Scalar>& p, Scalar t) {
  using std::exp;
  const Scalar dt = t - p.t0;
  const Scalar ep = exp(p.lambda_plus * dt);
  const Scalar em = exp(p.lambda_minus * dt);
  ResponseGradient<Scalar> g;
  g << p.w0 * (ep - em),
       p.w0 * p.f * dt * ep,
       p.w0 * (Scalar(1) - p.f) * dt * em,
       p.f * ep + (Scalar(1) - p.f) * em;
  return g;
}

/// True when W'(t0) < 0, i.e. the trajectory first dips before recovering.
template <typename Scalar>
bool is_j_shaped(const ResponseParamsT<Scalar>& p) {
  return p.f * p.lambda_plus + (Scalar(1) - p.f) * p.lambda_minus < Scalar(0);
}

/// Swaps (f, lambda_plus) <-> (1 - f, lambda_minus) when needed so that
/// lambda_plus >= lambda_minus. W(t) is unchanged.
template <typename Scalar>
ResponseParamsT<Scalar> canonicalize(ResponseParamsT<Scalar> p) {
  if (p.lambda_plus < p.lambda_minus) {
    std::swap(p.lambda_plus, p.lambda_minus);
    p.f = Scalar(1) - p.f;
  }
  return p;
}

}  // namespace recovery
