#include <doctest.h>

#include <random>

#include "recovery/core_model.hpp"

using namespace recovery;

TEST_CASE("evaluate matches a high-precision reference") {
  const ResponseParams p{0.75, 0.0125, -0.169, 100, 0};
  CHECK(evaluate(p, 20.0) == doctest::Approx(97.1530926199455948).epsilon(1e-14));
  CHECK(evaluate(p, 0.0) == doctest::Approx(100.0));

  // Shifting t0 only shifts the curve.
  ResponseParams q = p;
  q.t0 = 7;
  CHECK(evaluate(q, 27.0) == doctest::Approx(evaluate(p, 20.0)).epsilon(1e-14));
}

TEST_CASE("long double instantiation agrees with double") {
  const ResponseParamsT<long double> pl{0.3L, 0.04L, -0.2L, 50.0L, 0.0L};
  const ResponseParams pd{0.3, 0.04, -0.2, 50.0, 0.0};
  for (double t : {0.0, 1.5, 10.0, 80.0}) {
    CHECK(static_cast<double>(evaluate(pl, static_cast<long double>(t))) ==
          doctest::Approx(evaluate(pd, t)).epsilon(1e-13));
  }
}

TEST_CASE("gradient agrees with central differences") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uf(0.01, 0.99), ulp(-0.2, 0.2), ulm(-0.9, -0.01),
      uw(1, 500), ut(0, 60);
  int worst = 0;
  for (int k = 0; k < 1000; ++k) {
    ResponseParamsT<long double> p{uf(rng), ulp(rng), ulm(rng), uw(rng), 0};
    const long double t = ut(rng);
    const auto g = gradient(p, t);
    long double* fields[4] = {&p.f, &p.lambda_plus, &p.lambda_minus, &p.w0};
    for (int j = 0; j < 4; ++j) {
      const long double x = *fields[j];
      const long double h = 1e-6L * std::max(1.0L, std::abs(x));
      *fields[j] = x + h;
      const long double up = evaluate(p, t);
      *fields[j] = x - h;
      const long double down = evaluate(p, t);
      *fields[j] = x;
      const long double fd = (up - down) / (2 * h);
      const long double scale = std::max(1.0L, std::abs(g[j]));
      if (std::abs(fd - g[j]) / scale > 1e-6L) ++worst;
    }
  }
  CHECK(worst == 0);
}

TEST_CASE("J-shape condition") {
  CHECK(is_j_shaped(ResponseParams{0.75, 0.0125, -0.169, 100, 0}));
  CHECK_FALSE(is_j_shaped(ResponseParams{0.95, 0.05, -0.1, 100, 0}));
  // Exactly zero initial slope is not a dip.
  CHECK_FALSE(is_j_shaped(ResponseParams{0.5, 0.1, -0.1, 1, 0}));
}

TEST_CASE("canonicalize swaps components without changing the curve") {
  const ResponseParams p{0.25, -0.169, 0.0125, 100, 0};
  const ResponseParams c = canonicalize(p);
  CHECK(c.f == doctest::Approx(0.75));
  CHECK(c.lambda_plus == doctest::Approx(0.0125));
  CHECK(c.lambda_minus == doctest::Approx(-0.169));
  for (double t : {0.0, 3.0, 40.0}) CHECK(evaluate(c, t) == doctest::Approx(evaluate(p, t)));

  const ResponseParams already{0.6, 0.02, -0.1, 1, 0};
  const ResponseParams same = canonicalize(already);
  CHECK(same.f == already.f);
  CHECK(same.lambda_plus == already.lambda_plus);
}
