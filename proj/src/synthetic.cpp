#include "recovery/synthetic.hpp"

#include <random>
#include <stdexcept>

namespace recovery {

namespace {

class NoiseStream {
 public:
  explicit NoiseStream(const NoiseSpec& spec) : nu_(spec.nu), rng_(spec.seed) {
    if (!(nu_ >= 0)) throw std::invalid_argument("noise strength must be non-negative");
  }

  double factor() {
    if (nu_ == 0) return 1.0;
    for (;;) {
      const double m = 1.0 + nu_ * normal_(rng_);
      if (m > 0.01) return m;
    }
  }

 private:
  double nu_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

SeriesSegment generate(const ResponseParams& params, const NoiseSpec& noise, Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("series length must be at least 1");
  return generate_piecewise({{params, n}}, noise);
}

Eigen::VectorXd piecewise_curve(const std::vector<Episode>& episodes) {
  if (episodes.empty()) throw std::invalid_argument("at least one episode required");
  Eigen::Index total = 0;
  for (const auto& e : episodes) {
    if (e.length < 1) throw std::invalid_argument("episode length must be at least 1");
    total += e.length;
  }

  Eigen::VectorXd curve(total);
  ResponseParams current = episodes.front().params;
  Eigen::Index start = 0;
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    if (k > 0) {
      const double level = evaluate(current, static_cast<double>(start));
      current = episodes[k].params;
      current.w0 = level;
      current.t0 = static_cast<double>(start);
    }
    for (Eigen::Index i = 0; i < episodes[k].length; ++i) {
      curve[start + i] = evaluate(current, static_cast<double>(start + i));
    }
    start += episodes[k].length;
  }
  return curve;
}

SeriesSegment generate_piecewise(const std::vector<Episode>& episodes, const NoiseSpec& noise) {
  NoiseStream stream(noise);
  SeriesSegment out;
  out.values = piecewise_curve(episodes);
  for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values[i] *= stream.factor();
  out.start_index = 0;
  out.period_unit = PeriodUnit::quarter;
  out.label = "synthetic";
  return out;
}

}  // namespace recovery
