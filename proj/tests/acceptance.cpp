// Acceptance run: one PASS/FAIL line per criterion. Real-data checks for
// criterion 11 need --finland and/or --uk; without them the synthetic
// surrogates are used.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "recovery/errors.hpp"
#include "recovery/fitting.hpp"
#include "recovery/io.hpp"
#include "recovery/policy.hpp"
#include "recovery/shock_detection.hpp"
#include "recovery/synthetic.hpp"
#include "recovery/two_sector.hpp"

using namespace recovery;

namespace {

struct Verdict {
  bool pass{false};
  std::string detail;
  bool skipped{false};
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ResponseParams kBench{0.75, 0.0125, -0.169, 100, 0};
constexpr int kSeeds = 20;

Verdict parameter_recovery() {
  const auto t0 = Clock::now();
  int ok = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const FitResult r = fit_episode(generate(kBench, {0.005, std::uint64_t(s)}, 200));
    const auto& p = r.params;
    ok += std::abs(p.f - 0.75) <= 0.02 && std::abs(p.lambda_plus - 0.0125) <= 0.001 &&
          std::abs(p.lambda_minus / -0.169 - 1) <= 0.10;
  }
  const double el = seconds_since(t0);
  return {ok >= 18 && el < 5, fmt("%d/20 seeds within tolerance, %.2f s", ok, el)};
}

Verdict horizon_jump() {
  int ok = 0;
  std::string firsts;
  for (int s = 0; s < kSeeds; ++s) {
    const SeriesSegment g = generate(kBench, {0.005, std::uint64_t(s)}, 200);
    DetectionOptions o;
    o.seed = std::uint64_t(s);
    o.t0_last = 60;
    const HorizonCurve c = horizon_curve(g, 0.02, o);
    long first = -1;
    for (const auto& pt : c.points) {
      if (pt.t_pred == 200) {
        first = pt.t0;
        break;
      }
    }
    ok += first >= 0 && first <= 20;
    firsts += (firsts.empty() ? "" : ",") + (first < 0 ? std::string(">60") : std::to_string(first));
  }
  return {ok >= 16, fmt("%d/20 seeds reach full length by t0 <= 20 (first t0: %s)", ok, firsts.c_str())};
}

Verdict shock_detection() {
  const auto t0 = Clock::now();
  ResponseParams b = kBench;
  b.f = 0.375;
  int ok = 0, found = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const SeriesSegment g = generate_piecewise({{kBench, 40}, {b, 160}}, {0.005, std::uint64_t(s)});
    DetectionOptions o;
    o.seed = std::uint64_t(s);
    const ShockReport r = detect_shocks(g, 0.02, o);
    ok += r.shocks.size() == 1 && std::abs(r.shocks[0].time - 40) <= 1;
    for (const auto& sh : r.shocks) found += std::abs(sh.time - 40) <= 1;
  }
  const double el = seconds_since(t0);
  return {ok >= 18 && el < 30,
          fmt("%d/20 seeds with exactly one shock at 40+-1 (break found in %d/20), %.2f s", ok, found, el)};
}

Verdict eigen_correctness() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> a1(0.0, 0.1), a2(-0.2, 0.0), b(0.0, 1.0);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const SectorParams p{a1(rng), a2(rng), b(rng)};
    const EigenSystem e = eigen(p), d = eigen_direct(p);
    worst = std::max({worst, std::abs(e.lambda_plus - d.lambda_plus),
                      std::abs(e.lambda_minus - d.lambda_minus), (e.v_plus - d.v_plus).norm(),
                      (e.v_minus - d.v_minus).norm()});
  }
  bool zero_exact = true;
  for (int k = 0; k < 100; ++k) {
    const SectorParams p{a1(rng), a2(rng), 0.0};
    const EigenSystem e = eigen(p);
    zero_exact = zero_exact && e.lambda_plus == p.alpha1 && e.lambda_minus == p.alpha2;
  }
  return {worst <= 1e-12 && zero_exact,
          fmt("max deviation %.2e over 1000 sets; beta = 0 exact: %s", worst, zero_exact ? "yes" : "no")};
}

Verdict closed_form_vs_integrator() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> a1(0.001, 0.1), a2(-0.2, -0.001), b(0.0, 1.0), w(0.05, 1.0);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const SectorParams p{a1(rng), a2(rng), b(rng)};
    const SectorState s0{w(rng), w(rng), 0.0};
    const Trajectory traj = integrate(p.beta, p.alpha1, p.alpha2, s0, 100.0, 0.01);
    const EigenSystem es = decompose(p, s0);
    for (const SectorState& s : traj) {
      const Eigen::Vector2d c = modal_state(es, s.t);
      worst = std::max({worst, std::abs(s.w1 / c[0] - 1), std::abs(s.w2 / c[1] - 1)});
    }
  }
  return {worst <= 1e-6, fmt("max relative discrepancy %.2e", worst)};
}

Verdict transfer_conservation() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(-0.2, 0.2), b(0.0, 1.0), w(0.0, 10.0);
  double worst = 0;
  for (int k = 0; k < 10000; ++k) {
    const SectorParams p{a(rng), a(rng), b(rng)};
    const double w1 = w(rng), w2 = w(rng);
    worst = std::max(worst, std::abs(rhs(p, w1, w2).sum() - (p.alpha1 * w1 + p.alpha2 * w2)));
  }
  return {worst <= 1e-14, fmt("max deviation %.2e over 10^4 pairs", worst)};
}

Verdict inequality_formula() {
  const double a1 = 0.02, a2 = -0.05;
  double worst_exact = 0, worst_small = 0;
  for (double zeta : {0.01, 0.02, 0.05, 0.1, 0.3, 1.0, 3.0}) {
    const SectorParams p{a1, a2, zeta * (a1 - a2)};
    const double T = 10 * relaxation_time(p);
    const Trajectory traj = integrate(p.beta, a1, a2, SectorState{0.1, 0.9, 0.0}, T, 0.01);
    const double sim = inequality(traj.back());
    const double formula = zeta / (std::sqrt(1 + zeta * zeta) - 1);
    worst_exact = std::max(worst_exact, std::abs(sim / formula - 1));
    if (zeta <= 0.05) worst_small = std::max(worst_small, std::abs(sim / (2 / zeta) - 1));
  }
  return {worst_exact <= 0.01 && worst_small <= 0.05,
          fmt("max deviation from exact form %.2e, from 2/zeta (zeta <= 0.05) %.2e", worst_exact,
              worst_small)};
}

double final_growth(const PolicyOutcome& o, double T) {
  Eigen::Index ref = o.W.size() - 1;
  while (ref > 0 && o.trajectory[std::size_t(ref)].t > 0.9 * T) --ref;
  const double span = o.trajectory.back().t - o.trajectory[std::size_t(ref)].t;
  return std::log(o.W[o.W.size() - 1] / o.W[ref]) / span;
}

struct PolicyRuns {
  EnvelopeResult envelope;
  PolicyOutcome best_static;
  PolicyOutcome floor_static;
  PolicyOutcome optimal;
  double seconds{0};
};

const PolicyRuns& policy_runs() {
  static const PolicyRuns runs = [] {
    const auto t0 = Clock::now();
    PolicyRuns r;
    const PolicySetup setup;
    const auto grid = log_grid(setup.beta_min, setup.beta_max, 1000);
    r.envelope = envelope_policy(setup, grid);
    auto sweep = static_sweep(setup, grid);
    r.floor_static = sweep.front();
    std::size_t best = 0;
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      if (sweep[i].W[sweep[i].W.size() - 1] > sweep[best].W[sweep[best].W.size() - 1]) best = i;
    }
    r.best_static = std::move(sweep[best]);
    r.optimal = optimal_policy(setup);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

Verdict policy_ordering() {
  const PolicyRuns& r = policy_runs();
  const PolicySetup setup;
  const auto& env = r.envelope;
  const double excess = (env.attained.W - env.envelope_W).cwiseQuotient(env.envelope_W).maxCoeff();
  const bool a = excess <= 1e-12;
  const double w_env = env.attained.W[env.attained.W.size() - 1];
  const double w_static = r.best_static.W[r.best_static.W.size() - 1];
  const double w_opt = r.optimal.W[r.optimal.W.size() - 1];
  const bool b = w_static >= w_env;
  const bool c = w_opt >= w_static;
  const double lp = eigen(SectorParams{setup.alpha1, setup.alpha2, setup.beta_min}).lambda_plus;
  const double g_static = final_growth(r.floor_static, setup.T);
  const double g_env = final_growth(env.attained, setup.T);
  const double g_opt = final_growth(r.optimal, setup.T);
  const double dev = std::max({std::abs(g_static - lp), std::abs(g_env - lp), std::abs(g_opt - lp)});
  const bool d = dev <= 1e-3;
  return {a && b && c && d && r.seconds < 60,
          fmt("(a) excess %.1e (b) static %.4g >= envelope %.4g (c) optimal %.4g (d) growth dev %.1e; %.2f s",
              excess, w_static, w_env, w_opt, dev, r.seconds)};
}

Verdict effective_refits() {
  const PolicyRuns& r = policy_runs();
  PolicyOutcome env = r.envelope.attained;
  PolicyOutcome opt = r.optimal;
  const FitResult fe = effective_fit(env);
  const FitResult fo = effective_fit(opt);
  const auto& e = fe.params;
  const auto& o = fo.params;
  const bool env_ok = e.lambda_plus >= 0.018 && e.lambda_plus <= 0.022 && e.lambda_minus >= -0.025 &&
                      e.lambda_minus <= -0.013 && e.f >= 0.05 && e.f <= 0.09;
  const bool opt_ok = o.f >= 0.7 && o.f <= 0.9 && o.lambda_minus >= -0.035 && o.lambda_minus <= -0.020;
  return {env_ok && opt_ok,
          fmt("envelope f=%.4f l+=%.5f l-=%.5f [%s]; optimal f=%.4f l+=%.5f l-=%.5f [%s]", e.f,
              e.lambda_plus, e.lambda_minus, env_ok ? "ok" : "out of range", o.f, o.lambda_plus,
              o.lambda_minus, opt_ok ? "ok" : "out of range")};
}

Verdict classifier() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> a1(0.01, 0.05), a2(-0.1, -0.02), w1(0.05, 0.3), lb(0.0, 1.0);
  int ok = 0;
  for (int k = 0; k < kSeeds; ++k) {
    PolicySetup setup;
    setup.alpha1 = a1(rng);
    setup.alpha2 = a2(rng);
    const double x = w1(rng);
    setup.state0 = {x, 1 - x, 0.0};
    setup.T = 60;
    const double beta = setup.beta_min * std::pow(setup.beta_max / setup.beta_min, lb(rng));
    const double window = relaxation_time(SectorParams{setup.alpha1, setup.alpha2, setup.beta_min});
    const PolicyOutcome st = static_sweep(setup, {beta}).front();
    const PolicyOutcome op = optimal_policy(setup);
    ok += classify_policy(classification_window(st, window)) == PolicyKind::static_policy &&
          classify_policy(classification_window(op, window)) == PolicyKind::dynamic_policy;
  }
  return {ok >= 19, fmt("%d/20 configurations classified correctly", ok)};
}

// Fraction of in-sample sizes t0 in [first, last] with t_pred within 1 of `target`.
double saturation(const SeriesSegment& s, Eigen::Index first, Eigen::Index last, long target,
                  double p, std::uint64_t seed) {
  DetectionOptions o;
  o.t0_first = first;
  o.t0_last = last;
  o.seed = seed;
  const HorizonCurve c = horizon_curve(s, p, o);
  int hit = 0;
  for (const auto& pt : c.points) hit += std::abs(pt.t_pred - target) <= 1;
  return c.points.empty() ? 0.0 : double(hit) / double(last - first + 1);
}

bool finland_fit_ok(const FitResult& r) {
  return std::abs(r.params.f - 0.768) <= 0.02 && std::abs(r.params.lambda_plus - 0.0121) <= 0.001 &&
         std::abs(r.params.lambda_minus + 0.176) <= 0.03;
}

const double kUkRates[4] = {0.028, 0.0092, 0.0090, 0.0074};
std::vector<EpisodeBounds> uk_bounds(Eigen::Index n) { return {{0, 19}, {19, 43}, {43, 55}, {55, n}}; }

int uk_matches(const SeriesSegment& s) {
  int ok = 0;
  const auto fits = fit_episodes(s, uk_bounds(s.size()));
  for (std::size_t k = 0; k < 4; ++k) {
    ok += fits[k].fit && std::abs(fits[k].fit->params.lambda_plus - kUkRates[k]) <= 0.002;
  }
  return ok;
}

Verdict real_data(const std::string& finland, const std::string& uk) {
  std::string detail;
  bool pass = true;
  if (!finland.empty() || !uk.empty()) {
    CsvSchema schema;
    schema.integer_unit = PeriodUnit::quarter;
    if (!finland.empty()) {
      const IngestedSeries s = ingest_file(finland, schema);
      const FitResult r = fit_episode(s.segment.slice(0, 43));
      const double sat = saturation(s.segment, 23, 41, 42, 0.02, 0);
      const bool ok = finland_fit_ok(r) && sat == 1.0;
      pass = pass && ok;
      detail += fmt("Finland f=%.3f l+=%.4f l-=%.3f saturation %.0f%% [%s]; ", r.params.f,
                    r.params.lambda_plus, r.params.lambda_minus, 100 * sat, ok ? "ok" : "off");
    }
    if (!uk.empty()) {
      const IngestedSeries s = ingest_file(uk, schema);
      const int m = s.segment.size() > 56 ? uk_matches(s.segment) : 0;
      pass = pass && m == 4;
      detail += fmt("UK %d/4 episode rates within 0.002; ", m);
    }
    return {pass, "data: " + detail};
  }

  // Synthetic stand-ins with the reference parameter sets.
  const ResponseParams fin1{0.768, 0.0121, -0.176, 100, 0}, fin2{0.925, 0.0106, -0.143, 100, 0};
  const std::vector<Episode> uk_eps{{{0.53, 0.028, -0.049, 100, 0}, 19},
                                    {{0.98, 0.0092, -0.151, 100, 0}, 24},
                                    {{0.96, 0.0090, -0.154, 100, 0}, 12},
                                    {{0.98, 0.0074, -0.168, 100, 0}, 17}};
  // The surrogate's break has no level jump, so its horizon is taken from the
  // noiseless curve rather than the reference quarter.
  const SeriesSegment clean = generate_piecewise({{fin1, 42}, {fin2, 30}}, NoiseSpec{0.0, 0});
  long fin_target = clean.size();
  for (Eigen::Index t = 42; t < clean.size(); ++t) {
    const double x = clean.values[t];
    if (std::abs(x - evaluate(fin1, double(t))) / x > 0.02) {
      fin_target = long(t);
      break;
    }
  }
  int fin_ok = 0, uk_ok = 0;
  for (int s = 0; s < kSeeds; ++s) {
    const NoiseSpec noise{0.005, std::uint64_t(s)};
    const SeriesSegment f = generate_piecewise({{fin1, 42}, {fin2, 30}}, noise);
    fin_ok += finland_fit_ok(fit_episode(f.slice(0, 43))) &&
              saturation(f, 23, 41, fin_target, 0.02, std::uint64_t(s)) == 1.0;
    uk_ok += uk_matches(generate_piecewise(uk_eps, noise)) == 4;
  }
  return {fin_ok >= 18 && uk_ok >= 18,
          fmt("no data supplied; surrogates: Finland %d/20 (horizon %ld), UK %d/20 seeds", fin_ok,
              fin_target, uk_ok)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism_and_io() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "recovery_acceptance";
  fs::create_directories(dir);
  auto call = [](std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return std::make_pair(code, out.str());
  };

  const std::string one = (dir / "one.csv").string();
  const std::string two = (dir / "two.csv").string();
  call({"synth", "--seed", "5", "--out", one});
  call({"synth", "--seed", "5", "--shock-at", "40", "--f2", "0.375", "--n", "120", "--out", two});

  const std::vector<std::vector<std::string>> commands{
      {"synth", "--seed", "5"},
      {"fit", one, "--restarts", "4", "--seed", "2"},
      {"detect", two, "--seed", "1"},
      {"segment", two, "--json"},
      {"simulate", "--beta", "0.01", "--T", "20", "--every", "50"},
      {"policy", "optimal", "--T", "50"},
      {"policy", "envelope", "--grid", "100", "--json"}};
  bool identical = true;
  std::vector<std::string> outputs;
  for (const auto& c : commands) {
    const auto a = call(c), b = call(c);
    identical = identical && a.first == 0 && a == b;
    outputs.push_back(a.second);
  }

  // Round trip: ingest, emit, ingest again.
  const IngestedSeries s1 = ingest_file(two);
  std::ostringstream emitted;
  write_series(emitted, s1);
  std::istringstream back(emitted.str());
  const IngestedSeries s2 = ingest(back);
  const bool lossless = s1.original == s2.original && emitted.str() == slurp(two);

  // Every fit row: srm = srs / n and rsrm = rsrs / n up to the printed precision.
  int rows = 0;
  bool ratios = true;
  auto check_rows = [&](const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> header;
    for (std::string line; std::getline(in, line);) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      for (std::string c; std::getline(ls, c, '\t');) cells.push_back(c);
      if (!cells.empty() && cells[0] == "first") {
        header = cells;
        continue;
      }
      if (header.empty() || cells.size() != header.size() || cells.empty()) {
        header.clear();
        continue;
      }
      if (cells[5].empty()) continue;
      const double srs = std::stod(cells[5]), srm = std::stod(cells[6]);
      const double rsrs = std::stod(cells[7]), rsrm = std::stod(cells[8]);
      const double n = std::stod(cells[9]);
      auto close = [](double a, double b) { return std::abs(a - b) <= 1e-7 * std::max(std::abs(a), 1e-300); };
      ratios = ratios && close(srm, srs / n) && close(rsrm, rsrs / n);
      ++rows;
    }
  };
  check_rows(outputs[1]);
  check_rows(call({"segment", two}).second);
  check_rows(outputs[5]);

  return {identical && lossless && ratios && rows >= 3,
          fmt("byte-identical reruns: %s; round trip lossless: %s; %d fit rows with consistent means: %s",
              identical ? "yes" : "no", lossless ? "yes" : "no", rows, ratios ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string finland, uk;
  app.add_option("--finland", finland, "Finland quarterly real GDP CSV (period,value)");
  app.add_option("--uk", uk, "UK quarterly real GDP CSV (period,value)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"parameter recovery", parameter_recovery},
      {"horizon jump", horizon_jump},
      {"shock detection", shock_detection},
      {"eigen correctness", eigen_correctness},
      {"closed form vs integrator", closed_form_vs_integrator},
      {"transfer conservation", transfer_conservation},
      {"inequality formula", inequality_formula},
      {"policy ordering", policy_ordering},
      {"effective re-fits", effective_refits},
      {"policy classifier", classifier},
      {"real data", [&] { return real_data(finland, uk); }},
      {"determinism and I/O", determinism_and_io}};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass && !v.skipped;
    std::printf("criterion %2zu %-26s %s  %s\n", i + 1, criteria[i].first.c_str(),
                v.skipped ? "SKIP" : (v.pass ? "PASS" : "FAIL"), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
