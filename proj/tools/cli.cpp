#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "recovery/errors.hpp"
#include "recovery/fitting.hpp"
#include "recovery/io.hpp"
#include "recovery/policy.hpp"
#include "recovery/shock_detection.hpp"
#include "recovery/synthetic.hpp"
#include "recovery/two_sector.hpp"

namespace recovery::cli {

namespace {

using nlohmann::ordered_json;

struct Global {
  std::string out_path;
  bool json{false};
  std::uint64_t seed{0};
};

// Everything one command produces, emitted at the end in one format.
struct Report {
  ordered_json metadata = ordered_json::object();
  std::vector<Table> tables;
  // Set when some part of the analysis failed but the rest is still worth printing.
  bool partial{false};
  // Series output is written as CSV so the other commands can read it back.
  std::optional<IngestedSeries> series;
};

ordered_json cell_json(const std::string& cell) {
  if (cell.empty()) return nullptr;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() + cell.size() && std::isfinite(v)) return v;
  return cell;
}

void emit(const Report& report, const Global& g, std::ostream& out) {
  if (report.series && !g.json) {
    write_series(out, *report.series);
    return;
  }
  if (g.json) {
    ordered_json doc;
    doc["metadata"] = report.metadata;
    doc["metadata"]["partial"] = report.partial;
    for (const Table& t : report.tables) {
      ordered_json rows = ordered_json::array();
      for (const auto& r : t.rows) {
        ordered_json obj = ordered_json::object();
        for (std::size_t c = 0; c < t.header.size() && c < r.size(); ++c) {
          obj[t.header[c]] = cell_json(r[c]);
        }
        rows.push_back(std::move(obj));
      }
      doc[t.name] = std::move(rows);
    }
    out << doc.dump(2) << '\n';
    return;
  }
  const bool named = report.tables.size() > 1;
  for (std::size_t i = 0; i < report.tables.size(); ++i) {
    if (i) out << '\n';
    if (named) out << "# " << report.tables[i].name << '\n';
    write_table(out, report.tables[i]);
  }
}

ordered_json base_metadata(const std::string& command, const std::vector<std::string>& args,
                           const Global& g) {
  ordered_json m;
  m["command"] = command;
  m["arguments"] = args;
  m["seed"] = g.seed;
  m["version"] = "0.1.0";
  return m;
}

struct SeriesInput {
  std::string path;
  std::string period_column{"period"};
  std::string value_column{"value"};
  bool quarterly{false};

  void attach(CLI::App* app) {
    app->add_option("file", path, "CSV file with a header row")->required();
    app->add_option("--period-column", period_column, "Name of the period column");
    app->add_option("--value-column", value_column, "Name of the value column");
    app->add_flag("--quarterly", quarterly, "Treat plain integer periods as quarters");
  }

  IngestedSeries load() const {
    CsvSchema schema;
    schema.period_column = period_column;
    schema.value_column = value_column;
    schema.integer_unit = quarterly ? PeriodUnit::quarter : PeriodUnit::year;
    return ingest_file(path, schema);
  }
};

// Local index of a period label, checked against the series range.
Eigen::Index locate(const IngestedSeries& s, const std::string& label) {
  PeriodUnit unit = s.unit;
  long period = 0;
  try {
    period = parse_period(label, unit);
  } catch (const std::invalid_argument&) {
    throw CLI::ValidationError("period", "unrecognised period '" + label + "'");
  }
  const long i = period - s.first_period;
  if (i < 0 || i >= static_cast<long>(s.segment.size())) {
    throw CLI::ValidationError("period", "period '" + label + "' is outside the series");
  }
  return i;
}

struct FitCmd {
  SeriesInput input;
  std::string from, to;
  bool free_w0{false};
  int restarts{1};

  Report run(const Global& g) const {
    const IngestedSeries s = input.load();
    Eigen::Index begin = 0, end = s.segment.size();
    if (!from.empty()) begin = locate(s, from);
    if (!to.empty()) end = locate(s, to) + 1;
    if (end <= begin) throw CLI::ValidationError("--to", "range is empty");

    SeriesSegment seg = s.segment.slice(begin, end);
    seg.values *= 100.0 / seg.values[0];
    FitOptions options;
    options.free_w0 = free_w0;
    options.seed = g.seed;
    const FitResult fit = fit_with_restarts(seg, restarts, options);

    Report r;
    Table t = fit_table();
    add_fit_row(t, fit, s.period_label(begin), s.period_label(end - 1));
    r.tables.push_back(std::move(t));
    r.metadata["input"] = input.path;
    r.metadata["original_first_value"] = s.original[begin];
    return r;
  }
};

struct DetectCmd {
  SeriesInput input;
  double p{0.02};
  std::string sweep;
  int min_support{3};
  int restarts{5};
  int t0_first{6};

  DetectionOptions options(const Global& g) const {
    DetectionOptions o;
    o.min_support = min_support;
    o.restarts = restarts;
    o.t0_first = t0_first;
    o.seed = g.seed;
    return o;
  }

  std::vector<double> tolerances() const {
    if (sweep.empty()) return {p};
    try {
      return parse_sweep(sweep);
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("--p-sweep", e.what());
    }
  }

  Report run(const Global& g) const {
    const IngestedSeries s = input.load();
    const auto reports = detect_shocks_sweep(s.segment, tolerances(), options(g));

    Report r;
    r.metadata["input"] = input.path;
    Table horizon{"horizon", {"t0", "t_pred"}, {}};
    if (reports.size() > 1) horizon.header.insert(horizon.header.begin(), "p");
    Table failed{"failed_fits", {"p", "t0"}, {}};
    for (const auto& rep : reports) {
      for (const auto& row : horizon_table(rep.curve).rows) {
        auto cells = row;
        if (reports.size() > 1) cells.insert(cells.begin(), format_number(rep.tolerance_p));
        horizon.rows.push_back(std::move(cells));
      }
      for (Eigen::Index t0 : rep.curve.failed_t0) {
        failed.rows.push_back({format_number(rep.tolerance_p), std::to_string(t0)});
      }
    }
    Table shocks = shock_table(reports);
    shocks.header.push_back("period");
    for (auto& row : shocks.rows) row.push_back(s.period_label(std::stol(row[1])));

    r.tables.push_back(std::move(horizon));
    r.tables.push_back(std::move(shocks));
    if (!failed.rows.empty()) r.tables.push_back(std::move(failed));
    return r;
  }
};

struct SegmentCmd {
  DetectCmd detect;

  Report run(const Global& g) const {
    const IngestedSeries s = detect.input.load();
    FitOptions fo;
    fo.seed = g.seed;
    const Segmentation seg = segment_and_fit(s.segment, detect.p, detect.options(g), fo);

    Report r;
    r.metadata["input"] = detect.input.path;
    r.metadata["p"] = detect.p;
    Table fits = fit_table();
    for (const EpisodeFit& e : seg.episodes) {
      const auto first = s.period_label(e.bounds.begin);
      const auto last = s.period_label(e.bounds.end - 1);
      if (e.fit) {
        add_fit_row(fits, *e.fit, first, last);
      } else {
        add_unfitted_row(fits, first, last, e.error);
        if (e.segment.size() >= 4) r.partial = true;
      }
    }
    Table shocks = shock_table({seg.report});
    r.tables.push_back(std::move(fits));
    r.tables.push_back(std::move(shocks));
    return r;
  }
};

struct SynthCmd {
  double f{0.75}, lp{0.0125}, lm{-0.169}, w0{100}, nu{0.005};
  long n{200};
  std::optional<long> shock_at;
  std::optional<double> f2, lp2, lm2;

  Report run(const Global& g) const {
    if (n < 1) throw CLI::ValidationError("--n", "must be positive");
    const ResponseParams first{f, lp, lm, w0, 0.0};
    const NoiseSpec noise{nu, g.seed};
    SeriesSegment seg;
    if (shock_at) {
      if (*shock_at <= 0 || *shock_at >= n) {
        throw CLI::ValidationError("--shock-at", "must lie strictly inside the series");
      }
      const ResponseParams second{f2.value_or(f), lp2.value_or(lp), lm2.value_or(lm), w0, 0.0};
      seg = generate_piecewise({{first, *shock_at}, {second, n - *shock_at}}, noise);
    } else {
      seg = generate(first, noise, n);
    }

    Report r;
    Table t{"series", {"period", "value"}, {}};
    for (Eigen::Index i = 0; i < seg.size(); ++i) {
      t.rows.push_back({std::to_string(i), format_exact(seg.values[i])});
    }
    r.tables.push_back(std::move(t));
    r.series = from_segment(seg);
    return r;
  }
};

struct SimulateCmd {
  double a1{0.02}, a2{-0.05}, beta{0}, w1{0.1}, w2{0.9}, T{200}, dt{0.01};
  int every{1};

  Report run(const Global&) const {
    if (every < 1) throw CLI::ValidationError("--every", "must be positive");
    const Trajectory traj = integrate(beta, a1, a2, SectorState{w1, w2, 0.0}, T, dt);
    Report r;
    Table t{"trajectory", {"t", "w1", "w2", "W", "delta"}, {}};
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (i % static_cast<std::size_t>(every) != 0 && i + 1 != traj.size()) continue;
      const SectorState& s = traj[i];
      t.rows.push_back({format_number(s.t), format_number(s.w1), format_number(s.w2),
                        format_number(s.total()), format_number(inequality(s))});
    }
    r.tables.push_back(std::move(t));
    return r;
  }
};

struct PolicyCmd {
  PolicySetup setup;
  std::string mode;
  std::optional<double> beta;
  int grid{1000};
  double lookahead{1.0};

  Report run(const Global& g) const {
    PolicyOutcome outcome;
    std::optional<Eigen::VectorXd> envelope;
    if (mode == "static") {
      const double b = beta.value_or(setup.beta_min);
      outcome = static_sweep(setup, {b}).front();
    } else if (mode == "envelope") {
      if (grid < 1) throw CLI::ValidationError("--grid", "must be positive");
      EnvelopeResult env = envelope_policy(setup, log_grid(setup.beta_min, setup.beta_max, grid));
      envelope = env.envelope_W;
      outcome = std::move(env.attained);
    } else {
      outcome = optimal_policy(setup, lookahead);
    }

    Report r;
    r.metadata["policy"] = mode;
    r.metadata["alpha1"] = setup.alpha1;
    r.metadata["alpha2"] = setup.alpha2;
    r.metadata["w1"] = setup.state0.w1;
    r.metadata["w2"] = setup.state0.w2;
    r.metadata["T"] = setup.T;
    r.metadata["dt"] = setup.dt;
    r.metadata["beta_min"] = setup.beta_min;
    r.metadata["beta_max"] = setup.beta_max;
    if (mode == "optimal") r.metadata["lookahead"] = lookahead;

    Table traj{"trajectory", {"t", "beta", "w1", "w2", "W", "delta"}, {}};
    if (envelope) traj.header.push_back("envelope_W");
    double next = 0;
    for (std::size_t i = 0; i < outcome.trajectory.size(); ++i) {
      const SectorState& s = outcome.trajectory[i];
      if (s.t + 1e-6 < next) continue;
      next += 1.0;
      const auto k = static_cast<Eigen::Index>(i);
      std::vector<std::string> row{format_number(s.t), format_number(outcome.schedule.at(s.t)),
                                   format_number(s.w1), format_number(s.w2),
                                   format_number(outcome.W[k]), format_number(outcome.delta[k])};
      if (envelope) row.push_back(format_number((*envelope)[k]));
      traj.rows.push_back(std::move(row));
    }

    // Log-growth over the final tenth of the horizon.
    const Eigen::Index last = outcome.W.size() - 1;
    Eigen::Index ref = last;
    while (ref > 0 && outcome.trajectory[static_cast<std::size_t>(ref)].t > 0.9 * setup.T) --ref;
    const double span = outcome.trajectory.back().t - outcome.trajectory[static_cast<std::size_t>(ref)].t;
    const double growth = span > 0 ? std::log(outcome.W[last] / outcome.W[ref]) / span : 0.0;
    const SectorParams floor_params{setup.alpha1, setup.alpha2, setup.beta_min};
    const double window = relaxation_time(floor_params);
    const PolicyKind kind = classify_policy(classification_window(outcome, window));

    Table summary{"summary",
                  {"policy", "final_W", "final_growth", "lambda_plus_beta_min", "final_delta", "kind"},
                  {{mode, format_number(outcome.W[last]), format_number(growth),
                    format_number(eigen(floor_params).lambda_plus),
                    format_number(outcome.delta[last]), to_string(kind)}}};

    Table fits = fit_table();
    FitOptions fo;
    fo.seed = g.seed;
    try {
      add_fit_row(fits, effective_fit(outcome, fo), "0", format_number(setup.T));
    } catch (const NumericalError& e) {
      add_unfitted_row(fits, "0", format_number(setup.T), e.what());
      r.partial = true;
    }
    fits.name = "effective_fit";

    r.tables.push_back(std::move(summary));
    r.tables.push_back(std::move(fits));
    r.tables.push_back(std::move(traj));
    return r;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recession and recovery analysis: response fits, shock detection, two-sector policies",
               "recovery"};
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--out", g.out_path, "Write output to this file instead of stdout");
  app.add_flag("--json", g.json, "Emit one JSON object instead of tables");
  app.add_option("--seed", g.seed, "Seed for anything stochastic");

  FitCmd fit;
  auto* fit_app = app.add_subcommand("fit", "Fit the response function to a series");
  fit.input.attach(fit_app);
  fit_app->add_option("--from", fit.from, "First period of the fit");
  fit_app->add_option("--to", fit.to, "Last period of the fit");
  fit_app->add_flag("--free-w0", fit.free_w0, "Estimate w0 instead of pinning it to the first value");
  fit_app->add_option("--restarts", fit.restarts, "Number of fit starts")->check(CLI::PositiveNumber);

  auto attach_detect = [](CLI::App* sub, DetectCmd& d) {
    d.input.attach(sub);
    sub->add_option("--p", d.p, "Relative tolerance")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--min-support", d.min_support, "Consecutive t0 values per plateau")
        ->check(CLI::Range(2, 1000000));
    sub->add_option("--restarts", d.restarts, "Fit starts per in-sample size")
        ->check(CLI::PositiveNumber);
    sub->add_option("--t0-first", d.t0_first, "Smallest in-sample size")->check(CLI::Range(4, 1000000));
  };
  DetectCmd detect;
  auto* detect_app = app.add_subcommand("detect", "Prediction horizons and shocks");
  attach_detect(detect_app, detect);
  detect_app->add_option("--p-sweep", detect.sweep, "Tolerance sweep lo:hi:step");

  SegmentCmd segment;
  auto* segment_app = app.add_subcommand("segment", "Detect shocks and fit each episode");
  attach_detect(segment_app, segment.detect);

  SynthCmd synth;
  auto* synth_app = app.add_subcommand("synth", "Generate a synthetic series");
  synth_app->add_option("--f", synth.f, "Growing fraction")->check(CLI::Range(0.0, 1.0));
  synth_app->add_option("--lp", synth.lp, "Growth rate lambda+");
  synth_app->add_option("--lm", synth.lm, "Decline rate lambda-");
  synth_app->add_option("--w0", synth.w0, "Initial level")->check(CLI::PositiveNumber);
  synth_app->add_option("--nu", synth.nu, "Noise amplitude")->check(CLI::NonNegativeNumber);
  synth_app->add_option("--n", synth.n, "Number of observations");
  synth_app->add_option("--shock-at", synth.shock_at, "Index of a trend break");
  synth_app->add_option("--f2", synth.f2, "Growing fraction after the break")->check(CLI::Range(0.0, 1.0));
  synth_app->add_option("--lp2", synth.lp2, "lambda+ after the break");
  synth_app->add_option("--lm2", synth.lm2, "lambda- after the break");

  SimulateCmd sim;
  auto* sim_app = app.add_subcommand("simulate", "Integrate the two-sector model at constant beta");
  sim_app->add_option("--a1", sim.a1, "Rate of the growing sector");
  sim_app->add_option("--a2", sim.a2, "Rate of the shrinking sector");
  sim_app->add_option("--beta", sim.beta, "Transfer rate")->check(CLI::NonNegativeNumber);
  sim_app->add_option("--w1", sim.w1, "Initial growing sector");
  sim_app->add_option("--w2", sim.w2, "Initial shrinking sector");
  sim_app->add_option("--T", sim.T, "Horizon")->check(CLI::PositiveNumber);
  sim_app->add_option("--dt", sim.dt, "Step")->check(CLI::PositiveNumber);
  sim_app->add_option("--every", sim.every, "Print every k-th step");

  PolicyCmd policy;
  auto* policy_app = app.add_subcommand("policy", "Transfer-rate policies");
  policy_app->require_subcommand(1);
  policy_app->add_option("--a1", policy.setup.alpha1, "Rate of the growing sector");
  policy_app->add_option("--a2", policy.setup.alpha2, "Rate of the shrinking sector");
  policy_app->add_option("--w1", policy.setup.state0.w1, "Initial growing sector");
  policy_app->add_option("--w2", policy.setup.state0.w2, "Initial shrinking sector");
  policy_app->add_option("--T", policy.setup.T, "Horizon")->check(CLI::PositiveNumber);
  policy_app->add_option("--dt", policy.setup.dt, "Step")->check(CLI::PositiveNumber);
  policy_app->add_option("--beta-min", policy.setup.beta_min, "Transfer-rate floor");
  policy_app->add_option("--beta-max", policy.setup.beta_max, "Transfer-rate ceiling");
  auto* static_app = policy_app->add_subcommand("static", "Constant transfer rate");
  static_app->add_option("--beta", policy.beta, "Transfer rate (default: the floor)");
  auto* envelope_app = policy_app->add_subcommand("envelope", "Follow the best constant-rate scenario");
  envelope_app->add_option("--grid", policy.grid, "Number of log-spaced rates");
  auto* optimal_app = policy_app->add_subcommand("optimal", "Greedy lookahead control");
  optimal_app->add_option("--lookahead", policy.lookahead, "Lookahead in periods")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, x;
    const int code = app.exit(e, o, x);
    out << o.str();
    err << x.str();
    return code == 0 ? ok : usage;
  }

  const auto* cmd = app.get_subcommands().front();
  try {
    Report report;
    if (cmd == fit_app) {
      report = fit.run(g);
    } else if (cmd == detect_app) {
      report = detect.run(g);
    } else if (cmd == segment_app) {
      report = segment.run(g);
    } else if (cmd == synth_app) {
      report = synth.run(g);
    } else if (cmd == sim_app) {
      report = sim.run(g);
    } else {
      policy.mode = policy_app->get_subcommands().front()->get_name();
      report = policy.run(g);
    }
    ordered_json meta = base_metadata(cmd->get_name(), args, g);
    meta.update(report.metadata);
    report.metadata = std::move(meta);

    std::ostringstream buffer;
    emit(report, g, buffer);
    if (g.out_path.empty()) {
      out << buffer.str();
    } else {
      std::ofstream file(g.out_path, std::ios::binary);
      if (!file) {
        err << "error: cannot write '" << g.out_path << "'\n";
        return usage;
      }
      file << buffer.str();
    }
    if (report.partial) {
      err << "warning: some results could not be computed and are flagged in the output\n";
      return numerical;
    }
    return ok;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return data;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return numerical;
  }
}

}  // namespace recovery::cli
