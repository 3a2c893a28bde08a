#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "recovery/fitting.hpp"
#include "recovery/shock_detection.hpp"

namespace recovery {

struct CsvSchema {
  std::string period_column{"period"};
  std::string value_column{"value"};
  /// Unit for plain integer periods; "YYYYQn" periods are always quarterly.
  PeriodUnit integer_unit{PeriodUnit::year};
  std::string label;
};

/// Period index: the year itself, or 4 * year + (quarter - 1).
long parse_period(const std::string& text, PeriodUnit& unit);
std::string format_period(long index, PeriodUnit unit);

/// A series as read from disk. `segment` is rescaled so its first value is
/// 100 and uses local indices 0, 1, ...; `original` keeps the file's scale.
struct IngestedSeries {
  SeriesSegment segment;
  Eigen::VectorXd original;
  long first_period{0};
  PeriodUnit unit{PeriodUnit::year};
  /// Whether periods were written as plain integers.
  bool integer_periods{true};

  std::string period_label(Eigen::Index i) const;
  double scale() const { return original.size() ? original[0] / 100.0 : 1.0; }
};

/// Reads a comma-separated file with a header row. Throws ParseError,
/// GapError or NonPositiveValue.
IngestedSeries ingest(std::istream& in, const CsvSchema& schema = {});
IngestedSeries ingest_file(const std::string& path, const CsvSchema& schema = {});

/// Wraps an in-memory segment (e.g. synthetic data) with integer periods.
IngestedSeries from_segment(const SeriesSegment& segment);

/// Writes the series in its original scale with round-trip precision.
void write_series(std::ostream& out, const IngestedSeries& series, const CsvSchema& schema = {});

/// Shortest decimal form that reads back to the same double.
std::string format_exact(double x);
/// Fixed-width significant-digit form used in tables.
std::string format_number(double x);

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Tab-delimited with a header line.
void write_table(std::ostream& out, const Table& table);

/// Row order: first, last, f (percent), e^lambda+, e^lambda-,
/// srs, srm, rsrs, rsrm, n, followed by the rates and their standard errors.
Table fit_table();
void add_fit_row(Table& table, const FitResult& fit, const std::string& first,
                 const std::string& last);
/// Row with the period labels filled and the numeric cells empty.
void add_unfitted_row(Table& table, const std::string& first, const std::string& last,
                      const std::string& reason);

Table horizon_table(const HorizonCurve& curve);
Table shock_table(const std::vector<ShockReport>& reports);

/// "lo:hi:step" with lo <= hi and step > 0; throws std::invalid_argument.
std::vector<double> parse_sweep(const std::string& spec);

}  // namespace recovery
