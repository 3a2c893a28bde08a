#include "recovery/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "recovery/errors.hpp"

namespace recovery {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Splits one CSV record; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_long(const std::string& s, long& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && begin != end;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(1, name, "column not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

long parse_period(const std::string& text, PeriodUnit& unit) {
  long year = 0;
  if (parse_long(text, year)) return year;

  // Quarterly forms: 1990Q2, 1990-Q2, 1990 Q2, 1990q2.
  const auto q = text.find_first_of("Qq");
  if (q != std::string::npos && q + 2 == text.size()) {
    std::string head = trim(text.substr(0, q));
    if (!head.empty() && head.back() == '-') head.pop_back();
    const char digit = text[q + 1];
    if (parse_long(head, year) && digit >= '1' && digit <= '4') {
      unit = PeriodUnit::quarter;
      return 4 * year + (digit - '1');
    }
  }
  throw std::invalid_argument("unrecognised period '" + text + "'");
}

std::string format_period(long index, PeriodUnit unit) {
  if (unit == PeriodUnit::year) return std::to_string(index);
  // Floor division keeps negative years consistent.
  const long year = index >= 0 ? index / 4 : -((-index + 3) / 4);
  return std::to_string(year) + "Q" + std::to_string(index - 4 * year + 1);
}

std::string IngestedSeries::period_label(Eigen::Index i) const {
  const long index = first_period + static_cast<long>(i);
  return integer_periods ? std::to_string(index) : format_period(index, unit);
}

IngestedSeries ingest(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) header = split_record(line);
  }
  if (header.empty()) throw ParseError(row, schema.period_column, "missing header row");
  const std::size_t pcol = column_index(header, schema.period_column);
  const std::size_t vcol = column_index(header, schema.value_column);

  std::vector<long> periods;
  std::vector<double> values;
  bool integer_periods = true;
  PeriodUnit unit = schema.integer_unit;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_record(line);
    if (fields.size() <= std::max(pcol, vcol)) {
      throw ParseError(row, fields.size() <= pcol ? schema.period_column : schema.value_column,
                       "missing field");
    }

    PeriodUnit row_unit = schema.integer_unit;
    long period = 0;
    try {
      period = parse_period(fields[pcol], row_unit);
    } catch (const std::invalid_argument& e) {
      throw ParseError(row, schema.period_column, e.what());
    }
    const bool is_integer = fields[pcol].find_first_of("Qq") == std::string::npos;
    if (periods.empty()) {
      integer_periods = is_integer;
      unit = row_unit;
    } else if (is_integer != integer_periods) {
      throw ParseError(row, schema.period_column, "period format differs from earlier rows");
    }

    double value = 0;
    if (!parse_double(fields[vcol], value)) {
      throw ParseError(row, schema.value_column, "not a number: '" + fields[vcol] + "'");
    }
    if (!std::isfinite(value)) throw ParseError(row, schema.value_column, "value is not finite");
    if (value <= 0) {
      throw NonPositiveValue("non-positive value " + fields[vcol] + " for period " +
                             fields[pcol] + " (row " + std::to_string(row) + ")");
    }

    if (!periods.empty()) {
      const long expected = periods.back() + 1;
      if (period < expected) {
        throw ParseError(row, schema.period_column, "periods must be strictly increasing");
      }
      if (period > expected) {
        throw GapError(expected, integer_periods ? std::to_string(expected)
                                                 : format_period(expected, unit));
      }
    }
    periods.push_back(period);
    values.push_back(value);
  }
  if (values.empty()) throw DegenerateSegment("no observations in input");

  IngestedSeries out;
  out.original = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  out.first_period = periods.front();
  out.unit = unit;
  out.integer_periods = integer_periods;
  out.segment.values = out.original * (100.0 / out.original[0]);
  out.segment.start_index = 0;
  out.segment.period_unit = unit;
  out.segment.label = schema.label;
  return out;
}

IngestedSeries ingest_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  IngestedSeries out = ingest(in, schema);
  if (out.segment.label.empty()) out.segment.label = path;
  return out;
}

IngestedSeries from_segment(const SeriesSegment& segment) {
  IngestedSeries out;
  out.segment = segment;
  out.original = segment.values;
  out.first_period = segment.start_index;
  out.unit = segment.period_unit;
  out.integer_periods = true;
  return out;
}

void write_series(std::ostream& out, const IngestedSeries& series, const CsvSchema& schema) {
  out << schema.period_column << ',' << schema.value_column << '\n';
  for (Eigen::Index i = 0; i < series.original.size(); ++i) {
    out << series.period_label(i) << ',' << format_exact(series.original[i]) << '\n';
  }
}

std::string format_exact(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8g", x);
  return buf;
}

void write_table(std::ostream& out, const Table& table) {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

Table fit_table() {
  return {"fits",
          {"first", "last", "f", "exp_lambda_plus", "exp_lambda_minus", "srs", "srm", "rsrs", "rsrm",
           "n", "lambda_plus", "lambda_minus", "se_f", "se_lambda_plus", "se_lambda_minus", "w0",
           "converged"},
          {}};
}

void add_fit_row(Table& table, const FitResult& fit, const std::string& first,
                 const std::string& last) {
  const auto& p = fit.params;
  const auto& e = fit.std_errors;
  table.rows.push_back({first, last, format_number(100.0 * p.f),
                        format_number(std::exp(p.lambda_plus)),
                        format_number(std::exp(p.lambda_minus)), format_number(fit.srs),
                        format_number(fit.srm), format_number(fit.rsrs), format_number(fit.rsrm),
                        std::to_string(fit.n), format_number(p.lambda_plus),
                        format_number(p.lambda_minus), format_number(100.0 * e.f),
                        format_number(e.lambda_plus), format_number(e.lambda_minus),
                        format_number(p.w0), fit.converged ? "yes" : "no"});
}

void add_unfitted_row(Table& table, const std::string& first, const std::string& last,
                      const std::string& reason) {
  std::vector<std::string> row(table.header.size());
  row[0] = first;
  row[1] = last;
  row.back() = "no: " + reason;
  table.rows.push_back(std::move(row));
}

Table horizon_table(const HorizonCurve& curve) {
  Table t{"horizon", {"t0", "t_pred"}, {}};
  for (const auto& pt : curve.points) {
    t.rows.push_back({std::to_string(pt.t0), std::to_string(pt.t_pred)});
  }
  return t;
}

Table shock_table(const std::vector<ShockReport>& reports) {
  Table t{"shocks", {"p", "time", "support"}, {}};
  for (const auto& r : reports) {
    for (const auto& s : r.shocks) {
      t.rows.push_back({format_number(r.tolerance_p), std::to_string(s.time),
                        std::to_string(s.support)});
    }
  }
  return t;
}

std::vector<double> parse_sweep(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  double lo = 0, hi = 0, step = 0;
  if (b == std::string::npos || !parse_double(spec.substr(0, a), lo) ||
      !parse_double(spec.substr(a + 1, b - a - 1), hi) || !parse_double(spec.substr(b + 1), step)) {
    throw std::invalid_argument("sweep must look like lo:hi:step");
  }
  if (!(step > 0) || !(lo <= hi)) throw std::invalid_argument("sweep needs lo <= hi and step > 0");
  std::vector<double> out;
  // Index-based stepping avoids accumulated rounding; the end point is included.
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(lo + static_cast<double>(k) * step);
  return out;
}

}  // namespace recovery
