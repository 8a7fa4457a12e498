#include "pooltrend/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pooltrend {

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

constexpr int days_in_month(int y, int m) {
  constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) return 29;
  return lengths[m - 1];
}

// Howard Hinnant's civil calendar algorithm
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int yr = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = yr + (m <= 2);
}

struct LineReader {
  std::ifstream in;
  std::string path;
  int line_no = 0;

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) throw std::runtime_error("cannot open " + p);
  }

  bool next(std::string& out) {
    if (!std::getline(in, out)) return false;
    ++line_no;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw CsvError(path, line_no, msg); }
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void expect_header(LineReader& rd, const std::string& want) {
  std::string line;
  if (!rd.next(line)) rd.fail("missing header; expected '" + want + "'");
  if (line != want) rd.fail("unknown header '" + line + "'; expected '" + want + "'");
}

double parse_double_field(LineReader& rd, const std::string& field, const char* name) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    rd.fail(std::string("non-numeric ") + name + " field '" + field + "'");
  return v;
}

int parse_int_field(LineReader& rd, const std::string& field, const char* name) {
  int v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    rd.fail(std::string("non-numeric ") + name + " field '" + field + "'");
  return v;
}

std::vector<std::string> fields_exact(LineReader& rd, const std::string& line, std::size_t n) {
  auto fields = split_fields(line);
  if (fields.size() != n)
    rd.fail("expected " + std::to_string(n) + " fields, found " + std::to_string(fields.size()));
  return fields;
}

// Shared scaffolding for the grid-indexed formats: collects per-row times,
// enforces nondecreasing order, and builds the grid from the unique times.
class TimeCollector {
 public:
  // returns true when the row starts a new time
  bool add(LineReader& rd, double t) {
    if (!times_.empty()) {
      if (t == times_.back()) return false;
      if (t < times_.back()) rd.fail("times must be nondecreasing");
    }
    times_.push_back(t);
    return true;
  }
  TimeGrid grid() const { return TimeGrid::from_times(times_); }

 private:
  std::vector<double> times_;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

}  // namespace

int parse_iso_date(const std::string& s) {
  auto bad = [&s]() -> int {
    throw std::invalid_argument("invalid ISO-8601 date '" + s + "' (expected YYYY-MM-DD)");
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return bad();
  auto num = [&](int from, int len, int& out) {
    auto [ptr, ec] = std::from_chars(s.data() + from, s.data() + from + len, out);
    return ec == std::errc() && ptr == s.data() + from + len;
  };
  int y, m, d;
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return bad();
  if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return bad();
  return days_from_civil(y, m, d);
}

std::string format_iso_date(int day_serial) {
  int y, m, d;
  civil_from_days(day_serial, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::vector<IndividualRecord> read_records_csv(const std::string& path) {
  LineReader rd(path);
  expect_header(rd, "site,date,result");
  std::vector<IndividualRecord> out;
  std::string line;
  while (rd.next(line)) {
    if (line.empty()) continue;
    auto f = fields_exact(rd, line, 3);
    IndividualRecord rec;
    rec.site = f[0];
    try {
      rec.day = parse_iso_date(f[1]);
    } catch (const std::invalid_argument& e) {
      rd.fail(e.what());
    }
    rec.result = parse_int_field(rd, f[2], "result");
    if (rec.result != 0 && rec.result != 1) rd.fail("result must be 0 or 1");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_records_csv(const std::string& path, const std::vector<IndividualRecord>& records) {
  auto out = open_out(path);
  out << "site,date,result\n";
  for (const auto& r : records)
    out << r.site << "," << format_iso_date(r.day) << "," << r.result << "\n";
}

PooledObservations read_pooled_general_csv(const std::string& path) {
  LineReader rd(path);
  expect_header(rd, "time,pool_size,result");
  TimeCollector times;
  GeneralLayout lay;
  std::string line;
  while (rd.next(line)) {
    if (line.empty()) continue;
    auto f = fields_exact(rd, line, 3);
    double t = parse_double_field(rd, f[0], "time");
    Pool p;
    p.size = parse_int_field(rd, f[1], "pool_size");
    p.result = parse_int_field(rd, f[2], "result");
    if (times.add(rd, t)) lay.pools.emplace_back();
    lay.pools.back().push_back(p);
  }
  return PooledObservations::make(times.grid(), std::move(lay));
}

void write_pooled_general_csv(const std::string& path, const PooledObservations& data) {
  auto lay = expand_to_general(data);
  auto out = open_out(path);
  out << "time,pool_size,result\n";
  for (std::size_t i = 0; i < lay.pools.size(); ++i)
    for (const auto& p : lay.pools[i])
      out << fmt_double(data.grid.times[i]) << "," << p.size << "," << p.result << "\n";
}

PooledObservations read_pooled_ideal_csv(const std::string& path) {
  LineReader rd(path);
  expect_header(rd, "time,k,m,y");
  TimeCollector times;
  IdealLayout lay;
  std::string line;
  while (rd.next(line)) {
    if (line.empty()) continue;
    auto f = fields_exact(rd, line, 4);
    double t = parse_double_field(rd, f[0], "time");
    if (!times.add(rd, t)) rd.fail("duplicate time");
    IdealTime row;
    row.k = parse_int_field(rd, f[1], "k");
    row.m = parse_int_field(rd, f[2], "m");
    row.y = parse_int_field(rd, f[3], "y");
    lay.rows.push_back(row);
  }
  return PooledObservations::make(times.grid(), std::move(lay));
}

void write_pooled_ideal_csv(const std::string& path, const PooledObservations& data) {
  const auto* lay = std::get_if<IdealLayout>(&data.layout);
  if (!lay) throw std::invalid_argument("write_pooled_ideal_csv: dataset is not in ideal layout");
  auto out = open_out(path);
  out << "time,k,m,y\n";
  for (std::size_t i = 0; i < lay->rows.size(); ++i) {
    const auto& r = lay->rows[i];
    out << fmt_double(data.grid.times[i]) << "," << r.k << "," << r.m << "," << r.y << "\n";
  }
}

PooledObservations read_pooled_efficient_csv(const std::string& path) {
  LineReader rd(path);
  expect_header(rd, "time,k,m_star,y1,m_rem,y2");
  TimeCollector times;
  EfficientGeneralLayout lay;
  std::string line;
  while (rd.next(line)) {
    if (line.empty()) continue;
    auto f = fields_exact(rd, line, 6);
    double t = parse_double_field(rd, f[0], "time");
    if (!times.add(rd, t)) rd.fail("duplicate time");
    EfficientTime row;
    row.k = parse_int_field(rd, f[1], "k");
    row.m_star = parse_int_field(rd, f[2], "m_star");
    row.y1 = parse_int_field(rd, f[3], "y1");
    row.m_rem = parse_int_field(rd, f[4], "m_rem");
    row.y2 = parse_int_field(rd, f[5], "y2");
    lay.rows.push_back(row);
  }
  return PooledObservations::make(times.grid(), std::move(lay));
}

void write_pooled_efficient_csv(const std::string& path, const PooledObservations& data) {
  const auto* lay = std::get_if<EfficientGeneralLayout>(&data.layout);
  if (!lay)
    throw std::invalid_argument(
        "write_pooled_efficient_csv: dataset is not in efficient-general layout");
  auto out = open_out(path);
  out << "time,k,m_star,y1,m_rem,y2\n";
  for (std::size_t i = 0; i < lay->rows.size(); ++i) {
    const auto& r = lay->rows[i];
    out << fmt_double(data.grid.times[i]) << "," << r.k << "," << r.m_star << "," << r.y1 << ","
        << r.m_rem << "," << r.y2 << "\n";
  }
}

IndividualObservations read_individual_csv(const std::string& path) {
  LineReader rd(path);
  expect_header(rd, "time,k,m,y");
  TimeCollector times;
  IndividualObservations out;
  std::string line;
  while (rd.next(line)) {
    if (line.empty()) continue;
    auto f = fields_exact(rd, line, 4);
    double t = parse_double_field(rd, f[0], "time");
    if (!times.add(rd, t)) rd.fail("duplicate time");
    IndividualTime row;
    row.k = parse_int_field(rd, f[1], "k");
    int m = parse_int_field(rd, f[2], "m");
    if (m != 1) rd.fail("individual data requires m=1");
    row.y = parse_int_field(rd, f[3], "y");
    out.counts.push_back(row);
  }
  out.grid = times.grid();
  return out;
}

void write_individual_csv(const std::string& path, const IndividualObservations& data) {
  auto out = open_out(path);
  out << "time,k,m,y\n";
  for (std::size_t i = 0; i < data.counts.size(); ++i)
    out << fmt_double(data.grid.times[i]) << "," << data.counts[i].k << ",1,"
        << data.counts[i].y << "\n";
}

CsvKind sniff_csv(const std::string& path) {
  LineReader rd(path);
  std::string line;
  if (!rd.next(line)) rd.fail("empty file");
  if (line == "site,date,result") return CsvKind::Records;
  if (line == "time,pool_size,result") return CsvKind::General;
  if (line == "time,k,m,y") return CsvKind::Ideal;
  if (line == "time,k,m_star,y1,m_rem,y2") return CsvKind::Efficient;
  rd.fail("unknown header '" + line + "'");
}

}  // namespace pooltrend
