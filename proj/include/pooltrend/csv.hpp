#pragma once

#include "pooltrend/domain.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace pooltrend {

// Parse failure with 1-based line number, formatted as "path:line: message".
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, int line, const std::string& message)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// shortest round-trip decimal representation
std::string fmt_double(double v);

// ISO-8601 date (YYYY-MM-DD) to civil day serial (days since 1970-01-01)
int parse_iso_date(const std::string& s);
std::string format_iso_date(int day_serial);

// header: site,date,result
std::vector<IndividualRecord> read_records_csv(const std::string& path);
void write_records_csv(const std::string& path, const std::vector<IndividualRecord>& records);

// header: time,pool_size,result (rows grouped by nondecreasing time)
PooledObservations read_pooled_general_csv(const std::string& path);
void write_pooled_general_csv(const std::string& path, const PooledObservations& data);

// header: time,k,m,y
PooledObservations read_pooled_ideal_csv(const std::string& path);
void write_pooled_ideal_csv(const std::string& path, const PooledObservations& data);

// header: time,k,m_star,y1,m_rem,y2
PooledObservations read_pooled_efficient_csv(const std::string& path);
void write_pooled_efficient_csv(const std::string& path, const PooledObservations& data);

// individual counts reuse the ideal header with m fixed at 1
IndividualObservations read_individual_csv(const std::string& path);
void write_individual_csv(const std::string& path, const IndividualObservations& data);

// peeks at the header line to identify one of the formats above
enum class CsvKind { Records, General, Ideal, Efficient };
CsvKind sniff_csv(const std::string& path);

}  // namespace pooltrend
