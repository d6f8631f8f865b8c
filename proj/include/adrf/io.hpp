#pragma once

#include "adrf/adrf_estimator.hpp"
#include "adrf/inference.hpp"
#include "adrf/simlab.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace adrf {

using Json = nlohmann::ordered_json;

//! Numeric CSV with a mandatory header row.
struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  //! @throws Error(MalformedInput) naming the column if it is absent.
  Index column_index(const std::string& name) const;
  bool has_column(const std::string& name) const;
  Vector column(const std::string& name) const;
};

//! @throws Error(MalformedInput) with the offending row number.
CsvTable read_csv(const std::string& path);

//! Columns of equal length; values written in shortest round-trip form.
void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<Vector>& columns);

//! Shortest decimal string that parses back to the same double.
std::string format_double(double value);

//! Columns s, y and x1..xr (any order).
ObservedSample sample_from_table(const CsvTable& table, const ErrorModel& error);

//! Columns s1, s2 of replicate measurements.
Matrix replicate_pairs_from_table(const CsvTable& table);

Json to_json(const ErrorModel& error);
ErrorModel error_model_from_json(const Json& j);
Json to_json(const SmoothingParams& params);
Json to_json(const EstimatorOptions& options);
Json to_json(const MonteCarloReport& report);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

} // namespace adrf
