#include "adrf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace adrf {

namespace {

std::string
strip(const std::string& text)
{
  const auto first = text.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(" \t\r\"");
  return text.substr(first, last - first + 1);
}

std::vector<std::string>
split(const std::string& line)
{
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string item;
  while (std::getline(in, item, ',')) {
    out.push_back(strip(item));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

Json
vector_json(const Vector& v)
{
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) {
    out.push_back(v(i));
  }
  return out;
}

Vector
json_vector(const Json& j)
{
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

// NaN is not representable in JSON; emit null instead
Json
number(double v)
{
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

} // namespace

Index
CsvTable::column_index(const std::string& name) const
{
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) {
      return static_cast<Index>(k);
    }
  }
  throw Error(ErrorCode::MalformedInput, "missing column '" + name + "'");
}

bool
CsvTable::has_column(const std::string& name) const
{
  return std::find(header.begin(), header.end(), name) != header.end();
}

Vector
CsvTable::column(const std::string& name) const
{
  const auto k = static_cast<std::size_t>(column_index(name));
  Vector v(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v(static_cast<Index>(i)) = rows[i][k];
  }
  return v;
}

CsvTable
read_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MalformedInput, "cannot open " + path);
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::MalformedInput, path + " is empty");
  }
  table.header = split(line);
  for (const auto& name : table.header) {
    if (name.empty()) {
      throw Error(ErrorCode::MalformedInput, path + ": empty column name in header");
    }
  }
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (strip(line).empty()) {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::MalformedInput,
                  path + " row " + std::to_string(row) + ": expected " + std::to_string(table.header.size()) +
                    " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string& c = cells[k];
      const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), values[k]);
      if (ec != std::errc() || end != c.data() + c.size() || !std::isfinite(values[k])) {
        throw Error(ErrorCode::MalformedInput,
                    path + " row " + std::to_string(row) + ": column '" + table.header[k] +
                      "' is not a finite number: '" + c + "'");
      }
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

std::string
format_double(double value)
{
  if (std::isnan(value)) {
    return "nan";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void
write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<Vector>& columns)
{
  require(header.size() == columns.size(), "CSV header and column count differ");
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::MalformedInput, "cannot write " + path);
  }
  for (std::size_t k = 0; k < header.size(); ++k) {
    out << (k ? "," : "") << header[k];
  }
  out << '\n';
  const Index n = columns.empty() ? 0 : columns.front().size();
  for (Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      out << (k ? "," : "") << format_double(columns[k](i));
    }
    out << '\n';
  }
}

ObservedSample
sample_from_table(const CsvTable& table, const ErrorModel& error)
{
  ObservedSample sample;
  sample.s = table.column("s");
  sample.y = table.column("y");
  int r = 0;
  while (table.has_column("x" + std::to_string(r + 1))) {
    ++r;
  }
  if (r == 0) {
    throw Error(ErrorCode::MalformedInput, "missing column 'x1'");
  }
  sample.x.resize(sample.s.size(), r);
  for (int j = 0; j < r; ++j) {
    sample.x.col(j) = table.column("x" + std::to_string(j + 1));
  }
  sample.error = error;
  if (sample.size() < 2) {
    throw Error(ErrorCode::MalformedInput, "input needs at least two data rows");
  }
  return sample;
}

Matrix
replicate_pairs_from_table(const CsvTable& table)
{
  Matrix pairs(static_cast<Index>(table.rows.size()), 2);
  pairs.col(0) = table.column("s1");
  pairs.col(1) = table.column("s2");
  return pairs;
}

Json
to_json(const ErrorModel& error)
{
  Json j;
  j["kind"] = to_string(error.kind());
  j["variance"] = error.variance();
  if (error.kind() == ErrorKind::ReplicateEstimated) {
    j["ridge_floor"] = error.ridge_floor();
    j["floor_applied"] = error.floor_applied();
    j["cf_grid"] = vector_json(error.cf_grid());
    j["cf_values"] = vector_json(error.cf_values());
    j["pair_differences"] = vector_json(error.pair_differences());
  }
  return j;
}

ErrorModel
error_model_from_json(const Json& j)
{
  try {
    const ErrorKind kind = error_kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
      case ErrorKind::None:
        return ErrorModel::none();
      case ErrorKind::Laplace:
        return ErrorModel::laplace(j.at("variance").get<double>());
      case ErrorKind::Gaussian:
        return ErrorModel::gaussian(j.at("variance").get<double>());
      case ErrorKind::ReplicateEstimated:
        return ErrorModel::replicate_estimated(json_vector(j.at("cf_grid")),
                                               json_vector(j.at("cf_values")),
                                               json_vector(j.at("pair_differences")),
                                               j.at("ridge_floor").get<double>(),
                                               j.at("floor_applied").get<bool>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("error model descriptor: ") + e.what());
  }
  throw Error(ErrorCode::MalformedInput, "error model descriptor: unknown kind");
}

Json
to_json(const SmoothingParams& params)
{
  Json j;
  j["K"] = params.K;
  j["h0"] = params.h0;
  j["h"] = params.h;
  j["provenance"] = params.provenance == ParamsProvenance::TwoStep ? "two-step" : "manual";
  j["h_pi"] = number(params.h_pi);
  j["c_tilde"] = number(params.c_tilde);
  if (params.simex) {
    const SimexDiagnostics& d = *params.simex;
    Json s;
    s["h_star"] = d.h_star;
    s["h_star_star"] = d.h_star_star;
    s["h_hat_star"] = d.h_hat_star;
    s["h_hat_star_star"] = d.h_hat_star_star;
    s["linear_back"] = d.linear_back;
    s["extrapolation_bandwidth"] = d.extrapolation_bandwidth;
    s["extrapolation_degenerate"] = d.extrapolation_degenerate;
    s["h_hat"] = d.h_hat;
    s["h_grid"] = d.h_grid;
    Json cv1 = Json::array();
    Json cv2 = Json::array();
    for (std::size_t k = 0; k < d.h_grid.size(); ++k) {
      cv1.push_back(number(d.cv_star_mean[k]));
      cv2.push_back(number(d.cv_star_star_mean[k]));
    }
    s["cv_star_mean"] = cv1;
    s["cv_star_star_mean"] = cv2;
    j["simex"] = s;
  }
  return j;
}

Json
to_json(const EstimatorOptions& options)
{
  Json j;
  j["criterion"] = to_string(options.criterion.kind());
  j["basis"] = to_string(options.basis);
  j["spline_degree"] = options.spline_degree;
  j["regression_kernel"] =
    options.regression_kernel == RegressionKernel::GaussianDensity ? "gaussian-density" : "deconvolution";
  return j;
}

Json
to_json(const MonteCarloReport& report)
{
  const MonteCarloConfig& c = report.config;
  Json config;
  config["models"] = c.models;
  config["sizes"] = c.sizes;
  config["error_kind"] = to_string(c.error_kind);
  Json est = Json::array();
  for (auto e : c.estimators) {
    est.push_back(to_string(e));
  }
  config["estimators"] = est;
  config["reps"] = c.reps;
  config["seed"] = c.seed;
  config["grid_n"] = c.grid_n;
  config["options"] = to_json(c.options);
  config["simex_D"] = c.tune.simex.D;

  Json cells = Json::array();
  for (const auto& cell : report.cells) {
    Json j;
    j["model"] = cell.model;
    j["n"] = cell.n;
    j["estimator"] = to_string(cell.estimator);
    Json values = Json::array();
    for (double v : cell.ise) {
      values.push_back(number(v));
    }
    j["ise"] = values;
    j["q1"] = number(cell.q1);
    j["median"] = number(cell.median);
    j["q3"] = number(cell.q3);
    j["failure_rate"] = cell.failure_rate;
    Json failures = Json::array();
    for (std::size_t r = 0; r < cell.failures.size(); ++r) {
      if (!cell.failures[r].empty()) {
        failures.push_back({ { "rep", r }, { "error", cell.failures[r] } });
      }
    }
    j["failures"] = failures;
    cells.push_back(j);
  }
  Json j;
  j["config"] = config;
  j["cells"] = cells;
  return j;
}

void
write_json(const std::string& path, const Json& j)
{
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::MalformedInput, "cannot write " + path);
  }
  out << j.dump(2) << '\n';
}

Json
read_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MalformedInput, "cannot open " + path);
  }
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, path + ": " + e.what());
  }
}

} // namespace adrf
