#include "adrf/cli.hpp"
#include "adrf/io.hpp"
#include "adrf/simlab.hpp"
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace adrf;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
  int code;
  std::string err;
};

Outcome
run_cli(std::vector<std::string> args)
{
  std::ostringstream err, out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  const int code = cli::run(args);
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  return { code, err.str() };
}

std::string
slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t
line_count(const fs::path& p)
{
  const std::string text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

struct TempDir
{
  fs::path path;
  explicit TempDir(const std::string& name)
    : path(fs::temp_directory_path() / ("adrf_cli_" + name))
  {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

// Model-1 data set written as s, y, x1.
std::string
write_sample(const TempDir& dir, Index n, std::uint64_t seed, const std::string& name = "data.csv")
{
  const auto data = generate(SimModel(1), n, ErrorKind::Laplace, seed);
  const std::string path = dir / name;
  write_csv(path, { "s", "y", "x1" }, { data.sample.s, data.sample.y, data.sample.x.col(0) });
  return path;
}

std::string
fast_simex(const TempDir& dir)
{
  const std::string path = dir / "simex.cfg";
  std::ofstream(path) << "D = 3\nh_grid_n = 12\n";
  return path;
}

} // namespace

TEST_CASE("estimate writes a 201-point curve")
{
  TempDir dir("estimate");
  const auto input = write_sample(dir, 100, 1);
  const auto r = run_cli({ "estimate",
                           "--input",
                           input,
                           "--output-dir",
                           dir / "out",
                           "--error-kind",
                           "laplace",
                           "--error-ratio",
                           "0.2",
                           "--simex-config",
                           fast_simex(dir) });
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(line_count(dir.path / "out" / "curve.csv") == 202);
  const Json j = read_json(dir / "out/estimate.json");
  CHECK(j["command"] == "estimate");
  CHECK(j["seed"] == 1);
  CHECK(j["n"] == 100);
  CHECK(j["error_model"]["kind"] == "laplace");
  CHECK(j["params"]["provenance"] == "two-step");
  CHECK(j["params"]["K"].get<int>() >= 2);
  CHECK(j["simex_config"]["D"] == 3);
  CHECK(j.contains("schema_version"));
  const CsvTable curve = read_csv(dir / "out/curve.csv");
  CHECK(curve.header == std::vector<std::string>{ "t", "mu", "skipped" });
}

TEST_CASE("estimate with manual parameters and default SIMEX settings")
{
  TempDir dir("manual");
  const auto input = write_sample(dir, 120, 2);
  const auto r = run_cli({ "estimate", "--input", input, "--output-dir", dir / "out", "--error-kind", "gaussian",
                           "--error-variance", "0.2", "--K", "3", "--h0", "0.5", "--h", "0.4", "--grid-n", "31",
                           "--criterion", "el", "--basis", "bspline" });
  // B-spline basis of cubic degree needs K >= 4
  CHECK(r.code == 3);
  const auto ok = run_cli({ "estimate", "--input", input, "--output-dir", dir / "out", "--error-kind", "gaussian",
                            "--error-variance", "0.2", "--K", "4", "--h0", "0.5", "--h", "0.4", "--grid-n", "31",
                            "--criterion", "el", "--basis", "bspline" });
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  CHECK(line_count(dir.path / "out" / "curve.csv") == 32);
  const Json j = read_json(dir / "out/estimate.json");
  CHECK(j["params"]["provenance"] == "manual");
  CHECK(j["options"]["criterion"] == "el");
  CHECK(j["options"]["basis"] == "bspline");
}

TEST_CASE("input errors exit with code 2")
{
  TempDir dir("input");
  const std::string missing = dir / "missing_y.csv";
  std::ofstream(missing) << "s,x1\n0.1,0.2\n0.3,0.4\n";
  auto r = run_cli({ "estimate", "--input", missing, "--output-dir", dir / "out", "--error-kind", "none" });
  CHECK(r.code == 2);
  CHECK(r.err.find("'y'") != std::string::npos);

  const std::string bad = dir / "bad.csv";
  std::ofstream(bad) << "s,y,x1\n0.1,0.2,0.3\n0.4,abc,0.5\n";
  r = run_cli({ "estimate", "--input", bad, "--error-kind", "none" });
  CHECK(r.code == 2);
  CHECK(r.err.find("row 3") != std::string::npos);

  r = run_cli({ "estimate", "--input", (dir / "nope.csv"), "--error-kind", "none" });
  CHECK(r.code == 2);

  r = run_cli({ "estimate", "--error-kind", "none" });
  CHECK(r.code == 2);

  r = run_cli({ "frobnicate" });
  CHECK(r.code == 2);

  r = run_cli({ "estimate", "--input", write_sample(dir, 100, 3), "--error-kind", "none", "--criterion", "gmm" });
  CHECK(r.code == 2);
}

TEST_CASE("noise above signal exits with code 3")
{
  TempDir dir("noise");
  const auto input = write_sample(dir, 100, 4);
  const auto table = read_csv(input);
  const Vector s = table.column("s");
  const double var_s = (s.array() - s.mean()).square().sum() / (s.size() - 1);
  const auto r = run_cli({ "estimate", "--input", input, "--output-dir", dir / "out", "--error-kind", "laplace",
                           "--error-variance", format_double(var_s * 1.01) });
  CHECK(r.code == 3);
  CHECK(r.err.find("NoiseExceedsSignal") != std::string::npos);

  const auto two = run_cli({ "estimate", "--input", input, "--error-kind", "laplace", "--error-variance", "0.1",
                             "--error-ratio", "0.1" });
  CHECK(two.code == 3);
  const auto none = run_cli({ "estimate", "--input", input });
  CHECK(none.code == 3);
}

TEST_CASE("confidence band command")
{
  TempDir dir("ci");
  const auto input = write_sample(dir, 150, 5);
  const std::vector<std::string> base{ "ci",   "--input", input, "--output-dir", dir / "out", "--error-kind",
                                       "laplace", "--error-ratio", "0.2", "--K", "3", "--h0", "0.6", "--h", "0.5" };
  auto r = run_cli(base);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const CsvTable band = read_csv(dir / "out/ci.csv");
  CHECK(band.header == std::vector<std::string>{ "t", "mu", "lo", "hi" });
  CHECK(band.rows.size() == 201);
  const Json j = read_json(dir / "out/ci.json");
  CHECK(j["alpha"] == 0.05);
  CHECK(j["critical_value"].get<double>() == doctest::Approx(1.959964));
  CHECK(j["undersmooth_factor"].get<double>() == doctest::Approx(std::pow(150.0, -0.1)));
  CHECK(j["warnings"].is_array());

  auto zero = base;
  zero.insert(zero.end(), { "--alpha", "0" });
  CHECK(run_cli(zero).code == 2);
  auto one = base;
  one.insert(one.end(), { "--alpha", "1.5" });
  CHECK(run_cli(one).code == 2);
}

TEST_CASE("outputs are byte-identical across thread counts")
{
  TempDir dir("determinism");
  const auto input = write_sample(dir, 150, 6);
  const auto cfg = fast_simex(dir);
  for (const std::string cmd : { "estimate", "tune", "ci" }) {
    for (const std::string threads : { "1", "2" }) {
      const auto r = run_cli({ cmd, "--input", input, "--output-dir", dir / ("out" + threads), "--error-kind",
                               "laplace", "--error-ratio", "0.2", "--simex-config", cfg, "--seed", "11",
                               "--threads", threads, "--grid-n", "41" });
      REQUIRE_MESSAGE(r.code == 0, r.err);
    }
  }
  for (const std::string file : { "curve.csv", "estimate.json", "params.json", "ci.csv", "ci.json" }) {
    const std::string a = slurp(dir.path / "out1" / file);
    CHECK(!a.empty());
    CHECK_MESSAGE(a == slurp(dir.path / "out2" / file), file);
  }
}

TEST_CASE("replicate characteristic function command")
{
  TempDir dir("phi");
  SUBCASE("equal replicates")
  {
    const std::string path = dir / "pairs.csv";
    Vector v = Vector::LinSpaced(80, -1.0, 1.0);
    write_csv(path, { "s1", "s2" }, { v, v });
    const auto r = run_cli({ "replicate-phi", "--input", path, "--output-dir", dir / "out" });
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvTable t = read_csv(dir / "out/phi.csv");
    CHECK(t.header == std::vector<std::string>{ "w", "phi" });
    for (const auto& row : t.rows) {
      CHECK(row[1] == 1.0);
    }
  }
  SUBCASE("laplace replicates")
  {
    Rng rng(3);
    const auto e = ErrorModel::laplace(0.25);
    std::normal_distribution<double> nd;
    const Index n = 100000;
    Vector s1(n), s2(n);
    for (Index i = 0; i < n; ++i) {
      const double t = nd(rng);
      s1(i) = t + e.draw(rng);
      s2(i) = t + e.draw(rng);
    }
    const std::string path = dir / "pairs.csv";
    write_csv(path, { "s1", "s2" }, { s1, s2 });
    const auto r = run_cli({ "replicate-phi", "--input", path, "--output-dir", dir / "out" });
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvTable t = read_csv(dir / "out/phi.csv");
    double worst = 0.0;
    for (const auto& row : t.rows) {
      if (row[0] <= 10.0) {
        worst = std::max(worst, std::abs(row[1] - 1.0 / (1.0 + 0.125 * row[0] * row[0])));
      }
    }
    CHECK(worst <= 0.02);
    const Json j = read_json(dir / "out/error_model.json");
    CHECK(j["kind"] == "replicate");

    // the descriptor feeds estimate
    const auto data = write_sample(dir, 100, 7);
    const auto est = run_cli({ "estimate", "--input", data, "--output-dir", dir / "est", "--error-model",
                               dir / "out/error_model.json", "--K", "3", "--h0", "0.8", "--h", "0.8" });
    CHECK_MESSAGE(est.code == 0, est.err);
  }
  SUBCASE("too few pairs")
  {
    const std::string path = dir / "pairs.csv";
    Vector v = Vector::LinSpaced(49, -1.0, 1.0);
    write_csv(path, { "s1", "s2" }, { v, v.reverse() });
    const auto r = run_cli({ "replicate-phi", "--input", path, "--output-dir", dir / "out" });
    CHECK(r.code == 3);
    CHECK(r.err.find("InsufficientReplicates") != std::string::npos);
  }
}

TEST_CASE("simulate and report")
{
  TempDir dir("simulate");
  const auto r = run_cli({ "simulate", "--models", "1", "--sizes", "250", "--reps", "10", "--seed", "7",
                           "--output-dir", dir / "out" });
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string csv = slurp(dir.path / "out" / "ise.csv");
  CHECK(line_count(dir.path / "out" / "ise.csv") == 21);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
  const Json j = read_json(dir / "out/report.json");
  CHECK(j["cells"].size() == 2);
  for (const auto& cell : j["cells"]) {
    CHECK(cell["ise"].size() == 10);
  }
  CHECK(j["config"]["seed"] == 7);

  const auto rep = run_cli({ "report", "--input", dir / "out/report.json", "--output-dir", dir / "sum" });
  REQUIRE_MESSAGE(rep.code == 0, rep.err);
  CHECK(line_count(dir.path / "sum" / "summary.csv") == 3);

  CHECK(run_cli({ "simulate", "--models", "5", "--reps", "10", "--output-dir", dir / "bad" }).code == 3);
  CHECK(run_cli({ "simulate", "--preset", "fig9", "--output-dir", dir / "bad" }).code == 3);
  CHECK(run_cli({ "report", "--input", dir / "missing.json" }).code == 2);
}
