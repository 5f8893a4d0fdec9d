#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "param_mutations.hpp"
#include "tersoff/cli.hpp"
#include "tersoff/report.hpp"
#include "tersoff/system.hpp"

using namespace tersoff;
using Json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tersoff_cli_test_" + std::to_string(::getpid()) + "_" + name);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

const Json* check_named(const Json& report, const std::string& name) {
  for (const auto& c : report["checks"]) {
    if (c["name"] == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, exit_code::input_error);
  EXPECT_EQ(cli({"frobnicate"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--steps", "many"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--variant", "vec-k"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--backend", "emulated", "--variant", "vec-i", "--width", "3"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--format", "yaml", "--steps", "0"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--structure", "nanotube:5"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--structure", "/nonexistent.xyz"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--params", "/nonexistent.tersoff"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"run", "--dt", "0", "--steps", "1"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"--help"}).code, exit_code::ok);
}

TEST(Cli, MalformedParamsReportLine) {
  for (const auto& m : param_mutations::all()) {
    const auto path = temp_path("bad.tersoff");
    std::ofstream(path) << m.text;
    const auto r = cli({"run", "--params", path.string(), "--steps", "0"});
    std::filesystem::remove(path);
    EXPECT_EQ(r.code, exit_code::input_error) << m.name;
    EXPECT_NE(r.err.find("line " + std::to_string(m.line)), std::string::npos) << m.name << ": " << r.err;
  }
}

TEST(Cli, GenNanotube) {
  const auto r = cli({"gen", "nanotube", "5", "10"});
  ASSERT_EQ(r.code, exit_code::ok) << r.err;
  std::istringstream ss(r.out);
  const auto s = read_xyz(ss);
  EXPECT_EQ(s.size(), 200);
  const auto path = temp_path("cnt.xyz");
  ASSERT_EQ(cli({"gen", "--structure", "diamond:2", "-o", path.string()}).code, exit_code::ok);
  const auto d = read_xyz_file(path.string());
  EXPECT_EQ(d.size(), 64);
  EXPECT_TRUE(d.box.periodic[0]);
  // a generated file is itself a valid structure argument
  const auto again = cli({"run", "--structure", path.string(), "--steps", "0"});
  EXPECT_EQ(again.code, exit_code::ok) << again.err;
  std::filesystem::remove(path);
  EXPECT_EQ(cli({"gen", "cube", "3"}).code, exit_code::input_error);
}

TEST(Cli, RunZeroStepsAllVariantsAgree) {
  std::vector<double> e0;
  for (std::string v : {"reference", "scalar", "vec-j", "vec-i"}) {
    const auto r = cli({"run", "--variant", v, "--steps", "0", "--format", "json"});
    ASSERT_EQ(r.code, exit_code::ok) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j["atoms"], 200);
    e0.push_back(j["initial"]["potential_eV"].get<double>());
  }
  for (double e : e0) EXPECT_NEAR(e, e0.front(), 1e-10 * std::abs(e0.front()));
  EXPECT_LT(e0.front(), -1000.0);
}

TEST(Cli, RunFormats) {
  const auto csv = cli({"run", "--steps", "10", "--format", "csv", "--structure", "nanotube:5:3"});
  ASSERT_EQ(csv.code, exit_code::ok) << csv.err;
  const auto rows = lines(csv.out);
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows.front().rfind("step,", 0), 0u);
  const auto table = cli({"run", "--steps", "10", "--format", "table", "--structure", "nanotube:5:3"});
  ASSERT_EQ(table.code, exit_code::ok);
  EXPECT_NE(table.out.find("E_total drift"), std::string::npos);
  const auto json = cli({"run", "--steps", "10", "--structure", "nanotube:5:3"});
  const auto j = Json::parse(json.out);
  EXPECT_EQ(j["steps"], 10);
  EXPECT_LE(j["energy_drift"].get<double>(), 1e-4);
  EXPECT_GE(j["timing_s"]["force"].get<double>(), 0.0);
}

TEST(Cli, RunDumpAndStretch) {
  const auto path = temp_path("traj.xyz");
  const auto r = cli({"run", "--steps", "200", "--dump", path.string(), "--dump-every", "100", "--structure",
                      "nanotube:5:6", "--stretch", "0.02", "--temperature", "0"});
  ASSERT_EQ(r.code, exit_code::ok) << r.err;
  const auto j = Json::parse(r.out);
  EXPECT_GT(j["grip_atoms"].get<int>(), 0);
  EXPECT_GT(j["final"]["potential_eV"].get<double>(), j["initial"]["potential_eV"].get<double>());
  std::ifstream in(path);
  int frames = 0;
  while (in.peek() != EOF) {
    read_xyz(in);
    ++frames;
  }
  EXPECT_EQ(frames, 3);
  std::filesystem::remove(path);
  EXPECT_EQ(cli({"run", "--steps", "1", "--stretch", "0.01", "--grip-width", "0"}).code, exit_code::input_error);
}

TEST(Cli, RunSinglePrecisionAndThreads) {
  const auto a = cli({"run", "--steps", "0", "--precision", "single", "--variant", "vec-i"});
  ASSERT_EQ(a.code, exit_code::ok) << a.err;
  const auto b = cli({"run", "--steps", "5", "--threads", "3", "--variant", "vec-j", "--structure", "nanotube:5:3"});
  const auto c = cli({"run", "--steps", "5", "--threads", "1", "--variant", "vec-j", "--structure", "nanotube:5:3"});
  ASSERT_EQ(b.code, exit_code::ok);
  EXPECT_EQ(Json::parse(b.out)["final"]["total_eV"], Json::parse(c.out)["final"]["total_eV"]);
}

TEST(Cli, BenchFormats) {
  const std::vector<std::string> base{"bench", "--structure", "nanotube:5:3", "--steps", "1", "--reps", "1", "--warmup", "0"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return cli(a);
  };
  const auto json = with({"--format", "json"});
  ASSERT_EQ(json.code, exit_code::ok) << json.err;
  const auto rows = Json::parse(json.out);
  ASSERT_GE(rows.size(), 4u);
  std::set<std::string> variants;
  for (const auto& r : rows) {
    variants.insert(r["variant"].get<std::string>());
    EXPECT_GT(r["time_s"].get<double>(), 0.0);
    EXPECT_EQ(r["atoms"], 60);
    EXPECT_NEAR(r["efficiency"].get<double>(), r["speedup_scalar"].get<double>() / r["width"].get<int>(), 1e-3);
  }
  EXPECT_EQ(variants, (std::set<std::string>{"reference", "scalar", "vec-j", "vec-i"}));

  const auto csv = with({"--format", "csv", "--variant", "vec-i", "--backend", "emulated", "--width", "4"});
  ASSERT_EQ(csv.code, exit_code::ok) << csv.err;
  const auto l = lines(csv.out);
  EXPECT_EQ(l.front(), bench_csv_header);
  EXPECT_EQ(l.size(), 4u);  // header, reference, scalar, vec-i
  EXPECT_NE(csv.out.find("vec-i,emulated,4,double,60,1,"), std::string::npos);

  const auto table = with({"--format", "table", "--variant", "vec-j"});
  ASSERT_EQ(table.code, exit_code::ok);
  EXPECT_NE(table.out.find("lane_util"), std::string::npos);
  EXPECT_EQ(with({"--reps", "0"}).code, exit_code::input_error);
}

TEST(Report, FormatsCarrySameNumbers) {
  BenchReport rep;
  BenchRow a{"reference", "scalar", 1, "double", 200, 20, 0.25, 0, 0, 0, 1.0, 0.3, 0};
  BenchRow b{"scalar", "scalar", 1, "double", 200, 20, 0.05, 0, 0, 0, 1.0, 0.06, 0};
  BenchRow c{"vec-i", "emulated", 8, "double", 200, 20, round_significant(0.0123456789, 6), 0, 0, 0, 0.98, 0.013, 0};
  rep.rows = {a, b, c};
  finalize_speedups(rep);
  EXPECT_DOUBLE_EQ(rep.rows[0].speedup_ref, 1.0);
  EXPECT_DOUBLE_EQ(rep.rows[1].speedup_ref, 5.0);
  const auto json = Json::parse(render_json(rep));
  const auto csv = lines(render_csv(rep));
  const auto table = lines(render_table(rep));
  ASSERT_EQ(csv.size(), 4u);
  ASSERT_EQ(table.size(), 5u);
  for (std::size_t n = 0; n < 3; ++n) {
    std::vector<std::string> cells;
    std::stringstream ss(csv[n + 1]);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 11u);
    std::istringstream ts(table[n + 2]);
    std::vector<std::string> tcells;
    for (std::string cell; ts >> cell;) tcells.push_back(cell);
    EXPECT_EQ(tcells, cells);
    const auto& r = json[n];
    EXPECT_EQ(std::stod(cells[6]), r["time_s"].get<double>());
    EXPECT_EQ(std::stod(cells[7]), r["speedup_ref"].get<double>());
    EXPECT_EQ(std::stod(cells[8]), r["speedup_scalar"].get<double>());
    EXPECT_EQ(std::stod(cells[9]), r["efficiency"].get<double>());
    EXPECT_EQ(std::stod(cells[10]), r["lane_util"].get<double>());
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Cli, VerifyPassesAndNegativeControlsFail) {
  const auto ok = cli({"verify", "--structure", "nanotube:5:4", "--steps", "50"});
  ASSERT_EQ(ok.code, exit_code::ok) << ok.out << ok.err;
  const auto j = Json::parse(ok.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  for (const char* name : {"gradient", "equivalence.energy.double", "equivalence.force.double",
                           "equivalence.energy.single", "equivalence.force.single", "newton.third_law",
                           "width_independence", "w1_bit_identity", "conservation.energy", "conservation.force_sum",
                           "conservation.momentum"}) {
    const auto* c = check_named(j, name);
    ASSERT_NE(c, nullptr) << name;
    EXPECT_TRUE((*c)["passed"].get<bool>()) << name;
  }
  EXPECT_EQ((*check_named(j, "w1_bit_identity"))["value"].get<double>(), 0.0);

  const auto flipped = cli({"verify", "--structure", "nanotube:5:4", "--steps", "10", "--fault", "force-sign"});
  EXPECT_EQ(flipped.code, exit_code::verification_failed);
  const auto jf = Json::parse(flipped.out);
  EXPECT_FALSE((*check_named(jf, "gradient"))["passed"].get<bool>());

  const auto zero = cli({"verify", "--structure", "nanotube:5:4", "--steps", "10", "--tol-scale", "0"});
  EXPECT_EQ(zero.code, exit_code::verification_failed);
  EXPECT_FALSE(Json::parse(zero.out)["passed"].get<bool>());

  const auto table = cli({"verify", "--structure", "nanotube:5:4", "--steps", "10", "--format", "table"});
  EXPECT_EQ(table.code, exit_code::ok);
  EXPECT_NE(table.out.find("verify: all checks passed"), std::string::npos);

  EXPECT_EQ(cli({"verify", "--format", "csv"}).code, exit_code::input_error);
  EXPECT_EQ(cli({"verify", "--fault", "melt"}).code, exit_code::input_error);
}

TEST(Cli, VerifyMixedSpeciesCluster) {
  const auto path = temp_path("mixed.tersoff");
  std::ofstream(path) << serialize_params(mixed_test_params());
  const auto r = cli({"verify", "--params", path.string(), "--structure", "random:120:3", "--steps", "20",
                      "--temperature", "100", "--dt", "0.02"});
  std::filesystem::remove(path);
  EXPECT_EQ(r.code, exit_code::ok) << r.out << r.err;
}
