#include "hswitch/errors.hpp"
#include "hswitch/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hswitch;

namespace {

const char* kSmall = R"(
schema_version = 1
name = "tiny"
seed = 5
gate = "Z"
state_samples = 8

[model]
n_qubits = 1
coupling = "isotropic"
frame = "rotating"
coupling_value = 1.0

[sweep]
T = [2.0, 4.0]
p = [2]
n = [0, 1]

[optimizer]
iterations = 15
batch_size = 4
restarts = 2
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ResultRecord synthetic(double t, int p, double mli_value, std::vector<int> n = {2}) {
  ResultRecord r;
  r.total_time = t;
  r.depth = p;
  r.n = std::move(n);
  r.mli = mli_value;
  r.fidelity = 1.0 - std::pow(10.0, -mli_value);
  return r;
}

}  // namespace

TEST(Config, ParsesSweepAndOptimizer) {
  const auto cfg = parse_experiment_config(kSmall);
  EXPECT_EQ(cfg.name, "tiny");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.t_values, (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(cfg.n_values, (std::vector<std::vector<int>>{{0}, {1}}));
  EXPECT_EQ(cfg.optimizer.iterations, 15);
  EXPECT_EQ(cfg.optimizer.batch_size, 4);
  EXPECT_FALSE(cfg.grape.has_value());
}

TEST(Config, RejectsUnknownKeysAndMissingFields) {
  std::string bad = kSmall;
  bad.replace(bad.find("[optimizer]"), 11, "[optimizer]\nlearning_rate = 0.1");
  EXPECT_THROW(parse_experiment_config(bad), ConfigError);

  std::string no_seed = kSmall;
  no_seed.erase(no_seed.find("seed = 5"), 8);
  EXPECT_THROW(parse_experiment_config(no_seed), ConfigError);

  std::string version = kSmall;
  version.replace(version.find("schema_version = 1"), 18, "schema_version = 2");
  EXPECT_THROW(parse_experiment_config(version), ConfigError);

  std::string mixed = kSmall;
  mixed.replace(mixed.find("[model]"), 7, "[model]\npreset = \"iso_equal\"");
  EXPECT_THROW(parse_experiment_config(mixed), ConfigError);

  EXPECT_THROW(parse_experiment_config("schema_version = 1\nseed = ["), ConfigError);
}

TEST(Config, NanosecondUnitsScaleTimes) {
  std::string ns = kSmall;
  ns.replace(ns.find("gate = \"Z\""), 10, "gate = \"Z\"\nunit = \"ns\"");
  const auto cfg = parse_experiment_config(ns);
  ASSERT_EQ(cfg.t_values.size(), 2u);
  EXPECT_NEAR(cfg.t_values[0], ns_to_units(2.0), 1e-12);
  EXPECT_NEAR(cfg.t_values[1], 4.0 * 16.0 * M_PI, 1e-9);
}

TEST(Config, PresetModel) {
  const auto cfg = parse_experiment_config(R"(
schema_version = 1
seed = 1
[model]
preset = "dipole_device"
coupling_seed = 7
[sweep]
T = [1.0]
p = [1]
n = [2]
)");
  const auto spec = build_point_spec(cfg.model, {2});
  EXPECT_EQ(spec.coupling_kind, CouplingKind::dipole);
  EXPECT_EQ(spec.bath_counts, (std::vector<int>{2}));
}

TEST(Records, JsonRoundTripAndReevaluate) {
  auto cfg = parse_experiment_config(kSmall);
  cfg.t_values = {3.0};
  cfg.n_values = {{1}};
  const auto records = run_experiment(cfg);
  ASSERT_EQ(records.size(), 1u);
  const auto& r = records[0];
  ASSERT_TRUE(r.ok()) << *r.error;
  const auto back = record_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
  EXPECT_NEAR(reevaluate(back), r.fidelity, 1e-12);
  EXPECT_EQ(back.restart_seeds.size(), 2u);
  EXPECT_EQ(*back.state_fid_mean, *r.state_fid_mean);

  auto j = to_json(r);
  j["durations"][0] = j["durations"][0].get<double>() + 0.5;
  EXPECT_THROW(record_from_json(j), Error);
}

TEST(Run, NestingOrderSeedsAndByteStableOutput) {
  const auto cfg = parse_experiment_config(kSmall);
  const auto dir = std::filesystem::temp_directory_path() / "hswitch_harness_test";
  std::filesystem::create_directories(dir);
  RunOptions one;
  one.jobs = 1;
  one.output = (dir / "a.jsonl").string();
  RunOptions two = one;
  two.jobs = 2;
  two.output = (dir / "b.jsonl").string();
  const auto ra = run_experiment(cfg, one);
  const auto rb = run_experiment(cfg, two);
  ASSERT_EQ(ra.size(), 4u);
  EXPECT_EQ(ra[0].n, (std::vector<int>{0}));
  EXPECT_EQ(ra[1].total_time, 4.0);
  EXPECT_EQ(ra[2].n, (std::vector<int>{1}));
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].point_index, static_cast<int>(i));
    EXPECT_EQ(ra[i].point_seed, split_seed(5, i));
  }
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
  EXPECT_FALSE(slurp(dir / "a.jsonl").empty());
  const auto back = read_records_jsonl(dir / "a.jsonl");
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[3].fidelity, ra[3].fidelity);
  std::filesystem::remove_all(dir);
}

TEST(Run, FailingPointYieldsErrorRecord) {
  auto cfg = parse_experiment_config(kSmall);
  cfg.t_values = {2.0};
  cfg.n_values = {{0}, {20}};
  const auto records = run_experiment(cfg);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_TRUE(records[0].ok());
  ASSERT_FALSE(records[1].ok());
  EXPECT_NE(records[1].error->find("point 1"), std::string::npos);
  const auto j = to_json(records[1]);
  EXPECT_TRUE(j["error"].is_string());
}

TEST(CriticalPoints, PlateauOnsetAndDepthJump) {
  std::vector<ResultRecord> rs;
  const std::vector<double> mlis{0.1, 0.5, 2.0, 4.2, 4.4, 4.3};
  for (std::size_t i = 0; i < mlis.size(); ++i) {
    rs.push_back(synthetic(static_cast<double>(i + 1), 20, mlis[i]));
    rs.push_back(synthetic(static_cast<double>(i + 1), 10, 0.3 * mlis[i]));
  }
  const auto s = estimate_critical_points(rs);
  ASSERT_EQ(s.groups.size(), 1u);
  EXPECT_EQ(s.groups[0].t_star, 4.0);
  EXPECT_FALSE(s.groups[0].t_star_at_boundary);
  EXPECT_NEAR(s.groups[0].plateau_mli, 4.4, 1e-15);
  ASSERT_TRUE(s.groups[0].p_star.has_value());
  EXPECT_EQ(*s.groups[0].p_star, 20);
}

TEST(CriticalPoints, BoundaryAndSingleDepth) {
  std::vector<ResultRecord> rs{synthetic(1.0, 20, 0.5), synthetic(2.0, 20, 1.5), synthetic(3.0, 20, 3.0)};
  const auto s = estimate_critical_points(rs);
  EXPECT_TRUE(s.groups[0].t_star_at_boundary);
  EXPECT_FALSE(s.groups[0].p_star.has_value());
}

TEST(CriticalPoints, InsufficientGrid) {
  EXPECT_THROW(estimate_critical_points({synthetic(1.0, 20, 0.5)}), InvalidArgument);
  EXPECT_THROW(estimate_critical_points({}), InvalidArgument);
  auto failed = synthetic(2.0, 20, 1.0);
  failed.error = "boom";
  EXPECT_THROW(estimate_critical_points({synthetic(1.0, 20, 0.5), failed}), InvalidArgument);
}

TEST(Curves, CsvSortedWithHeader) {
  std::vector<ResultRecord> rs{synthetic(2.0, 20, 1.0), synthetic(1.0, 20, 0.5), synthetic(1.0, 10, 0.25, {1, 0})};
  auto failed = synthetic(3.0, 20, 0.0);
  failed.error = "x";
  rs.push_back(failed);
  const std::string csv = curves_csv(rs);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], kCurveCsvHeader);
  EXPECT_EQ(lines[1].substr(0, 12), "1,10,1+0,Z,0");
  EXPECT_EQ(lines[2].substr(0, 8), "1,20,2,Z");
  EXPECT_EQ(lines[3].substr(0, 8), "2,20,2,Z");
}

TEST(Curves, JsonRoundTrip) {
  auto cfg = parse_experiment_config(kSmall);
  cfg.t_values = {2.0};
  cfg.n_values = {{0}};
  const auto rs = run_experiment(cfg);
  const auto path = std::filesystem::temp_directory_path() / "hswitch_curves_test.json";
  emit_curves(rs, CurveFormat::json, path);
  const auto back = read_records_json(path);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(to_json(back[0]).dump(), to_json(rs[0]).dump());
  std::filesystem::remove(path);
  EXPECT_EQ(parse_curve_format("csv"), CurveFormat::csv);
  EXPECT_THROW(parse_curve_format("xml"), InvalidArgument);
}

TEST(Format, BathCounts) {
  EXPECT_EQ(format_n({3}), "3");
  EXPECT_EQ(format_n({1, 0}), "1+0");
}
