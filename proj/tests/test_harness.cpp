#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "bls/correlators.hpp"
#include "bls/harness/config.hpp"
#include "bls/harness/runner.hpp"
#include "bls/harness/runrecord.hpp"

using namespace bls;
using harness::ConfigError;
using harness::ExperimentConfig;
using harness::RunRecord;

namespace {

std::string thrown_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : s) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

TEST_CASE("canonical config form is a parse fixed point") {
  const std::string text = R"({
    "command": "estimate",
    "lambda": 0.75,
    "beta": 2.25,
    "seed": 42,
    "points": [[-0.5, 0.0], [0.5, 0.0], [0.1, 0.9]],
    "t_min": 0.05,
    "t_max": 3.0,
    "eps_ladder": [0.2, 0.1, 0.05],
    "n_samples": 500
  })";
  const ExperimentConfig cfg = harness::config_from_json(text);
  CHECK(cfg.command == "estimate");
  CHECK(cfg.lambda == 0.75);
  CHECK(cfg.points.size() == 3);
  CHECK(cfg.eps_ladder.size() == 3);

  const std::string canon = harness::to_canonical_json(cfg);
  const ExperimentConfig again = harness::config_from_json(canon);
  CHECK(harness::to_canonical_json(again) == canon);
  CHECK(harness::config_hash(again) == harness::config_hash(cfg));
}

TEST_CASE("unset fields keep their defaults") {
  const ExperimentConfig cfg = harness::config_from_json(R"({"command": "exact"})");
  CHECK(cfg.lambda == 1.0);
  CHECK(cfg.beta == doctest::Approx(3.141592653589793).epsilon(1e-15));
  CHECK(cfg.seed == 1);
  CHECK(cfg.budget_scale == 1.0);
  CHECK(cfg.kmax == 6);
  CHECK(cfg.max_p == 3);
  CHECK(cfg.outer_radius == 1024);
  CHECK(cfg.verify_mode == "quick");
  CHECK(cfg.points.empty());
  CHECK(!cfg.swap_colors);
}

TEST_CASE("config hash is the fnv-1a of the canonical form") {
  ExperimentConfig cfg = harness::config_from_json(R"({"command": "exact"})");
  const std::string h = harness::config_hash(cfg);
  REQUIRE(h.size() == 16);
  for (char c : h) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));

  char expect[17];
  std::snprintf(expect, sizeof expect, "%016llx",
                static_cast<unsigned long long>(fnv1a(harness::to_canonical_json(cfg))));
  CHECK(h == std::string(expect));

  CHECK(harness::config_hash(cfg) == h);
  cfg.lambda = 2.0;
  CHECK(harness::config_hash(cfg) != h);
}

TEST_CASE("parse errors cite the offending line") {
  const std::string syntax = "{\n  \"command\": \"exact\",\n  \"lambda\": oops\n}";
  CHECK_THROWS_AS(harness::config_from_json(syntax), ConfigError);
  CHECK(thrown_message([&] { harness::config_from_json(syntax); }).find("config line 3") !=
        std::string::npos);

  const std::string field = R"({
  "command": "exact",
  "lambda": -1
})";
  const std::string msg = thrown_message([&] { harness::config_from_json(field); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("'lambda'") != std::string::npos);
  CHECK(msg.find("positive") != std::string::npos);

  CHECK(thrown_message([&] { harness::config_from_json(R"({"command": "exact", "lambdaa": 1})"); })
            .find("unknown key") != std::string::npos);
  CHECK_THROWS_AS(harness::config_from_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(harness::config_from_json(R"({"command": "exact", "schema_version": 2})"),
                  ConfigError);
  CHECK_THROWS_AS(harness::config_from_json(R"({"command": "transmogrify"})"), ConfigError);
}

TEST_CASE("the default command fills a missing field but never overrides") {
  CHECK(harness::config_from_json(R"({"kmax": 4})", "blocks").command == "blocks");
  CHECK(harness::config_from_json(R"({"command": "exact"})", "blocks").command == "exact");
  CHECK(thrown_message([] { harness::config_from_json(R"({"kmax": 4})"); })
            .find("'command'") != std::string::npos);
}

TEST_CASE("per-command validation") {
  auto rejects = [](const std::string& text) {
    CHECK_THROWS_AS(harness::config_from_json(text), ConfigError);
  };
  // estimate: needs points, samples, a time window, and a usable disk radius
  rejects(R"({"command": "estimate", "t_max": 1, "n_samples": 10, "eps": 0.1})");
  rejects(R"({"command": "estimate", "points": [[0,0],[1,0]], "n_samples": 10, "eps": 0.1})");
  rejects(R"({"command": "estimate", "points": [[0,0],[1,0]], "t_max": 1, "eps": 0.1})");
  rejects(R"({"command": "estimate", "points": [[0,0]], "t_max": 1, "n_samples": 10, "eps": 0.1})");
  rejects(
      R"({"command": "estimate", "points": [[0,0],[0,0]], "t_max": 1, "n_samples": 10, "eps": 0.1})");
  rejects(
      R"({"command": "estimate", "points": [[0,0],[1,0]], "t_max": 1, "n_samples": 10, "eps_ladder": [0.1, 0.2]})");
  // exact: the four-point slot takes exactly 0 or 4 points
  rejects(R"({"command": "exact", "points": [[0,0],[1,0]]})");
  // blocks: bounded depth and channel extent
  rejects(R"({"command": "blocks", "kmax": 9})");
  rejects(R"({"command": "blocks", "max_p": 5})");
  // perc: increasing radii inside a bounded board
  rejects(R"({"command": "perc", "inner_radii": [], "n_trials": 10})");
  rejects(R"({"command": "perc", "inner_radii": [4, 4], "n_trials": 10})");
  rejects(R"({"command": "perc", "inner_radii": [8], "outer_radius": 4, "n_trials": 10})");
  rejects(R"({"command": "perc", "inner_radii": [8], "outer_radius": 8192, "n_trials": 10})");
  rejects(R"({"command": "perc", "inner_radii": [8], "n_trials": 0})");
  // verify: two modes only
  rejects(R"({"command": "verify", "verify_mode": "paranoid"})");
}

TEST_CASE("run record json round trip") {
  RunRecord rec;
  rec.command = "exact";
  rec.config_hash = "00ff00ff00ff00ff";
  rec.config_json = R"({"schema_version":1,"command":"exact"})";
  rec.started_at = "2026-01-02T03:04:05Z";
  rec.finished_at = "2026-01-02T03:04:06Z";
  rec.quantities.push_back({"q1", 1.5, 0.25, 100, "mc", "series_a", 0.1, 0.2});
  rec.quantities.push_back({"q2", -2.0, 0.0, 0, "exact", "", 0.0, 0.0});
  rec.comparisons.push_back(harness::make_comparison("close", 1.0, 1.0 + 1e-13, 1e-12, "abs 1e-12"));
  rec.comparisons.push_back(harness::make_comparison("hypothesis", 0.0, 1.0, 0.5, "flag", false));
  rec.artifacts["table.csv"] = "a,b\n1,2\n";
  rec.pass = true;

  const RunRecord back = harness::run_record_from_json(harness::to_json(rec));
  CHECK(back.schema_version == rec.schema_version);
  CHECK(back.artifact_version == rec.artifact_version);
  CHECK(back.command == rec.command);
  CHECK(back.config_hash == rec.config_hash);
  CHECK(back.config_json == rec.config_json);
  CHECK(back.started_at == rec.started_at);
  CHECK(back.finished_at == rec.finished_at);
  CHECK(back.pass == rec.pass);
  REQUIRE(back.quantities.size() == 2);
  CHECK(back.quantities[0].name == "q1");
  CHECK(back.quantities[0].value == 1.5);
  CHECK(back.quantities[0].stderr_value == 0.25);
  CHECK(back.quantities[0].n == 100);
  CHECK(back.quantities[0].provenance == "mc");
  CHECK(back.quantities[0].series == "series_a");
  CHECK(back.quantities[0].x == 0.1);
  CHECK(back.quantities[0].x2 == 0.2);
  REQUIRE(back.comparisons.size() == 2);
  CHECK(back.comparisons[0].pass);
  CHECK(back.comparisons[0].tolerance_spec == "abs 1e-12");
  CHECK(!back.comparisons[1].pass);
  CHECK(!back.comparisons[1].gating);
  CHECK(back.artifacts.at("table.csv") == "a,b\n1,2\n");

  CHECK(back.find_quantity("q2")->value == -2.0);
  CHECK(back.find_quantity("missing") == nullptr);

  std::string tampered = harness::to_json(rec);
  const auto pos = tampered.find("\"schema_version\": 1");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 19, "\"schema_version\": 9");
  CHECK_THROWS_AS(harness::run_record_from_json(tampered), std::runtime_error);
}

TEST_CASE("comparisons apply the absolute bound and reject non-finite values") {
  CHECK(harness::make_comparison("edge", 1.0, 1.5, 0.5, "abs").pass);
  CHECK(!harness::make_comparison("over", 1.0, 1.6, 0.5, "abs").pass);
  CHECK(!harness::make_comparison("nan", std::nan(""), 0.0, 1e9, "abs").pass);
}

TEST_CASE("plot data extraction") {
  RunRecord rec;
  CHECK(harness::emit_plot_data(rec, "anything") == "x,x2,value,stderr,series\n");
  rec.quantities.push_back({"a1", 1.0, 0.1, 10, "mc", "s1", 0.5, 0.0});
  rec.quantities.push_back({"a2", 2.0, 0.2, 10, "mc", "s1", 0.25, 0.0});
  rec.quantities.push_back({"b1", 3.0, 0.3, 10, "mc", "s2", 0.125, 0.0});
  const std::string csv = harness::emit_plot_data(rec, "s1");
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 3);
  CHECK(csv.find(",s1\n") != std::string::npos);
  CHECK(csv.find("s2") == std::string::npos);
  CHECK_THROWS_AS(harness::emit_plot_data(rec, "s3"), std::invalid_argument);
}

TEST_CASE("atomic writes leave no temporary behind") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bls_test_write_atomic";
  fs::create_directories(dir);
  const fs::path target = dir / "record.json";

  harness::write_atomic(target.string(), "first\n");
  CHECK(!fs::exists(target.string() + ".tmp"));
  harness::write_atomic(target.string(), "second\n");
  std::ifstream in(target);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "second\n");
  CHECK(!fs::exists(target.string() + ".tmp"));
  fs::remove_all(dir);
}

TEST_CASE("timestamps are utc iso 8601") {
  const std::string t = harness::iso_timestamp_utc();
  REQUIRE(t.size() == 20);
  CHECK(t[4] == '-');
  CHECK(t[10] == 'T');
  CHECK(t[19] == 'Z');
}

TEST_CASE("exact pipeline record") {
  const ExperimentConfig cfg = harness::config_from_json(R"({"command": "exact"})");
  const RunRecord rec = harness::run_experiment(cfg);
  CHECK(rec.command == "exact");
  CHECK(rec.config_hash == harness::config_hash(cfg));
  CHECK(rec.pass);
  REQUIRE(rec.find_quantity("central_charge") != nullptr);
  CHECK(rec.find_quantity("central_charge")->value == 2.0);
  CHECK(rec.find_quantity("four_point_OOEE") != nullptr);
  REQUIRE(rec.comparisons.size() == 1);
  CHECK(rec.comparisons[0].pass);
  CHECK(rec.comparisons[0].gating);
  CHECK(harness::default_record_filename(rec) == "exact_" + rec.config_hash + ".json");

  const RunRecord again = harness::run_experiment(cfg);
  REQUIRE(again.quantities.size() == rec.quantities.size());
  for (std::size_t i = 0; i < rec.quantities.size(); ++i)
    CHECK(again.quantities[i].value == rec.quantities[i].value);
}

TEST_CASE("stored records re-verify and tampering is caught") {
  const ExperimentConfig cfg = harness::config_from_json(R"({"command": "exact"})");
  const RunRecord rec = harness::run_experiment(cfg);
  CHECK(harness::reverify(rec));

  const RunRecord back = harness::run_record_from_json(harness::to_json(rec));
  CHECK(harness::reverify(back));

  RunRecord bad_hash = rec;
  bad_hash.config_hash[0] = bad_hash.config_hash[0] == '0' ? '1' : '0';
  CHECK(!harness::reverify(bad_hash));

  RunRecord bad_verdict = rec;
  bad_verdict.comparisons[0].pass = !bad_verdict.comparisons[0].pass;
  CHECK(!harness::reverify(bad_verdict));

  RunRecord bad_pass = rec;
  bad_pass.pass = !bad_pass.pass;
  CHECK(!harness::reverify(bad_pass));
}

TEST_CASE("blocks pipeline record") {
  const ExperimentConfig cfg =
      harness::config_from_json(R"({"command": "blocks", "kmax": 4, "max_p": 2})");
  const RunRecord rec = harness::run_experiment(cfg);
  CHECK(rec.pass);
  REQUIRE(rec.find_quantity("central_charge_recovered") != nullptr);
  CHECK(rec.find_quantity("central_charge_recovered")->value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rec.find_quantity("spectrum_p0_pb0") != nullptr);
  CHECK(rec.find_quantity("residual_p0_pb0") != nullptr);
  bool found = false;
  for (const auto& c : rec.comparisons)
    if (c.name.find("central charge") != std::string::npos) {
      found = true;
      CHECK(c.pass);
    }
  CHECK(found);
}

TEST_CASE("perc pipeline record") {
  const ExperimentConfig cfg = harness::config_from_json(
      R"({"command": "perc", "inner_radii": [2, 3, 4], "outer_radius": 10, "n_trials": 300, "seed": 5})");
  const RunRecord rec = harness::run_experiment(cfg);
  CHECK(rec.pass);
  CHECK(rec.find_quantity("three_arm_theta_r_2") != nullptr);
  CHECK(rec.find_quantity("three_arm_theta_r_4") != nullptr);
  REQUIRE(rec.find_quantity("three_arm_exponent") != nullptr);
  CHECK(rec.artifacts.count("three_arm_ladder.csv") == 1);
  CHECK(rec.artifacts.at("three_arm_ladder.csv").substr(0, 19) == "r,R,theta,stderr,n\n");
  // the exponent check at this scale is informational, never gating
  for (const auto& c : rec.comparisons) CHECK(!c.gating);
}

TEST_CASE("estimate pipeline record") {
  const std::string text = R"({
    "command": "estimate",
    "points": [[-0.5, 0.0], [0.5, 0.0]],
    "t_min": 0.05,
    "t_max": 0.5,
    "eps_ladder": [0.15, 0.1],
    "n_samples": 2000,
    "seed": 11
  })";
  const ExperimentConfig cfg = harness::config_from_json(text);
  const RunRecord rec = harness::run_experiment(cfg);
  CHECK(rec.pass);
  REQUIRE(rec.find_quantity("chat_calibration") != nullptr);
  CHECK(rec.find_quantity("chat_calibration")->value > 0);
  CHECK(rec.find_quantity("edge_npoint") != nullptr);
  CHECK(rec.find_quantity("charged_two_point_bracket") != nullptr);

  REQUIRE(rec.artifacts.count("alpha_table.json") == 1);
  const corr::AlphaTable table = corr::alpha_table_from_json(rec.artifacts.at("alpha_table.json"));
  CHECK(table.normalized);
  CHECK(table.eps_ladder.size() == 2);
  CHECK(table.entries.size() == 8);  // 2 rungs x (pair, separating pair, two hugs)
  CHECK(table.config_hash == rec.config_hash);

  // adjacent-rung consistency rows are recorded as flags
  bool ladder_row = false;
  for (const auto& c : rec.comparisons)
    if (c.name.find("ladder consistency") != std::string::npos) {
      ladder_row = true;
      CHECK(!c.gating);
    }
  CHECK(ladder_row);

  const RunRecord again = harness::run_experiment(cfg);
  REQUIRE(again.quantities.size() == rec.quantities.size());
  for (std::size_t i = 0; i < rec.quantities.size(); ++i) {
    CHECK(again.quantities[i].name == rec.quantities[i].name);
    CHECK(again.quantities[i].value == rec.quantities[i].value);
    CHECK(again.quantities[i].stderr_value == rec.quantities[i].stderr_value);
  }
  CHECK(again.artifacts.at("alpha_table.json") == rec.artifacts.at("alpha_table.json"));
}

TEST_CASE("simulate pipeline record scales its budget") {
  const std::string text = R"({
    "command": "simulate",
    "region": [-1, 1, -1, 1],
    "t_min": 0.05,
    "t_max": 2.0,
    "delta": 0.2,
    "n_realizations": 5,
    "seed": 3
  })";
  ExperimentConfig cfg = harness::config_from_json(text);
  const RunRecord rec = harness::run_experiment(cfg);
  REQUIRE(rec.find_quantity("loops_per_realization") != nullptr);
  CHECK(rec.find_quantity("loops_per_realization")->n == 5);
  CHECK(rec.find_quantity("window_mass")->value > 0);
  CHECK(rec.find_quantity("window_mass")->provenance == "exact");

  cfg.budget_scale = 2.0;
  const RunRecord doubled = harness::run_experiment(cfg);
  CHECK(doubled.find_quantity("loops_per_realization")->n == 10);
}

TEST_CASE("quick verification through the runner") {
  const ExperimentConfig cfg =
      harness::config_from_json(R"({"command": "verify", "verify_mode": "quick"})");
  const RunRecord rec = harness::run_experiment(cfg);
  CHECK(rec.pass);
  REQUIRE(!rec.comparisons.empty());
  for (const auto& c : rec.comparisons) {
    const bool labeled = c.name.rfind("criterion ", 0) == 0 || c.name.rfind("observation: ", 0) == 0;
    CHECK(labeled);
  }
  REQUIRE(rec.artifacts.count("verify_report.txt") == 1);
  CHECK(rec.artifacts.at("verify_report.txt").find("criterion") != std::string::npos);
}
