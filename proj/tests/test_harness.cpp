#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wavearm/harness.hpp"

using namespace wavearm;
using harness::ConfigMap;

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "wavearm_harness_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool rows_match_ignoring_runtime(const std::vector<harness::ResultRow>& a,
                                 const std::vector<harness::ResultRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.wave != y.wave || x.tp != y.tp || x.hs != y.hs || x.pose != y.pose ||
        x.failure != y.failure || x.seed != y.seed || x.rmse_mpc != y.rmse_mpc ||
        x.rmse_baseline != y.rmse_baseline || x.ratio != y.ratio ||
        x.max_fe != y.max_fe || x.error != y.error)
      return false;
  }
  return true;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

} // namespace

TEST_CASE("config parser handles sections, comments, and whitespace") {
  std::istringstream in(
      "top = 1\n"
      "[arm]\n"
      "  segments = 4   # trailing comment\n"
      "length=0.25\n"
      "; full-line comment\n"
      "\n"
      "[control]\n"
      "alpha = 2.5\n");
  const ConfigMap c = harness::parse_config(in);
  CHECK(c.at("top") == "1");
  CHECK(c.at("arm.segments") == "4");
  CHECK(c.at("arm.length") == "0.25");
  CHECK(c.at("control.alpha") == "2.5");
  CHECK(c.size() == 4);

  std::istringstream bad1("[arm\n");
  CHECK_THROWS_AS(harness::parse_config(bad1), std::invalid_argument);
  std::istringstream bad2("no equals sign here\n");
  CHECK_THROWS_AS(harness::parse_config(bad2), std::invalid_argument);
  std::istringstream bad3(" = 3\n");
  CHECK_THROWS_AS(harness::parse_config(bad3), std::invalid_argument);
}

TEST_CASE("typed lookups fall back and validate") {
  ConfigMap c{{"a.x", "2.5"}, {"a.n", "7"}, {"a.s", "hello"}, {"a.list", "W1, W3 ,8.5"},
              {"a.bad", "2.5.1"}};
  CHECK(harness::config_double(c, "a.x", 0.0) == 2.5);
  CHECK(harness::config_double(c, "missing", -3.0) == -3.0);
  CHECK(harness::config_int(c, "a.n", 0) == 7);
  CHECK(harness::config_str(c, "a.s", "") == "hello");
  CHECK(harness::config_str(c, "missing", "dflt") == "dflt");
  const auto list = harness::config_list(c, "a.list");
  REQUIRE(list.size() == 3);
  CHECK(list[0] == "W1");
  CHECK(list[1] == "W3");
  CHECK(list[2] == "8.5");
  CHECK(harness::config_list(c, "missing").empty());
  CHECK_THROWS_AS(harness::config_double(c, "a.bad", 0.0), std::invalid_argument);
  CHECK_THROWS_AS(harness::config_int(c, "a.x", 0), std::invalid_argument); // 2.5 not int
}

TEST_CASE("episode_config applies section overrides consistently") {
  const sim::EpisodeConfig dflt = harness::episode_config({});
  CHECK(dflt.model.geom.count == 3);
  CHECK(dflt.mpc.horizon_K == 15);
  CHECK(dflt.water_depth == 20.0);

  ConfigMap c{{"arm.segments", "2"},      {"arm.stiffness", "3.5"},
              {"hydro.cd", "1.4"},        {"waves.components", "24"},
              {"control.q_weight", "50"}, {"control.horizon", "8"},
              {"star.r_outer", "0.3"},    {"episode.plant_rtol", "1e-6"}};
  const sim::EpisodeConfig cfg = harness::episode_config(c);
  CHECK(cfg.model.geom.count == 2);
  CHECK(cfg.model.dyn.stiffness.size() == 2);
  CHECK(cfg.model.dyn.stiffness[0] == 3.5);
  CHECK(cfg.model.dyn.stiffness[1] == 3.5);
  CHECK(cfg.model.hydro.cd == 1.4);
  CHECK(cfg.wave_components == 24);
  CHECK(cfg.gains.q_weight(0, 0) == 50.0);
  CHECK(cfg.gains.q_weight(1, 1) == 50.0);
  CHECK(cfg.gains.q_weight(0, 1) == 0.0);
  CHECK(cfg.gains.r_weight.rows() == 2);
  CHECK(cfg.mpc.horizon_K == 8);
  CHECK(static_cast<int>(cfg.mpc.actuation_mask.size()) == 2);
  CHECK(cfg.star.r_outer == 0.3);
  CHECK(cfg.plant_rtol == 1e-6);

  sim::Scenario s;
  harness::apply_episode_section({{"episode.duration", "12"}, {"episode.snr_db", "14"}}, s);
  CHECK(s.duration == 12.0);
  CHECK(s.snr_db == 14.0);
  CHECK(s.base_depth == 4.0); // untouched default
}

TEST_CASE("wave cases and failure specs parse") {
  CHECK(harness::wave_case_tp("W1") == 6.1);
  CHECK(harness::wave_case_tp("W2") == 8.0);
  CHECK(harness::wave_case_tp("W3") == 10.0);
  CHECK(harness::wave_case_tp("7.25") == 7.25);
  CHECK_THROWS_AS(harness::wave_case_tp("W9"), std::invalid_argument);

  CHECK(!harness::parse_failure("none"));
  CHECK(!harness::parse_failure(""));
  auto f = harness::parse_failure("2");
  REQUIRE(f.has_value());
  CHECK(f->segment == 2);
  CHECK(f->onset == 0.0);
  f = harness::parse_failure("3@12.5");
  REQUIRE(f.has_value());
  CHECK(f->segment == 3);
  CHECK(f->onset == 12.5);
  CHECK_THROWS_AS(harness::parse_failure("x@2"), std::invalid_argument);
}

TEST_CASE("sweep_from_config reads the matrix and validates") {
  const harness::SweepSpec dflt = harness::sweep_from_config({});
  CHECK(dflt.waves == std::vector<std::string>{"W1", "W2", "W3"});
  CHECK(dflt.heights == std::vector<double>{1.5, 3.0});
  CHECK(dflt.poses == std::vector<std::string>{"P1", "P3", "P6"});
  CHECK(dflt.controllers.size() == 2);
  CHECK(dflt.failures == std::vector<std::string>{"none"});

  ConfigMap c{{"sweep.waves", "W2"},
              {"sweep.hs", "1.0,2.0"},
              {"sweep.poses", "P4,P5"},
              {"sweep.controllers", "baseline"},
              {"sweep.failures", "none,2@5"},
              {"sweep.seed", "99"},
              {"sweep.out", "/tmp/somewhere"},
              {"episode.duration", "7"}};
  const harness::SweepSpec spec = harness::sweep_from_config(c);
  CHECK(spec.waves == std::vector<std::string>{"W2"});
  CHECK(spec.heights == std::vector<double>{1.0, 2.0});
  CHECK(spec.controllers.size() == 1);
  CHECK(spec.controllers[0] == sim::ControllerKind::kBaseline);
  CHECK(spec.failures == std::vector<std::string>{"none", "2@5"});
  CHECK(spec.master_seed == 99);
  CHECK(spec.out_dir == "/tmp/somewhere");
  CHECK(spec.base.duration == 7.0);

  CHECK_THROWS_AS(
      harness::sweep_from_config({{"sweep.controllers", "pid"}}),
      std::invalid_argument);
}

TEST_CASE("cell seeds are stable, distinct, and controller-free") {
  const std::uint64_t s1 = harness::cell_seed(1, "W2", 3.0, "P3");
  CHECK(s1 == harness::cell_seed(1, "W2", 3.0, "P3")); // reproducible
  std::set<std::uint64_t> seen;
  for (const std::string wave : {"W1", "W2", "W3"})
    for (const double hs : {1.5, 3.0})
      for (const std::string pose : {"P1", "P3", "P6"})
        seen.insert(harness::cell_seed(1, wave, hs, pose));
  CHECK(seen.size() == 18); // no collisions across the experiment grid
  CHECK(harness::cell_seed(2, "W2", 3.0, "P3") != s1);

  CHECK(harness::cell_stem("W2", 3.0, "P3", "none") == "W2_hs3.00_P3_none");
  CHECK(harness::cell_stem("W1", 1.5, "P6", "2@30") == "W1_hs1.50_P6_2a30");
}

TEST_CASE("results table round-trips through CSV and JSON") {
  harness::ResultRow a;
  a.wave = "W2";
  a.tp = 8.0;
  a.hs = 3.0;
  a.pose = "P3";
  a.failure = "2@30";
  a.seed = 1234567890123456789ULL;
  a.rmse_mpc = 0.0123456789012345;
  a.rmse_baseline = 0.2;
  a.ratio = a.rmse_mpc / a.rmse_baseline;
  a.max_fe = 1.75;
  a.runtime_s = 42.5;
  harness::ResultRow b;
  b.wave = "W1";
  b.tp = 6.1;
  b.hs = 1.5;
  b.pose = "P1";
  b.error = "integration stalled, at tick 3"; // comma must survive sanitized

  const fs::path dir = scratch_dir("roundtrip");
  const std::string csv = (dir / "results.csv").string();
  harness::write_results_csv({a, b}, csv);
  const auto rows = harness::read_results_csv(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].wave == "W2");
  CHECK(rows[0].seed == a.seed);
  CHECK(rows[0].rmse_mpc == a.rmse_mpc); // bit-exact through shortest printing
  CHECK(rows[0].ratio == a.ratio);
  CHECK(rows[0].failure == "2@30");
  CHECK(rows[1].rmse_mpc == -1.0);
  CHECK(!rows[1].ok());
  CHECK(rows[1].error.find("integration stalled") == 0);

  const std::string jsonp = (dir / "results.json").string();
  harness::write_results_json({a, b}, jsonp);
  const nlohmann::json parsed = nlohmann::json::parse(slurp(jsonp));
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0]["pose"] == "P3");
  CHECK(parsed[0]["rmse_mpc"].get<double>() == a.rmse_mpc);
  CHECK(parsed[1]["error"].get<std::string>().find("tick 3") != std::string::npos);
}

TEST_CASE("sweep runs the matrix, repeats bitwise, and ignores job count") {
  harness::SweepSpec spec;
  spec.waves = {"W2"};
  spec.heights = {2.0};
  spec.poses = {"P5"};
  spec.master_seed = 11;
  spec.base.duration = 2.0;

  sim::EpisodeConfig cfg;

  const fs::path d1 = scratch_dir("sweep1");
  const fs::path d2 = scratch_dir("sweep2");
  const fs::path d3 = scratch_dir("sweep3");
  spec.out_dir = d1.string();
  const auto r1 = harness::run_sweep(spec, cfg, 1);
  spec.out_dir = d2.string();
  const auto r2 = harness::run_sweep(spec, cfg, 1);
  spec.out_dir = d3.string();
  const auto r3 = harness::run_sweep(spec, cfg, 2);

  REQUIRE(r1.size() == 1);
  CHECK(r1[0].ok());
  CHECK(r1[0].rmse_mpc > 0.0);
  CHECK(r1[0].rmse_baseline > 0.0);
  CHECK(r1[0].ratio == r1[0].rmse_mpc / r1[0].rmse_baseline);
  CHECK(r1[0].max_fe > 0.0);
  CHECK(r1[0].seed == harness::cell_seed(11, "W2", 2.0, "P5"));

  // identical table on repeat and under parallel execution (runtime aside)
  CHECK(rows_match_ignoring_runtime(r1, r2));
  CHECK(rows_match_ignoring_runtime(r1, r3));

  // trace files are byte-identical across runs and job counts
  for (const std::string leaf :
       {"trace_W2_hs2.00_P5_none_mpc.csv", "trace_W2_hs2.00_P5_none_baseline.csv"}) {
    const std::string t1 = slurp(d1 / leaf);
    CHECK(t1 == slurp(d2 / leaf));
    CHECK(t1 == slurp(d3 / leaf));
    CHECK(!t1.empty());
  }

  // persisted table re-loads to the in-memory rows
  const auto reread = harness::read_results_csv((d1 / "results.csv").string());
  CHECK(rows_match_ignoring_runtime(r1, reread));
  CHECK(fs::exists(d1 / "results.json"));

  // an unreachable pose is recorded as a row error, not a crash
  harness::SweepSpec broken = spec;
  broken.poses = {"9.9,9.9"};
  broken.out_dir = scratch_dir("sweep_err").string();
  const auto re = harness::run_sweep(broken, cfg, 1);
  REQUIRE(re.size() == 1);
  CHECK(!re[0].ok());
  CHECK(re[0].rmse_mpc == -1.0);
}

TEST_CASE("the full experiment grid enumerates 108 cells") {
  // 3 periods x 6 heights x 6 poses; short calm-ish episodes with the cheap
  // controller keep this a shape test, not a benchmark
  harness::SweepSpec spec;
  spec.heights = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  spec.poses = {"P1", "P2", "P3", "P4", "P5", "P6"};
  spec.controllers = {sim::ControllerKind::kBaseline};
  spec.base.duration = 0.3;
  spec.write_traces = false;
  spec.out_dir = scratch_dir("grid").string();
  const auto rows = harness::run_sweep(spec, sim::EpisodeConfig{}, 2);
  REQUIRE(rows.size() == 108);
  std::set<std::uint64_t> seeds;
  for (const auto& r : rows) {
    CHECK(r.ok());
    CHECK(r.rmse_baseline >= 0.0);
    seeds.insert(r.seed);
  }
  CHECK(seeds.size() == 108);
}

TEST_CASE("failure cells replay the healthy cell's realization") {
  harness::SweepSpec spec;
  spec.waves = {"W2"};
  spec.heights = {1.0};
  spec.poses = {"P5"};
  spec.controllers = {sim::ControllerKind::kBaseline};
  spec.failures = {"none", "2"};
  spec.base.duration = 0.3;
  spec.write_traces = false;
  spec.out_dir = scratch_dir("paired").string();
  const auto rows = harness::run_sweep(spec, sim::EpisodeConfig{}, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].failure == "none");
  CHECK(rows[1].failure == "2");
  CHECK(rows[0].seed == rows[1].seed); // same sea, same noise: a paired design
  CHECK(rows[0].ok());
  CHECK(rows[1].ok());
}

TEST_CASE("plot emission produces the documented shapes") {
  const fs::path dir = scratch_dir("plots");

  // spectra: three cases, peaks ordered by period (W1 shortest -> largest w_p)
  const std::string spectra = (dir / "spectra.csv").string();
  harness::emit_plot_data("spectra", "", spectra, 3.0);
  std::ifstream in(spectra);
  std::string line;
  std::getline(in, line);
  CHECK(line == "case,omega,spectral_density");
  std::map<std::string, std::pair<double, double>> peak; // case -> (omega, S)
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cs, om, sv;
    std::getline(ls, cs, ',');
    std::getline(ls, om, ',');
    std::getline(ls, sv, ',');
    const double w = std::stod(om), s = std::stod(sv);
    CHECK(s >= 0.0);
    if (s > peak[cs].second) peak[cs] = {w, s};
    ++rows;
  }
  CHECK(rows == 150); // 3 cases x 50 components
  CHECK(peak["W1"].first > peak["W2"].first);
  CHECK(peak["W2"].first > peak["W3"].first);
  // peak frequency tracks 2*pi/Tp for each case
  CHECK(peak["W1"].first == doctest::Approx(2.0 * kPi / 6.1).epsilon(0.08));
  CHECK(peak["W3"].first == doctest::Approx(2.0 * kPi / 10.0).epsilon(0.08));

  // episode + star shapes come from a real trace
  sim::Scenario sc;
  sc.pose = "star";
  sc.hs = 1.0;
  sc.duration = 2.0;
  sc.controller = sim::ControllerKind::kBaseline;
  sim::EpisodeConfig cfg;
  const sim::Trace tr = sim::run_episode(sc, cfg);
  const std::string trace_path = (dir / "trace.csv").string();
  sim::write_trace_csv(tr, trace_path);

  const std::string episode = (dir / "episode.csv").string();
  harness::emit_plot_data("episode", trace_path, episode);
  const int n = tr.joints();
  CHECK(count_lines(episode) == 1 + tr.ticks() * (7 * n + 3));

  const std::string star = (dir / "star.csv").string();
  harness::emit_plot_data("star", trace_path, star);
  CHECK(count_lines(star) == 1 + tr.ticks());

  // ratio + failure shapes from a synthetic results table
  harness::ResultRow full, failed;
  full.wave = failed.wave = "W2";
  full.tp = failed.tp = 8.0;
  full.hs = failed.hs = 3.0;
  full.pose = failed.pose = "P6";
  full.rmse_mpc = 0.02;
  full.rmse_baseline = 0.2;
  full.ratio = 0.1;
  failed.failure = "2";
  failed.rmse_mpc = 0.025;
  failed.rmse_baseline = 0.25;
  failed.ratio = 0.1;
  const std::string results = (dir / "results.csv").string();
  harness::write_results_csv({full, failed}, results);

  const std::string ratio = (dir / "ratio.csv").string();
  harness::emit_plot_data("ratio", results, ratio);
  CHECK(count_lines(ratio) == 3); // header + both rows carry a ratio

  const std::string failure = (dir / "failure.csv").string();
  harness::emit_plot_data("failure", results, failure);
  std::ifstream fin(failure);
  std::getline(fin, line);
  CHECK(line == "wave,hs,pose,rmse_full,rmse_failed,increase_pct");
  REQUIRE(std::getline(fin, line));
  CHECK(line.find("W2,3,P6,0.02,0.025,25") == 0); // +25 percent
  CHECK(!std::getline(fin, line));

  CHECK_THROWS_AS(harness::emit_plot_data("histogram", "", (dir / "x.csv").string()),
                  std::invalid_argument);
}
