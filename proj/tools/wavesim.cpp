// Command-line front end: single episodes, sweep matrices, and plot-data
// emission, all driven by the same config format.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wavearm/harness.hpp"

namespace {

using namespace wavearm;

int run_single(const sim::Scenario& scenario, const sim::EpisodeConfig& cfg,
               const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string name = scenario.controller == sim::ControllerKind::kMpc
                               ? "mpc"
                               : "baseline";
  const auto t0 = std::chrono::steady_clock::now();
  const sim::Trace trace = sim::run_episode(scenario, cfg);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string trace_path = (fs::path(out_dir) / ("trace_" + name + ".csv")).string();
  sim::write_trace_csv(trace, trace_path);

  double mean_cost = 0.0, mean_iters = 0.0, max_fe = 0.0;
  for (int k = 0; k < trace.ticks(); ++k) {
    mean_cost += trace.solver_cost[k];
    mean_iters += trace.solver_iters[k];
    for (int i = 0; i < trace.joints(); ++i)
      max_fe = std::max(max_fe, std::abs(trace.fe_true(k, i)));
  }
  if (trace.ticks() > 0) {
    mean_cost /= trace.ticks();
    mean_iters /= trace.ticks();
  }
  const double err = sim::rmse(trace);

  nlohmann::json summary{{"pose", scenario.pose},
                         {"tp", scenario.tp},
                         {"hs", scenario.hs},
                         {"controller", name},
                         {"failure", scenario.failure
                                         ? std::to_string(scenario.failure->segment) +
                                               "@" + std::to_string(scenario.failure->onset)
                                         : "none"},
                         {"seed", scenario.seed},
                         {"snr_db", scenario.snr_db},
                         {"duration", scenario.duration},
                         {"rmse", err},
                         {"max_fe", max_fe},
                         {"mean_cost", mean_cost},
                         {"mean_iterations", mean_iters},
                         {"runtime_s", runtime},
                         {"trace", trace_path}};
  const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
  std::ofstream json_out(summary_path);
  json_out << summary.dump(2) << "\n";

  std::printf("%s pose=%s Tp=%.3g Hs=%.3g seed=%llu rmse=%.6g m (%.1f s)\n",
              name.c_str(), scenario.pose.c_str(), scenario.tp, scenario.hs,
              static_cast<unsigned long long>(scenario.seed), err, runtime);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"planar soft-arm wave-disturbance benchmark"};

  std::string wave = "W2", pose = "P1", controller = "mpc", failure = "none";
  std::string out = "results", sweep_file, config_file, spectrum_file;
  std::string plot_class, plot_input, plot_out = "plot.csv";
  double hs = 2.0, snr = 20.0, duration = 60.0, plot_hs = 3.0;
  std::uint64_t seed = 1;
  int jobs = 1;

  app.add_option("--wave", wave, "wave case W1|W2|W3, or a numeric peak period (s)");
  app.add_option("--hs", hs, "significant wave height (m); <= 0 means calm water");
  app.add_option("--pose", pose, "target: P1..P6, 'star', or 'x,z'");
  app.add_option("--controller", controller, "mpc | baseline")
      ->check(CLI::IsMember({"mpc", "baseline"}));
  app.add_option("--failure", failure, "none, <segment>, or <segment>@<onset s>");
  app.add_option("--seed", seed, "episode seed (single run) or master seed (sweep)");
  app.add_option("--snr", snr, "forecast signal-to-noise ratio (dB)");
  app.add_option("--duration", duration, "episode length (s)");
  app.add_option("--spectrum", spectrum_file, "tabulated spectrum CSV instead of --wave/--hs");
  app.add_option("--config", config_file, "sectioned key=value file with model/control settings");
  app.add_option("--out", out, "output directory");
  app.add_option("--sweep", sweep_file, "run the experiment matrix described by this file");
  app.add_option("--jobs", jobs, "worker threads for --sweep")->check(CLI::PositiveNumber);
  app.add_option("--plot", plot_class, "emit plot data: spectra|episode|ratio|failure|star");
  app.add_option("--plot-input", plot_input, "trace or results CSV feeding --plot");
  app.add_option("--plot-out", plot_out, "output CSV for --plot");
  app.add_option("--plot-hs", plot_hs, "wave height for --plot spectra");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const harness::ConfigMap cfg_map =
        config_file.empty() ? harness::ConfigMap{} : harness::load_config(config_file);

    if (!plot_class.empty()) {
      harness::emit_plot_data(plot_class, plot_input, plot_out, plot_hs);
      std::printf("wrote %s\n", plot_out.c_str());
      return 0;
    }

    if (!sweep_file.empty()) {
      harness::ConfigMap merged = cfg_map;
      for (const auto& [key, value] : harness::load_config(sweep_file))
        merged[key] = value;
      harness::SweepSpec spec = harness::sweep_from_config(merged);
      if (app.count("--seed") > 0) spec.master_seed = seed;
      if (app.count("--out") > 0) spec.out_dir = out;
      const sim::EpisodeConfig cfg = harness::episode_config(merged);

      const auto rows = harness::run_sweep(spec, cfg, jobs);
      bool clean = true;
      for (const auto& row : rows) {
        if (row.ok()) {
          std::printf("%-22s rmse_mpc=%-10.6g rmse_pd=%-10.6g ratio=%.4f\n",
                      harness::cell_stem(row.wave, row.hs, row.pose, row.failure).c_str(),
                      row.rmse_mpc, row.rmse_baseline, row.ratio);
        } else {
          clean = false;
          std::fprintf(stderr, "%-22s FAILED: %s\n",
                       harness::cell_stem(row.wave, row.hs, row.pose, row.failure).c_str(),
                       row.error.c_str());
        }
      }
      std::printf("results in %s\n", spec.out_dir.c_str());
      return clean ? 0 : 1;
    }

    sim::Scenario scenario;
    scenario.tp = harness::wave_case_tp(wave);
    scenario.hs = hs;
    scenario.seed = seed;
    scenario.spectrum_file = spectrum_file;
    scenario.pose = pose;
    scenario.controller = controller == "mpc" ? sim::ControllerKind::kMpc
                                              : sim::ControllerKind::kBaseline;
    scenario.duration = duration;
    scenario.failure = harness::parse_failure(failure);
    scenario.snr_db = snr;
    harness::apply_episode_section(cfg_map, scenario);
    if (app.count("--snr") > 0) scenario.snr_db = snr;
    if (app.count("--duration") > 0) scenario.duration = duration;

    return run_single(scenario, harness::episode_config(cfg_map), out);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
