#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wavearm/simulator.hpp"

namespace wavearm::harness {

/// Flat view of a sectioned key-value file: "section.key" -> raw value.
/// Lines are `key = value`, sections are `[name]`, comments start with # or ;.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& in);
ConfigMap load_config(const std::string& path);

/// Lookup helpers with typed defaults; throw std::invalid_argument on a value
/// that does not parse.
double config_double(const ConfigMap& c, const std::string& key, double fallback);
int config_int(const ConfigMap& c, const std::string& key, int fallback);
std::string config_str(const ConfigMap& c, const std::string& key,
                       const std::string& fallback);
std::vector<std::string> config_list(const ConfigMap& c, const std::string& key);

/// Builds the physics/control stack from the [arm], [hydro], [waves],
/// [control], and [star] sections, starting from the library defaults.
sim::EpisodeConfig episode_config(const ConfigMap& c);

/// Fills scenario-level defaults (duration, snr_db, base depth) from the
/// [episode] section.
void apply_episode_section(const ConfigMap& c, sim::Scenario& s);

/// Named wave cases of the experiment grid: W1, W2, W3 -> peak period; any
/// other token must parse as a numeric Tp.
double wave_case_tp(const std::string& name);

/// Parses "none", "<segment>", or "<segment>@<onset>".
std::optional<sim::FailureSpec> parse_failure(const std::string& text);

/// One experiment matrix: the cross product of waves x heights x poses x
/// failure variants, each cell run with every listed controller.
struct SweepSpec {
  std::vector<std::string> waves{"W1", "W2", "W3"};
  std::vector<double> heights{1.5, 3.0};
  std::vector<std::string> poses{"P1", "P3", "P6"};
  std::vector<sim::ControllerKind> controllers{sim::ControllerKind::kMpc,
                                               sim::ControllerKind::kBaseline};
  std::vector<std::string> failures{"none"};
  std::uint64_t master_seed = 1;
  std::string out_dir = "results";
  bool write_traces = true;
  sim::Scenario base; ///< template for every cell: duration, snr_db, base depth
};

/// Reads the [sweep] section (waves, hs, poses, controllers, failures, seed,
/// out) on top of the defaults above.
SweepSpec sweep_from_config(const ConfigMap& c);

/// One line of the result table: a single cell of the matrix with both
/// controllers' errors side by side.
struct ResultRow {
  std::string wave;
  double tp = 0.0;
  double hs = 0.0;
  std::string pose;
  std::string failure = "none";
  std::uint64_t seed = 0; ///< episode seed derived from the master seed
  double rmse_mpc = -1.0; ///< negative = not run / failed
  double rmse_baseline = -1.0;
  double ratio = -1.0;
  double max_fe = -1.0;    ///< largest |F_E| entry seen in the cell (N*m)
  double runtime_s = 0.0;  ///< wall time spent on the cell's episodes
  std::string error;       ///< first failure message, empty when clean

  bool ok() const { return error.empty(); }
};

/// Stable per-cell seed: mixes the master seed with the cell identifiers so
/// results never depend on execution order or parallelism. The failure mode is
/// deliberately not part of the hash — a failure cell replays the exact sea
/// state and sensor noise of its healthy counterpart, so degradation numbers
/// come from a paired comparison rather than two unrelated realizations.
std::uint64_t cell_seed(std::uint64_t master, const std::string& wave, double hs,
                        const std::string& pose);

/// File-name stem for a cell ("W2_hs3.00_P3_none").
std::string cell_stem(const std::string& wave, double hs, const std::string& pose,
                      const std::string& failure);

/// Runs the whole matrix with `jobs` worker threads. Each episode's trace is
/// written to `<out_dir>/trace_<stem>_<controller>.csv`; the table goes to
/// `<out_dir>/results.csv` and `<out_dir>/results.json`. Episode errors are
/// recorded in the row and the sweep continues.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, const sim::EpisodeConfig& cfg,
                                 int jobs);

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_results_csv(const std::string& path);
void write_results_json(const std::vector<ResultRow>& rows, const std::string& path);

/// Plot-ready tidy CSV emission. `figure_class` selects the shape:
///   spectra  - input ignored; emits (case, omega, spectral_density) for
///              W1-W3 at the given Hs
///   episode  - input = one trace CSV; emits (t, series, value) long format
///   ratio    - input = results CSV; emits (wave, tp, hs, pose, ratio)
///   failure  - input = results CSV with failure and none rows; emits
///              (wave, hs, pose, rmse_full, rmse_failed, increase_pct)
///   star     - input = one star-episode trace CSV; emits
///              (t, ref_x, ref_z, tip_x, tip_z)
/// Throws std::invalid_argument for an unknown class.
void emit_plot_data(const std::string& figure_class, const std::string& input,
                    const std::string& output, double hs = 3.0);

} // namespace wavearm::harness
