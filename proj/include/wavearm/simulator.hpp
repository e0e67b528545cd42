#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavearm/control.hpp"
#include "wavearm/types.hpp"
#include "wavearm/waves.hpp"

namespace wavearm::sim {

enum class ControllerKind { kMpc, kBaseline };

/// Actuation failure: the segment (1-based) stops receiving torque at `onset`.
struct FailureSpec {
  int segment = 1;
  double onset = 0.0; ///< s from episode start
};

/// Geometry of the star tracking path (task space, world frame).
struct StarPath {
  Vec2 center{0.45, -4.0};
  double r_outer = 0.25;
  double inner_ratio = 0.382; ///< inner radius as a fraction of r_outer
};

/// Reference point on the closed 5-pointed star polyline at time t. The path
/// is traversed at constant speed and closes over `duration`; t wraps.
Vec2 star_trajectory(double t, const StarPath& star, double duration);

/// One episode request. The sea comes from (tp, hs, seed) unless a tabulated
/// spectrum file is given. `pose` is a named setpoint P1..P6, "star", or a
/// literal "x,z" pair in world coordinates.
struct Scenario {
  double tp = 8.0;
  double hs = 2.0;
  std::uint64_t seed = 1;
  std::string spectrum_file;
  std::string pose = "P1";
  ControllerKind controller = ControllerKind::kMpc;
  double duration = 60.0;
  std::optional<FailureSpec> failure;
  double snr_db = 20.0;
  double base_depth = 4.0; ///< mount depth below the still-water line (m)
};

/// Everything an episode needs besides the scenario: the physical model, the
/// control stack tuning, and the sea-synthesis choices.
struct EpisodeConfig {
  ArmModel model = default_arm_model(3);
  ctrl::GainSet gains = ctrl::GainSet::defaults(3);
  ctrl::MpcSettings mpc = ctrl::MpcSettings::defaults(3);
  double command_limit = kPi; ///< symmetric box on commanded bend angles (rad)
  StarPath star;
  double water_depth = 20.0;
  double jonswap_gamma = 3.3;
  int wave_components = 50;
  double plant_rtol = 1e-8;
  double plant_atol = 1e-10;
};

/// Episode record on the 10 Hz control grid: one row per tick, matrices hold
/// one column per joint (or per component as documented).
struct Trace {
  double dt = 0.1;
  std::vector<double> time;
  Mat q;           ///< bend angles (rad)
  Mat qd;          ///< bend rates (rad/s)
  Mat tips;        ///< segment tip positions, columns x1,z1,...,xn,zn (m)
  Mat tau;         ///< torque commanded at the tick (N*m)
  Mat fe_true;     ///< true generalized wave load at the tick (N*m)
  Mat fe_forecast; ///< controller's corrupted step-0 forecast; zero for baseline
  std::vector<double> zeta;        ///< surface elevation above the mount (m)
  Mat ref;                         ///< task-space reference, columns x,z (m)
  std::vector<double> solver_cost; ///< MPC objective per tick (0 for baseline)
  std::vector<int> solver_iters;   ///< optimizer iterations per tick

  int ticks() const { return static_cast<int>(time.size()); }
  int joints() const { return static_cast<int>(q.cols()); }
};

/// Raised when the plant integrator cannot continue; carries the episode time.
class EpisodeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Named setpoints of the experiment grid (world frame, m).
Vec2 pose_target(const std::string& name);

/// Sea-state realization for a scenario. hs == 0 gives a calm (component-free)
/// sea. The realization depends only on (wave parameters, seed), never on the
/// controller, so compared controllers face identical waves.
SeaState make_sea(const Scenario& s, const EpisodeConfig& cfg);

/// Additive white Gaussian corruption of a forecast sequence at a given SNR:
/// noise variance = (mean squared entry over the whole window) / 10^(db/10).
/// A zero signal stays exactly zero.
void corrupt_estimate(std::vector<Vec>& fe, double snr_db, std::uint64_t seed);

/// Rest shape whose tip reaches `target`, found by iterating the kinematic
/// planner to convergence. Throws EpisodeError if the target is unreachable.
Vec solve_pose_ik(const Vec2& target, const EpisodeConfig& cfg);

/// Runs one full episode and records the trace. Deterministic given the
/// scenario (including seeds) and config.
Trace run_episode(const Scenario& s, const EpisodeConfig& cfg);

/// Root-mean-square Euclidean end-effector error against the embedded
/// reference, over the control grid (m).
double rmse(const Trace& trace);
/// Same, against a caller-supplied reference sampled on the same grid.
double rmse(const Trace& trace, const std::vector<Vec2>& reference);

/// rmse(mpc)/rmse(baseline); throws std::invalid_argument when the baseline
/// error is zero.
double error_ratio(const Trace& mpc, const Trace& baseline);

/// CSV round-trip. Columns, in order: t, q1..qn, qd1..qdn, tip1x, tip1z, ...,
/// tipnx, tipnz, tau1..taun, fe1..fen, fef1..fefn, zeta, refx, refz, cost,
/// iters. Doubles use shortest round-trip formatting, so a reread trace is
/// bit-identical.
void write_trace_csv(const Trace& trace, const std::string& path);
Trace read_trace_csv(const std::string& path);

} // namespace wavearm::sim
