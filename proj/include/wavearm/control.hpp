#pragma once

#include <vector>

#include "wavearm/dynamics.hpp"
#include "wavearm/ode.hpp"
#include "wavearm/types.hpp"
#include "wavearm/waves.hpp"

namespace wavearm::ctrl {

/// Joint-space command for the low-level torque law; the only quantity the
/// planners (kinematic loop or receding-horizon optimizer) produce.
struct ControlCommand {
  Vec q_bar;
};

/// Componentwise command box, applied by projection/clamping everywhere a
/// command is produced.
struct CommandBounds {
  Vec lower;
  Vec upper;

  static CommandBounds symmetric(int n, double limit = kPi);
  Vec clamp(const Vec& q_bar) const;
};

struct GainSet {
  Vec alpha;        ///< proportional joint-space gain (diagonal entries)
  Vec beta;         ///< rate-damping joint-space gain (diagonal entries)
  double planner_gain = 1.5; ///< task-space gain of the kinematic planning loop
  Mat2 q_weight;    ///< tip-error weight of the receding-horizon cost
  Mat r_weight;     ///< command-increment weight of the receding-horizon cost

  static GainSet defaults(int n);
};

struct MpcSettings {
  double dt = 0.1;              ///< control interval (s)
  int horizon_K = 15;           ///< prediction steps
  int max_iters = 30;           ///< optimizer iteration cap per tick
  double fd_step = 1e-4;        ///< forward-difference step on commands (rad)
  std::vector<bool> actuation_mask; ///< false = passive segment (zero torque)
  int fd_tail_steps = 3;        ///< steps of influence kept per gradient entry
  double prediction_rtol = 1e-5;
  double prediction_atol = 1e-7;

  static MpcSettings defaults(int n);
};

/// Low-level torque law shared by both controllers: stiffness/hydrostatic
/// feedforward at the commanded shape plus proportional-derivative feedback,
/// with masked (passive) joints forced to zero torque.
Vec feedforward_pd(const Vec& q_bar, const Vec& q, const Vec& qdot,
                   const GainSet& gains, const ArmModel& model,
                   const std::vector<bool>& mask);

/// One step of the resolved-rate kinematic planner: moves the commanded shape
/// along the damped pseudo-inverse of the tip Jacobian toward the task-space
/// target, then clamps to bounds. This is the baseline's entire planning law.
ControlCommand kinematic_plan_step(const Vec2& x_target, const Vec& q_bar_prev,
                                   const GainSet& gains, const ArmModel& model,
                                   double dt, const CommandBounds& bounds);

/// Generalized wave-load sequence over the horizon: rolls the closed-loop
/// prediction model forward under `plan` and samples the generalized
/// disturbance at the start of every step. The caller may corrupt the result
/// (estimation noise) before handing it to the optimizer.
std::vector<Vec> disturbance_forecast(const SeaState& sea, const Vec& q,
                                      const Vec& qdot, const std::vector<Vec>& plan,
                                      double t_now, const MpcSettings& settings,
                                      const GainSet& gains, const ArmModel& model);

struct MpcResult {
  std::vector<Vec> plan; ///< optimized command sequence, length horizon_K
  double cost = 0.0;
  double warm_cost = 0.0;
  int iterations = 0;
  bool hit_iteration_cap = false;
};

/// Receding-horizon command optimizer. Cost over the horizon:
///   sum_k (tip_{k+1} - ref_k)' Q (tip_{k+1} - ref_k) + dq_k' R dq_k,
/// with dq_k the command increment (against the previously applied command
/// for k = 0). The predicted states evolve under the same dynamics code as
/// the plant, closed around feedforward_pd, with the supplied per-step
/// generalized disturbance held constant across each step. Minimization is
/// projected gradient descent with spectral (Barzilai-Borwein) step lengths,
/// a monotone backtracking line search, and forward-difference gradients
/// that re-integrate only the horizon tail a perturbation can affect. The
/// returned cost never exceeds the warm start's.
class MpcController {
public:
  MpcController(ArmModel model, GainSet gains, MpcSettings settings,
                CommandBounds bounds);

  /// Solves one tick. `x_ref` holds horizon_K tip targets (for the tips after
  /// steps 1..K), `fe_forecast` horizon_K generalized-force samples.
  /// `q_bar_prev` is the command applied during the previous tick, seeding
  /// both the increment penalty and the shifted warm start.
  const MpcResult& solve(const Vec& q, const Vec& qdot, const Vec& q_bar_prev,
                         const std::vector<Vec2>& x_ref,
                         const std::vector<Vec>& fe_forecast);

  /// Shifted warm start for the upcoming tick (last solve's plan advanced by
  /// one step, final entry repeated).
  const std::vector<Vec>& warm_plan() const { return warm_; }

  /// Resets the warm start (start of an episode) to a constant plan.
  void reset(const Vec& q_bar);

  const MpcSettings& settings() const { return settings_; }
  const GainSet& gains() const { return gains_; }
  const ArmModel& model() const { return model_; }

private:
  struct Rollout {
    std::vector<Vec> states;     ///< K+1 stacked (q, qdot) states
    std::vector<double> h_last;  ///< accepted step per interval, for reseeding
    std::vector<double> tip_cost;///< per-step tip-error terms
    std::vector<double> pen_cost;///< per-step increment penalties
    double total = 0.0;
  };

  double step_cost_tip(const Vec& state, const Vec2& ref) const;
  double step_cost_increment(const Vec& cmd, const Vec& prev) const;
  void integrate_step(const Vec& q_bar, const Vec& fe, Vec& state, double h_seed,
                      double* h_out);
  void rollout(const std::vector<Vec>& plan, const Vec& init_state,
               const Vec& q_bar_prev, const std::vector<Vec2>& x_ref,
               const std::vector<Vec>& fe, Rollout& out);
  void gradient(const std::vector<Vec>& plan, const Rollout& base,
                const Vec& q_bar_prev, const std::vector<Vec2>& x_ref,
                const std::vector<Vec>& fe, std::vector<Vec>& grad);

  ArmModel model_;
  GainSet gains_;
  MpcSettings settings_;
  CommandBounds bounds_;
  dyn::LumpedModel lumped_;
  MpcResult result_;
  std::vector<Vec> warm_;
  std::vector<int> free_joints_;
  Rollout base_, probe_;
  kin::NodeSweep ff_sweep_;
  Vec ff_scratch_, state_scratch_;
};

} // namespace wavearm::ctrl
