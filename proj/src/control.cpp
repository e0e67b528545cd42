#include "wavearm/control.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wavearm/hydro.hpp"
#include "wavearm/kinematics.hpp"

namespace wavearm::ctrl {

CommandBounds CommandBounds::symmetric(int n, double limit) {
  CommandBounds b;
  b.lower = Vec::Constant(n, -limit);
  b.upper = Vec::Constant(n, limit);
  return b;
}

Vec CommandBounds::clamp(const Vec& q_bar) const {
  return q_bar.cwiseMax(lower).cwiseMin(upper);
}

GainSet GainSet::defaults(int n) {
  GainSet g;
  g.alpha = Vec::Constant(n, 3.0);
  g.beta = Vec::Constant(n, 0.2);
  g.planner_gain = 1.5;
  g.q_weight = 100.0 * Mat2::Identity();
  g.r_weight = Mat::Identity(n, n);
  return g;
}

MpcSettings MpcSettings::defaults(int n) {
  MpcSettings s;
  s.actuation_mask.assign(n, true);
  return s;
}

namespace {

void check_gains(const GainSet& gains, int n) {
  if (gains.alpha.size() != n || gains.beta.size() != n)
    throw std::invalid_argument("gain vectors do not match segment count");
  if (gains.r_weight.rows() != n || gains.r_weight.cols() != n)
    throw std::invalid_argument("increment weight does not match segment count");
}

void check_mask(const std::vector<bool>& mask, int n) {
  if (static_cast<int>(mask.size()) != n)
    throw std::invalid_argument("actuation mask does not match segment count");
}

} // namespace

Vec feedforward_pd(const Vec& q_bar, const Vec& q, const Vec& qdot,
                   const GainSet& gains, const ArmModel& model,
                   const std::vector<bool>& mask) {
  const int n = model.geom.count;
  if (q_bar.size() != n || q.size() != n || qdot.size() != n)
    throw std::invalid_argument("state sizes do not match segment count");
  check_gains(gains, n);
  check_mask(mask, n);

  Vec tau = dyn::stiffness_vector(q_bar, model.dyn) +
            dyn::gravity_buoyancy(q_bar, model.geom, model.dyn, model.base);
  tau += gains.alpha.cwiseProduct(q_bar - q);
  tau -= gains.beta.cwiseProduct(qdot);
  for (int i = 0; i < n; ++i)
    if (!mask[i]) tau[i] = 0.0;
  return tau;
}

ControlCommand kinematic_plan_step(const Vec2& x_target, const Vec& q_bar_prev,
                                   const GainSet& gains, const ArmModel& model,
                                   double dt, const CommandBounds& bounds) {
  const int n = model.geom.count;
  if (q_bar_prev.size() != n)
    throw std::invalid_argument("command size does not match segment count");
  const kin::PointPose tip =
      kin::forward_kinematics(q_bar_prev, n - 1, 1.0, model.base, model.geom);
  const Mat jac = kin::jacobian(q_bar_prev, n - 1, 1.0, model.base, model.geom);

  // damped least-squares pseudo-inverse keeps the update bounded through
  // singular shapes (straight arm, folded arm)
  const double lambda = 1e-4;
  Mat2 gram = jac * jac.transpose();
  gram += lambda * lambda * Mat2::Identity();
  const Vec2 task_rate = gains.planner_gain * (x_target - tip.position);
  const Vec rate = jac.transpose() * gram.ldlt().solve(task_rate);

  ControlCommand out;
  out.q_bar = bounds.clamp(q_bar_prev + dt * rate);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// closed-loop derivative of the prediction model: torque law folded around
// the lumped dynamics with a per-step frozen generalized disturbance
struct PredictionStep {
  dyn::LumpedModel& lumped;
  const GainSet& gains;
  const std::vector<bool>& mask;
  const Vec& ff;    // stiffness+hydrostatic feedforward at q_bar
  const Vec& q_bar;
  const Vec& fe;
  Vec tau;

  void operator()(double, const Vec& s, Vec& ds) {
    const int n = static_cast<int>(q_bar.size());
    const auto q = s.head(n);
    const auto qd = s.tail(n);
    lumped.eval(q, qd, true);
    tau = ff;
    for (int i = 0; i < n; ++i) {
      tau[i] += gains.alpha[i] * (q_bar[i] - q[i]) - gains.beta[i] * qd[i];
      if (!mask[i]) tau[i] = 0.0;
    }
    ds.resize(2 * n);
    ds.head(n) = qd;
    ds.tail(n) = lumped.accel(tau, fe);
  }
};

void feedforward_into(const Vec& q_bar, const ArmModel& model, double node_weight,
                      kin::NodeSweep& sweep, Vec& ff) {
  kin::sweep_nodes(q_bar, model.base, model.geom, model.dyn.nodes_per_segment, {},
                   sweep);
  ff = model.dyn.stiffness.cwiseProduct(q_bar);
  for (const Mat& jac : sweep.jac) ff += node_weight * jac.row(1).transpose();
}

} // namespace

std::vector<Vec> disturbance_forecast(const SeaState& sea, const Vec& q,
                                      const Vec& qdot, const std::vector<Vec>& plan,
                                      double t_now, const MpcSettings& settings,
                                      const GainSet& gains, const ArmModel& model) {
  const int n = model.geom.count;
  const int K = settings.horizon_K;
  if (static_cast<int>(plan.size()) != K)
    throw std::invalid_argument("plan length does not match the horizon");
  check_gains(gains, n);
  check_mask(settings.actuation_mask, n);

  dyn::LumpedModel lumped(model);
  kin::NodeSweep ff_sweep;
  Vec ff(n);
  Vec state(2 * n);
  state.head(n) = q;
  state.tail(n) = qdot;

  ode::Options opt;
  opt.rtol = settings.prediction_rtol;
  opt.atol = settings.prediction_atol;

  std::vector<Vec> fe(K);
  double h_seed = 0.0;
  for (int k = 0; k < K; ++k) {
    fe[k] = hydro::generalized_disturbance(state.head(n), state.tail(n), sea,
                                           t_now + k * settings.dt, model.base,
                                           model.geom, model.hydro, model.dyn)
                .force;
    feedforward_into(plan[k], model, lumped.node_weight(), ff_sweep, ff);
    PredictionStep f{lumped, gains, settings.actuation_mask, ff, plan[k], fe[k], Vec(n)};
    opt.h_init = h_seed;
    const ode::StepStats st = ode::integrate(
        f, t_now + k * settings.dt, t_now + (k + 1) * settings.dt, state, opt);
    h_seed = st.h_last;
  }
  return fe;
}

// ---------------------------------------------------------------------------

MpcController::MpcController(ArmModel model, GainSet gains, MpcSettings settings,
                             CommandBounds bounds)
    : model_(std::move(model)),
      gains_(std::move(gains)),
      settings_(std::move(settings)),
      bounds_(std::move(bounds)),
      lumped_(model_) {
  const int n = model_.geom.count;
  check_gains(gains_, n);
  check_mask(settings_.actuation_mask, n);
  if (bounds_.lower.size() != n || bounds_.upper.size() != n)
    throw std::invalid_argument("command bounds do not match segment count");
  if (settings_.horizon_K < 1) throw std::invalid_argument("horizon must be >= 1");
  if (settings_.dt <= 0.0) throw std::invalid_argument("control interval must be > 0");
  for (int i = 0; i < n; ++i)
    if (settings_.actuation_mask[i]) free_joints_.push_back(i);
  ff_scratch_ = Vec::Zero(n);
  state_scratch_ = Vec::Zero(2 * n);
}

void MpcController::reset(const Vec& q_bar) {
  warm_.assign(settings_.horizon_K, bounds_.clamp(q_bar));
}

double MpcController::step_cost_tip(const Vec& state, const Vec2& ref) const {
  const int n = model_.geom.count;
  const Vec2 tip =
      kin::forward_kinematics(state.head(n), n - 1, 1.0, model_.base, model_.geom)
          .position;
  const Vec2 err = tip - ref;
  return err.dot(gains_.q_weight * err);
}

double MpcController::step_cost_increment(const Vec& cmd, const Vec& prev) const {
  const Vec d = cmd - prev;
  return d.dot(gains_.r_weight * d);
}

void MpcController::integrate_step(const Vec& q_bar, const Vec& fe, Vec& state,
                                   double h_seed, double* h_out) {
  feedforward_into(q_bar, model_, lumped_.node_weight(), ff_sweep_, ff_scratch_);
  PredictionStep f{lumped_,      gains_, settings_.actuation_mask,
                   ff_scratch_,  q_bar,  fe,
                   Vec(model_.geom.count)};
  ode::Options opt;
  opt.rtol = settings_.prediction_rtol;
  opt.atol = settings_.prediction_atol;
  opt.h_init = h_seed;
  const ode::StepStats st = ode::integrate(f, 0.0, settings_.dt, state, opt);
  if (h_out) *h_out = st.h_last;
}

void MpcController::rollout(const std::vector<Vec>& plan, const Vec& init_state,
                            const Vec& q_bar_prev, const std::vector<Vec2>& x_ref,
                            const std::vector<Vec>& fe, Rollout& out) {
  const int K = settings_.horizon_K;
  const bool seeded = base_.h_last.size() == static_cast<size_t>(K);
  out.states.resize(K + 1);
  out.states[0] = init_state;
  out.h_last.resize(K);
  out.tip_cost.resize(K);
  out.pen_cost.resize(K);
  out.total = 0.0;
  for (int k = 0; k < K; ++k) {
    const double seed = seeded ? base_.h_last[k] : 0.0;
    Vec& next = out.states[k + 1];
    next = out.states[k];
    integrate_step(plan[k], fe[k], next, seed, &out.h_last[k]);
    out.tip_cost[k] = step_cost_tip(next, x_ref[k]);
    out.pen_cost[k] = step_cost_increment(plan[k], k == 0 ? q_bar_prev : plan[k - 1]);
    out.total += out.tip_cost[k] + out.pen_cost[k];
  }
}

void MpcController::gradient(const std::vector<Vec>& plan, const Rollout& base,
                             const Vec& q_bar_prev, const std::vector<Vec2>& x_ref,
                             const std::vector<Vec>& fe, std::vector<Vec>& grad) {
  const int n = model_.geom.count;
  const int K = settings_.horizon_K;
  const double h = settings_.fd_step;
  grad.assign(K, Vec::Zero(n));

  Vec cmd(n);
  for (int k = 0; k < K; ++k) {
    const int tail_end = std::min(K, k + std::max(1, settings_.fd_tail_steps));
    for (int i : free_joints_) {
      cmd = plan[k];
      cmd[i] += h;
      // re-integrate only the steps the perturbation can reach
      double delta = 0.0;
      state_scratch_ = base.states[k];
      for (int s = k; s < tail_end; ++s) {
        const Vec& use = s == k ? cmd : plan[s];
        integrate_step(use, fe[s], state_scratch_, base.h_last[s], nullptr);
        delta += step_cost_tip(state_scratch_, x_ref[s]) - base.tip_cost[s];
      }
      delta += step_cost_increment(cmd, k == 0 ? q_bar_prev : plan[k - 1]) -
               base.pen_cost[k];
      if (k + 1 < K)
        delta += step_cost_increment(plan[k + 1], cmd) - base.pen_cost[k + 1];
      grad[k][i] = delta / h;
    }
  }
}

const MpcResult& MpcController::solve(const Vec& q, const Vec& qdot,
                                      const Vec& q_bar_prev,
                                      const std::vector<Vec2>& x_ref,
                                      const std::vector<Vec>& fe_forecast) {
  const int n = model_.geom.count;
  const int K = settings_.horizon_K;
  if (q.size() != n || qdot.size() != n || q_bar_prev.size() != n)
    throw std::invalid_argument("state sizes do not match segment count");
  if (static_cast<int>(x_ref.size()) != K)
    throw std::invalid_argument("reference sequence does not match the horizon");
  if (static_cast<int>(fe_forecast.size()) != K)
    throw std::invalid_argument("disturbance sequence does not match the horizon");

  if (static_cast<int>(warm_.size()) != K) reset(q_bar_prev);
  std::vector<Vec> plan = warm_;
  for (Vec& p : plan) p = bounds_.clamp(p);

  Vec init_state(2 * n);
  init_state.head(n) = q;
  init_state.tail(n) = qdot;
  base_.h_last.clear();
  rollout(plan, init_state, q_bar_prev, x_ref, fe_forecast, base_);

  result_.warm_cost = base_.total;
  result_.plan = plan;
  result_.cost = base_.total;
  result_.iterations = 0;
  result_.hit_iteration_cap = false;

  std::vector<Vec> grad, grad_new, candidate(K, Vec(n));
  gradient(plan, base_, q_bar_prev, x_ref, fe_forecast, grad);

  double g_inf = 0.0;
  for (const Vec& g : grad) g_inf = std::max(g_inf, g.lpNorm<Eigen::Infinity>());
  double bb = g_inf > 1e-12 ? std::min(1.0, 1.0 / g_inf) : 1.0;

  double fx = base_.total;
  bool converged = false;
  for (int iter = 0; iter < settings_.max_iters && !converged; ++iter) {
    // projected spectral-gradient direction
    double d_inf = 0.0;
    double gd = 0.0;
    for (int k = 0; k < K; ++k) {
      candidate[k] = bounds_.clamp(plan[k] - bb * grad[k]);
      const Vec d = candidate[k] - plan[k];
      d_inf = std::max(d_inf, d.lpNorm<Eigen::Infinity>());
      gd += grad[k].dot(d);
    }
    if (d_inf <= 1e-7 || gd >= -1e-14) {
      converged = true;
      break;
    }

    // monotone backtracking line search on the exact rollout cost
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls) {
      std::vector<Vec> trial(K);
      for (int k = 0; k < K; ++k)
        trial[k] = t == 1.0 ? candidate[k] : Vec(plan[k] + t * (candidate[k] - plan[k]));
      rollout(trial, init_state, q_bar_prev, x_ref, fe_forecast, probe_);
      if (probe_.total <= fx + 1e-4 * t * gd) {
        result_.iterations = iter + 1;
        const double drop = fx - probe_.total;
        // A drop this small means the remaining head-room is negligible (the
        // accepted drops contract roughly geometrically), so skip the final
        // gradient evaluation -- it is the expensive part of an iteration.
        const bool small_drop = drop <= 1e-4 * std::max(probe_.total, 1e-12);
        if (!small_drop) {
          gradient(trial, probe_, q_bar_prev, x_ref, fe_forecast, grad_new);
          // spectral (Barzilai-Borwein) step from the accepted move
          double ss = 0.0, sy = 0.0;
          for (int k = 0; k < K; ++k) {
            const Vec s_vec = trial[k] - plan[k];
            ss += s_vec.squaredNorm();
            sy += s_vec.dot(grad_new[k] - grad[k]);
          }
          bb = sy > 1e-16 ? std::clamp(ss / sy, 1e-6, 1e6) : std::min(bb * 10.0, 1e6);
          grad.swap(grad_new);
        }
        plan = std::move(trial);
        fx = probe_.total;
        std::swap(base_, probe_);
        accepted = true;
        converged = small_drop;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) converged = true; // no descent available at this scale
  }

  if (fx < result_.cost) {
    result_.cost = fx;
    result_.plan = plan;
  }
  result_.hit_iteration_cap = !converged && result_.iterations >= settings_.max_iters;

  // shifted warm start for the next tick
  warm_.assign(result_.plan.begin() + 1, result_.plan.end());
  warm_.push_back(result_.plan.back());
  return result_;
}

} // namespace wavearm::ctrl
