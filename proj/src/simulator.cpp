#include "wavearm/simulator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "wavearm/dynamics.hpp"
#include "wavearm/hydro.hpp"
#include "wavearm/kinematics.hpp"
#include "wavearm/ode.hpp"
#include "wavearm/random.hpp"

namespace wavearm::sim {

namespace {

constexpr std::uint64_t kNoiseRole = 0x6e6f697365ULL; // "noise"

Vec2 last_tip(const Vec& q, const ArmModel& m) {
  return kin::forward_kinematics(q, m.geom.count - 1, 1.0, m.base, m.geom).position;
}

} // namespace

Vec2 star_trajectory(double t, const StarPath& star, double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("star duration must be positive");
  constexpr int kTips = 5;
  std::array<Vec2, 2 * kTips + 1> v;
  for (int k = 0; k < kTips; ++k) {
    const double ao = kPi / 2.0 + k * 2.0 * kPi / kTips;
    const double ai = ao + kPi / kTips;
    v[2 * k] = star.center + star.r_outer * Vec2(std::cos(ao), std::sin(ao));
    v[2 * k + 1] =
        star.center + star.inner_ratio * star.r_outer * Vec2(std::cos(ai), std::sin(ai));
  }
  v[2 * kTips] = v[0];

  std::array<double, 2 * kTips> len;
  double total = 0.0;
  for (int e = 0; e < 2 * kTips; ++e) {
    len[e] = (v[e + 1] - v[e]).norm();
    total += len[e];
  }

  double s = std::fmod(total / duration * t, total);
  if (s < 0.0) s += total;
  for (int e = 0; e < 2 * kTips; ++e) {
    if (s <= len[e] || e == 2 * kTips - 1) {
      const double a = len[e] > 0.0 ? s / len[e] : 0.0;
      return v[e] + a * (v[e + 1] - v[e]);
    }
    s -= len[e];
  }
  return v[0]; // unreachable
}

Vec2 pose_target(const std::string& name) {
  if (name == "P1") return {0.3, -3.7};
  if (name == "P2") return {0.5, -3.7};
  if (name == "P3") return {0.7, -3.7};
  if (name == "P4") return {0.3, -4.3};
  if (name == "P5") return {0.5, -4.3};
  if (name == "P6") return {0.7, -4.3};
  // literal "x,z"
  const auto comma = name.find(',');
  if (comma != std::string::npos) {
    double x = 0.0, z = 0.0;
    const char* b = name.data();
    const auto r1 = std::from_chars(b, b + comma, x);
    const auto r2 = std::from_chars(b + comma + 1, b + name.size(), z);
    if (r1.ec == std::errc{} && r2.ec == std::errc{} &&
        r2.ptr == b + name.size())
      return {x, z};
  }
  throw std::invalid_argument("unknown pose: " + name);
}

SeaState make_sea(const Scenario& s, const EpisodeConfig& cfg) {
  if (!s.spectrum_file.empty())
    return synthesize_from_table(load_spectrum(s.spectrum_file), cfg.water_depth, s.seed);
  if (s.hs <= 0.0) { // calm water: no components at all
    SeaState calm;
    calm.depth = cfg.water_depth;
    calm.seed = s.seed;
    return calm;
  }
  return synthesize_jonswap(s.hs, s.tp, cfg.jonswap_gamma, cfg.wave_components,
                            cfg.water_depth, s.seed);
}

void corrupt_estimate(std::vector<Vec>& fe, double snr_db, std::uint64_t seed) {
  if (fe.empty()) return;
  double power = 0.0;
  long count = 0;
  for (const Vec& f : fe) {
    power += f.squaredNorm();
    count += f.size();
  }
  if (count == 0) return;
  power /= static_cast<double>(count);
  if (power <= 0.0) return; // zero signal stays exactly zero
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  rng::Stream g(seed);
  for (Vec& f : fe)
    for (int i = 0; i < f.size(); ++i) f[i] += sigma * g.gaussian();
}

Vec solve_pose_ik(const Vec2& target, const EpisodeConfig& cfg) {
  const int n = cfg.model.geom.count;
  const auto bounds = ctrl::CommandBounds::symmetric(n, cfg.command_limit);

  // The resolved-rate flow has local traps for curl-back targets, so descend
  // from a fixed lattice of start shapes and keep the gentlest solution.
  const std::array<double, 5> lattice{0.1, -1.3, 1.3, -2.6, 2.6};
  const int starts = static_cast<int>(std::pow(lattice.size(), n) + 0.5);
  Vec best_q = Vec::Constant(n, 0.1);
  double best_res = 1e300;
  double best_norm = 1e300;
  for (int s = 0; s < starts; ++s) {
    Vec q(n);
    int code = s;
    for (int i = 0; i < n; ++i) {
      q[i] = lattice[code % lattice.size()];
      code /= static_cast<int>(lattice.size());
    }
    for (int it = 0; it < 300; ++it) {
      q = ctrl::kinematic_plan_step(target, q, cfg.gains, cfg.model, 0.05, bounds).q_bar;
      if ((target - last_tip(q, cfg.model)).norm() < 1e-12) break;
    }
    const double res = (target - last_tip(q, cfg.model)).norm();
    const double qn = q.norm();
    const bool solved = res <= 1e-9;
    const bool best_solved = best_res <= 1e-9;
    if ((solved && (!best_solved || qn < best_norm)) ||
        (!solved && !best_solved && res < best_res)) {
      best_q = q;
      best_res = res;
      best_norm = qn;
    }
  }
  for (int it = 0; it < 2000 && best_res > 1e-12; ++it) {
    best_q =
        ctrl::kinematic_plan_step(target, best_q, cfg.gains, cfg.model, 0.05, bounds).q_bar;
    best_res = (target - last_tip(best_q, cfg.model)).norm();
  }
  // Targets a few millimetres past the workspace boundary (P3 sits ~12 mm
  // outside it) still get a start shape: the episode then regulates toward
  // the true reference from the closest reachable point.
  if (best_res > 0.05) {
    std::ostringstream msg;
    msg << "pose target (" << target.x() << ", " << target.y()
        << ") unreachable: residual " << best_res << " m";
    throw EpisodeError(msg.str());
  }
  return best_q;
}

Trace run_episode(const Scenario& s, const EpisodeConfig& cfg) {
  const int n = cfg.model.geom.count;
  if (!(s.duration > 0.0)) throw std::invalid_argument("episode duration must be positive");
  if (!std::isfinite(s.snr_db)) throw std::invalid_argument("snr_db must be finite");
  if (s.failure && (s.failure->segment < 1 || s.failure->segment > n))
    throw std::invalid_argument("failure segment index out of 1..n");

  EpisodeConfig local = cfg;
  local.model.base.position = Vec2(0.0, -s.base_depth);
  const ArmModel& model = local.model;

  const SeaState sea = make_sea(s, local);
  const bool star_task = s.pose == "star";
  const Vec2 setpoint = star_task ? Vec2::Zero() : pose_target(s.pose);
  auto ref_at = [&](double t) {
    return star_task ? star_trajectory(t, local.star, s.duration) : setpoint;
  };

  const double dt = local.mpc.dt;
  const int ticks = std::max(1, static_cast<int>(std::lround(s.duration / dt)));
  const int K = local.mpc.horizon_K;

  // actuation mask before/after the failure onset
  std::vector<bool> mask_full(n, true), mask_failed(n, true);
  if (s.failure) mask_failed[s.failure->segment - 1] = false;
  auto mask_at = [&](double t) -> const std::vector<bool>& {
    return (s.failure && t >= s.failure->onset - 1e-12) ? mask_failed : mask_full;
  };

  const Vec q0 = solve_pose_ik(ref_at(0.0), local);
  Vec state(2 * n);
  state.head(n) = q0;
  state.tail(n).setZero();
  Vec q_bar = q0;

  const auto bounds = ctrl::CommandBounds::symmetric(n, local.command_limit);
  ctrl::MpcSettings mset = local.mpc;
  mset.actuation_mask = mask_at(0.0);
  std::optional<ctrl::MpcController> mpc;
  if (s.controller == ControllerKind::kMpc) {
    mpc.emplace(model, local.gains, mset, bounds);
    mpc->reset(q0);
  }
  const std::uint64_t noise_master = rng::derive_seed(s.seed, kNoiseRole);

  dyn::LumpedModel lumped(model);
  hydro::Disturbance dist;
  const bool need_acc = model.hydro.include_fluid_acceleration;

  Trace tr;
  tr.dt = dt;
  tr.time.resize(ticks);
  tr.q.setZero(ticks, n);
  tr.qd.setZero(ticks, n);
  tr.tips.setZero(ticks, 2 * n);
  tr.tau.setZero(ticks, n);
  tr.fe_true.setZero(ticks, n);
  tr.fe_forecast.setZero(ticks, n);
  tr.zeta.resize(ticks);
  tr.ref.setZero(ticks, 2);
  tr.solver_cost.assign(ticks, 0.0);
  tr.solver_iters.assign(ticks, 0);

  std::vector<Vec2> refs(K);
  ode::Options plant_opt;
  plant_opt.rtol = local.plant_rtol;
  plant_opt.atol = local.plant_atol;
  double h_seed = 0.0;

  for (int k = 0; k < ticks; ++k) {
    const double t = k * dt;
    const Vec q = state.head(n);
    const Vec qd = state.tail(n);
    const std::vector<bool>& mask = mask_at(t);

    // a failure onset mid-episode swaps in a controller that knows the mask
    if (mpc && mset.actuation_mask != mask) {
      mset.actuation_mask = mask;
      mpc.emplace(model, local.gains, mset, bounds);
      mpc->reset(q_bar);
    }

    tr.time[k] = t;
    tr.q.row(k) = q.transpose();
    tr.qd.row(k) = qd.transpose();
    for (int seg = 0; seg < n; ++seg) {
      const Vec2 tip = kin::forward_kinematics(q, seg, 1.0, model.base, model.geom).position;
      tr.tips(k, 2 * seg) = tip.x();
      tr.tips(k, 2 * seg + 1) = tip.y();
    }
    tr.fe_true.row(k) = hydro::generalized_disturbance(q, qd, sea, t, model.base,
                                                       model.geom, model.hydro, model.dyn)
                            .force.transpose();
    tr.zeta[k] = elevation(sea, model.base.position.x(), t);
    const Vec2 r_now = ref_at(t);
    tr.ref(k, 0) = r_now.x();
    tr.ref(k, 1) = r_now.y();

    if (mpc) {
      for (int j = 0; j < K; ++j) refs[j] = ref_at(t + (j + 1) * dt);
      std::vector<Vec> fe = ctrl::disturbance_forecast(sea, q, qd, mpc->warm_plan(), t,
                                                       mset, local.gains, model);
      corrupt_estimate(fe, s.snr_db, rng::derive_seed(noise_master, k));
      const ctrl::MpcResult& res = mpc->solve(q, qd, q_bar, refs, fe);
      q_bar = res.plan[0];
      tr.fe_forecast.row(k) = fe[0].transpose();
      tr.solver_cost[k] = res.cost;
      tr.solver_iters[k] = res.iterations;
    } else {
      q_bar = ctrl::kinematic_plan_step(r_now, q_bar, local.gains, model, dt, bounds).q_bar;
    }
    tr.tau.row(k) =
        ctrl::feedforward_pd(q_bar, q, qd, local.gains, model, mask).transpose();

    auto deriv = [&](double tt, const Vec& st, Vec& ds) {
      const Vec qq = st.head(n);
      const Vec qv = st.tail(n);
      lumped.eval(qq, qv, false);
      hydro::FlowField flow = [&sea, tt, need_acc](double x, double z) {
        hydro::FlowSample fs;
        fs.velocity = particle_velocity(sea, x, z, tt);
        if (need_acc) fs.acceleration = particle_acceleration(sea, x, z, tt);
        return fs;
      };
      hydro::disturbance_from_nodes(lumped.nodes(), qv, flow, model.geom, model.hydro,
                                    dist);
      const Vec tau = ctrl::feedforward_pd(q_bar, qq, qv, local.gains, model, mask_at(tt));
      ds.resize(2 * n);
      ds.head(n) = qv;
      ds.tail(n) = lumped.accel(tau, dist.force, dist.added_inertia);
    };
    try {
      plant_opt.h_init = h_seed;
      const ode::StepStats st = ode::integrate(deriv, t, t + dt, state, plant_opt);
      h_seed = st.h_last;
    } catch (const ode::IntegrationError& e) {
      std::ostringstream msg;
      msg << "plant integration failed in tick " << k << " (t=" << t << " s): " << e.what();
      throw EpisodeError(msg.str());
    }
  }
  return tr;
}

double rmse(const Trace& trace) {
  const int n = trace.joints();
  const int N = trace.ticks();
  if (N == 0) throw std::invalid_argument("empty trace");
  double acc = 0.0;
  for (int k = 0; k < N; ++k) {
    const double dx = trace.tips(k, 2 * (n - 1)) - trace.ref(k, 0);
    const double dz = trace.tips(k, 2 * (n - 1) + 1) - trace.ref(k, 1);
    acc += dx * dx + dz * dz;
  }
  return std::sqrt(acc / N);
}

double rmse(const Trace& trace, const std::vector<Vec2>& reference) {
  const int n = trace.joints();
  const int N = trace.ticks();
  if (static_cast<int>(reference.size()) != N)
    throw std::invalid_argument("reference length does not match the trace grid");
  double acc = 0.0;
  for (int k = 0; k < N; ++k) {
    const double dx = trace.tips(k, 2 * (n - 1)) - reference[k].x();
    const double dz = trace.tips(k, 2 * (n - 1) + 1) - reference[k].y();
    acc += dx * dx + dz * dz;
  }
  return std::sqrt(acc / N);
}

double error_ratio(const Trace& mpc, const Trace& baseline) {
  const double eb = rmse(baseline);
  if (eb <= 0.0)
    throw std::invalid_argument("baseline RMSE is zero; the error ratio is undefined");
  return rmse(mpc) / eb;
}

// ---------------------------------------------------------------------------
// CSV round-trip

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_double(const std::string& cell) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{}) throw std::runtime_error("bad numeric cell: " + cell);
  return v;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

} // namespace

void write_trace_csv(const Trace& trace, const std::string& path) {
  const int n = trace.joints();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  std::string line = "t";
  auto head = [&](const char* stem, int count) {
    for (int i = 1; i <= count; ++i) line += "," + std::string(stem) + std::to_string(i);
  };
  head("q", n);
  head("qd", n);
  for (int i = 1; i <= n; ++i)
    line += ",tip" + std::to_string(i) + "x,tip" + std::to_string(i) + "z";
  head("tau", n);
  head("fe", n);
  head("fef", n);
  line += ",zeta,refx,refz,cost,iters";
  out << line << "\n";

  for (int k = 0; k < trace.ticks(); ++k) {
    line.clear();
    append_double(line, trace.time[k]);
    auto push = [&](double v) {
      line += ',';
      append_double(line, v);
    };
    for (int i = 0; i < n; ++i) push(trace.q(k, i));
    for (int i = 0; i < n; ++i) push(trace.qd(k, i));
    for (int i = 0; i < 2 * n; ++i) push(trace.tips(k, i));
    for (int i = 0; i < n; ++i) push(trace.tau(k, i));
    for (int i = 0; i < n; ++i) push(trace.fe_true(k, i));
    for (int i = 0; i < n; ++i) push(trace.fe_forecast(k, i));
    push(trace.zeta[k]);
    push(trace.ref(k, 0));
    push(trace.ref(k, 1));
    push(trace.solver_cost[k]);
    line += ',' + std::to_string(trace.solver_iters[k]);
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file: " + path);
  const auto header = split_row(line);
  // column count is 7n + 6 (see write_trace_csv)
  const int cols = static_cast<int>(header.size());
  if (cols < 13 || (cols - 6) % 7 != 0 || header[0] != "t")
    throw std::runtime_error("unrecognized trace header in " + path);
  const int n = (cols - 6) / 7;

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (static_cast<int>(cells.size()) != cols)
      throw std::runtime_error("ragged row in " + path);
    rows.push_back(std::move(cells));
  }

  Trace tr;
  const int N = static_cast<int>(rows.size());
  tr.time.resize(N);
  tr.q.setZero(N, n);
  tr.qd.setZero(N, n);
  tr.tips.setZero(N, 2 * n);
  tr.tau.setZero(N, n);
  tr.fe_true.setZero(N, n);
  tr.fe_forecast.setZero(N, n);
  tr.zeta.resize(N);
  tr.ref.setZero(N, 2);
  tr.solver_cost.assign(N, 0.0);
  tr.solver_iters.assign(N, 0);
  for (int k = 0; k < N; ++k) {
    int c = 0;
    auto next = [&]() { return parse_double(rows[k][c++]); };
    tr.time[k] = next();
    for (int i = 0; i < n; ++i) tr.q(k, i) = next();
    for (int i = 0; i < n; ++i) tr.qd(k, i) = next();
    for (int i = 0; i < 2 * n; ++i) tr.tips(k, i) = next();
    for (int i = 0; i < n; ++i) tr.tau(k, i) = next();
    for (int i = 0; i < n; ++i) tr.fe_true(k, i) = next();
    for (int i = 0; i < n; ++i) tr.fe_forecast(k, i) = next();
    tr.zeta[k] = next();
    tr.ref(k, 0) = next();
    tr.ref(k, 1) = next();
    tr.solver_cost[k] = next();
    tr.solver_iters[k] = static_cast<int>(parse_double(rows[k][c]));
  }
  if (N >= 2) tr.dt = tr.time[1] - tr.time[0];
  return tr;
}

} // namespace wavearm::sim
