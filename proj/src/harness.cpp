#include "wavearm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "wavearm/random.hpp"
#include "wavearm/waves.hpp"

namespace wavearm::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* b = text.data();
  const auto res = std::from_chars(b, b + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != b + text.size())
    throw std::invalid_argument("cannot parse " + what + ": '" + text + "'");
  return v;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> split_csv(const std::string& line) {
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

// ---------------------------------------------------------------------------
// configuration files

ConfigMap parse_config(std::istream& in) {
  ConfigMap map;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    map[section.empty() ? key : section + "." + key] = trim(body.substr(eq + 1));
  }
  return map;
}

ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_config(in);
}

double config_double(const ConfigMap& c, const std::string& key, double fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  return parse_double(it->second, key);
}

int config_int(const ConfigMap& c, const std::string& key, int fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  const double v = parse_double(it->second, key);
  const int i = static_cast<int>(std::lround(v));
  if (i != v) throw std::invalid_argument(key + " must be an integer");
  return i;
}

std::string config_str(const ConfigMap& c, const std::string& key,
                       const std::string& fallback) {
  const auto it = c.find(key);
  return it == c.end() ? fallback : it->second;
}

std::vector<std::string> config_list(const ConfigMap& c, const std::string& key) {
  const auto it = c.find(key);
  if (it == c.end()) return {};
  std::vector<std::string> items;
  for (const std::string& cell : split_csv(it->second)) {
    const std::string v = trim(cell);
    if (!v.empty()) items.push_back(v);
  }
  return items;
}

sim::EpisodeConfig episode_config(const ConfigMap& c) {
  sim::EpisodeConfig cfg;

  const int segments = config_int(c, "arm.segments", cfg.model.geom.count);
  cfg.model = default_arm_model(segments);
  cfg.model.geom.length = config_double(c, "arm.length", cfg.model.geom.length);
  cfg.model.geom.diameter = config_double(c, "arm.diameter", cfg.model.geom.diameter);
  cfg.model.dyn.rho_body = config_double(c, "arm.rho_body", cfg.model.dyn.rho_body);
  cfg.model.dyn.nodes_per_segment =
      config_int(c, "arm.nodes_per_segment", cfg.model.dyn.nodes_per_segment);
  const double k = config_double(c, "arm.stiffness", cfg.model.dyn.stiffness[0]);
  const double d = config_double(c, "arm.damping", cfg.model.dyn.damping[0]);
  cfg.model.dyn.stiffness.setConstant(k);
  cfg.model.dyn.damping.setConstant(d);

  cfg.model.hydro.cd = config_double(c, "hydro.cd", cfg.model.hydro.cd);
  cfg.model.hydro.cf = config_double(c, "hydro.cf", cfg.model.hydro.cf);
  cfg.model.hydro.ca = config_double(c, "hydro.ca", cfg.model.hydro.ca);
  const double rho_f = config_double(c, "hydro.rho_fluid", cfg.model.hydro.rho_fluid);
  cfg.model.hydro.rho_fluid = rho_f;
  cfg.model.dyn.rho_fluid = rho_f;
  cfg.model.hydro.include_fluid_acceleration =
      config_int(c, "hydro.include_fluid_acceleration",
                 cfg.model.hydro.include_fluid_acceleration ? 1 : 0) != 0;

  cfg.water_depth = config_double(c, "waves.depth", cfg.water_depth);
  cfg.jonswap_gamma = config_double(c, "waves.gamma", cfg.jonswap_gamma);
  cfg.wave_components = config_int(c, "waves.components", cfg.wave_components);

  cfg.gains = ctrl::GainSet::defaults(segments);
  cfg.gains.alpha.setConstant(config_double(c, "control.alpha", cfg.gains.alpha[0]));
  cfg.gains.beta.setConstant(config_double(c, "control.beta", cfg.gains.beta[0]));
  cfg.gains.planner_gain =
      config_double(c, "control.planner_gain", cfg.gains.planner_gain);
  cfg.gains.q_weight = config_double(c, "control.q_weight", cfg.gains.q_weight(0, 0)) *
                       Mat2::Identity();
  cfg.gains.r_weight = config_double(c, "control.r_weight", cfg.gains.r_weight(0, 0)) *
                       Mat::Identity(segments, segments);

  cfg.mpc = ctrl::MpcSettings::defaults(segments);
  cfg.mpc.dt = config_double(c, "control.dt", cfg.mpc.dt);
  cfg.mpc.horizon_K = config_int(c, "control.horizon", cfg.mpc.horizon_K);
  cfg.mpc.max_iters = config_int(c, "control.max_iters", cfg.mpc.max_iters);
  cfg.mpc.fd_step = config_double(c, "control.fd_step", cfg.mpc.fd_step);
  cfg.mpc.fd_tail_steps = config_int(c, "control.fd_tail_steps", cfg.mpc.fd_tail_steps);
  cfg.mpc.prediction_rtol =
      config_double(c, "control.prediction_rtol", cfg.mpc.prediction_rtol);
  cfg.mpc.prediction_atol =
      config_double(c, "control.prediction_atol", cfg.mpc.prediction_atol);
  cfg.command_limit = config_double(c, "control.command_limit", cfg.command_limit);

  cfg.star.center.x() = config_double(c, "star.center_x", cfg.star.center.x());
  cfg.star.center.y() = config_double(c, "star.center_z", cfg.star.center.y());
  cfg.star.r_outer = config_double(c, "star.r_outer", cfg.star.r_outer);
  cfg.star.inner_ratio = config_double(c, "star.inner_ratio", cfg.star.inner_ratio);

  cfg.plant_rtol = config_double(c, "episode.plant_rtol", cfg.plant_rtol);
  cfg.plant_atol = config_double(c, "episode.plant_atol", cfg.plant_atol);
  return cfg;
}

void apply_episode_section(const ConfigMap& c, sim::Scenario& s) {
  s.duration = config_double(c, "episode.duration", s.duration);
  s.snr_db = config_double(c, "episode.snr_db", s.snr_db);
  s.base_depth = config_double(c, "episode.base_depth", s.base_depth);
}

double wave_case_tp(const std::string& name) {
  if (name == "W1") return 6.1;
  if (name == "W2") return 8.0;
  if (name == "W3") return 10.0;
  return parse_double(name, "wave case / peak period");
}

std::optional<sim::FailureSpec> parse_failure(const std::string& text) {
  const std::string body = trim(text);
  if (body.empty() || body == "none") return std::nullopt;
  sim::FailureSpec f;
  const auto at = body.find('@');
  const std::string seg = at == std::string::npos ? body : body.substr(0, at);
  f.segment = static_cast<int>(parse_double(seg, "failure segment"));
  if (at != std::string::npos)
    f.onset = parse_double(body.substr(at + 1), "failure onset");
  return f;
}

SweepSpec sweep_from_config(const ConfigMap& c) {
  SweepSpec spec;
  if (auto v = config_list(c, "sweep.waves"); !v.empty()) spec.waves = v;
  if (auto v = config_list(c, "sweep.hs"); !v.empty()) {
    spec.heights.clear();
    for (const std::string& h : v) spec.heights.push_back(parse_double(h, "sweep.hs"));
  }
  if (auto v = config_list(c, "sweep.poses"); !v.empty()) spec.poses = v;
  if (auto v = config_list(c, "sweep.controllers"); !v.empty()) {
    spec.controllers.clear();
    for (const std::string& name : v) {
      if (name == "mpc") spec.controllers.push_back(sim::ControllerKind::kMpc);
      else if (name == "baseline") spec.controllers.push_back(sim::ControllerKind::kBaseline);
      else throw std::invalid_argument("unknown controller: " + name);
    }
  }
  if (auto v = config_list(c, "sweep.failures"); !v.empty()) spec.failures = v;
  spec.master_seed = static_cast<std::uint64_t>(
      config_double(c, "sweep.seed", static_cast<double>(spec.master_seed)));
  spec.out_dir = config_str(c, "sweep.out", spec.out_dir);
  spec.write_traces = config_int(c, "sweep.write_traces", spec.write_traces ? 1 : 0) != 0;
  apply_episode_section(c, spec.base);
  if (spec.waves.empty() || spec.heights.empty() || spec.poses.empty() ||
      spec.controllers.empty() || spec.failures.empty())
    throw std::invalid_argument("sweep cross product is empty");
  return spec;
}

std::string cell_stem(const std::string& wave, double hs, const std::string& pose,
                      const std::string& failure) {
  char hs_text[32];
  std::snprintf(hs_text, sizeof(hs_text), "%.2f", hs);
  std::string tag = failure.empty() ? "none" : failure;
  std::replace(tag.begin(), tag.end(), '@', 'a');
  return wave + "_hs" + hs_text + "_" + pose + "_" + tag;
}

std::uint64_t cell_seed(std::uint64_t master, const std::string& wave, double hs,
                        const std::string& pose) {
  char hs_text[32];
  std::snprintf(hs_text, sizeof(hs_text), "%.2f", hs);
  return rng::derive_seed(master, fnv1a(wave + "_hs" + hs_text + "_" + pose));
}

// ---------------------------------------------------------------------------
// sweep execution

namespace {

struct EpisodeTask {
  int cell = 0;
  sim::Scenario scenario;
  std::string trace_path;
};

struct TaskOutcome {
  bool ran = false;
  std::string error;
  double rmse = -1.0;
  double max_fe = 0.0;
  double runtime = 0.0;
  sim::ControllerKind controller = sim::ControllerKind::kMpc;
};

double max_abs_fe(const sim::Trace& tr) {
  double m = 0.0;
  for (int k = 0; k < tr.ticks(); ++k)
    for (int i = 0; i < tr.joints(); ++i) m = std::max(m, std::abs(tr.fe_true(k, i)));
  return m;
}

} // namespace

std::vector<ResultRow> run_sweep(const SweepSpec& spec, const sim::EpisodeConfig& cfg,
                                 int jobs) {
  namespace fs = std::filesystem;
  try {
    fs::create_directories(spec.out_dir);
  } catch (const fs::filesystem_error& e) {
    throw std::invalid_argument("output directory not writable: " + spec.out_dir +
                                " (" + e.what() + ")");
  }

  std::vector<ResultRow> rows;
  std::vector<EpisodeTask> tasks;
  for (const std::string& wave : spec.waves) {
    const double tp = wave_case_tp(wave);
    for (const double hs : spec.heights) {
      for (const std::string& pose : spec.poses) {
        for (const std::string& failure : spec.failures) {
          ResultRow row;
          row.wave = wave;
          row.tp = tp;
          row.hs = hs;
          row.pose = pose;
          row.failure = failure.empty() ? "none" : failure;
          row.seed = cell_seed(spec.master_seed, wave, hs, pose);
          const int cell = static_cast<int>(rows.size());
          for (const sim::ControllerKind kind : spec.controllers) {
            EpisodeTask task;
            task.cell = cell;
            task.scenario = spec.base;
            task.scenario.tp = tp;
            task.scenario.hs = hs;
            task.scenario.seed = row.seed;
            task.scenario.pose = pose;
            task.scenario.controller = kind;
            task.scenario.failure = parse_failure(row.failure);
            task.trace_path =
                (fs::path(spec.out_dir) /
                 ("trace_" + cell_stem(wave, hs, pose, row.failure) + "_" +
                  (kind == sim::ControllerKind::kMpc ? "mpc" : "baseline") + ".csv"))
                    .string();
            tasks.push_back(std::move(task));
          }
          rows.push_back(std::move(row));
        }
      }
    }
  }

  std::vector<TaskOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const EpisodeTask& task = tasks[i];
      TaskOutcome& out = outcomes[i];
      out.controller = task.scenario.controller;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const sim::Trace tr = sim::run_episode(task.scenario, cfg);
        out.rmse = sim::rmse(tr);
        out.max_fe = max_abs_fe(tr);
        if (spec.write_traces) sim::write_trace_csv(tr, task.trace_path);
        out.ran = true;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      out.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    ResultRow& row = rows[tasks[i].cell];
    const TaskOutcome& out = outcomes[i];
    row.runtime_s += out.runtime;
    if (!out.ran) {
      if (row.error.empty()) row.error = out.error;
      continue;
    }
    row.max_fe = std::max(row.max_fe, out.max_fe);
    if (out.controller == sim::ControllerKind::kMpc) row.rmse_mpc = out.rmse;
    else row.rmse_baseline = out.rmse;
  }
  for (ResultRow& row : rows)
    if (row.rmse_mpc >= 0.0 && row.rmse_baseline > 0.0)
      row.ratio = row.rmse_mpc / row.rmse_baseline;

  write_results_csv(rows, (fs::path(spec.out_dir) / "results.csv").string());
  write_results_json(rows, (fs::path(spec.out_dir) / "results.json").string());
  return rows;
}

// ---------------------------------------------------------------------------
// result persistence

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "wave,tp,hs,pose,failure,seed,rmse_mpc,rmse_baseline,ratio,max_fe,"
         "runtime_s,error\n";
  for (const ResultRow& r : rows) {
    std::string line = r.wave;
    auto push = [&](double v) {
      line += ',';
      append_double(line, v);
    };
    push(r.tp);
    push(r.hs);
    line += ',' + r.pose + ',' + r.failure + ',' + std::to_string(r.seed);
    push(r.rmse_mpc);
    push(r.rmse_baseline);
    push(r.ratio);
    push(r.max_fe);
    push(r.runtime_s);
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    line += ',' + err;
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty results file: " + path);
  if (split_csv(line).size() != 12)
    throw std::runtime_error("unrecognized results header in " + path);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 12) throw std::runtime_error("ragged row in " + path);
    ResultRow r;
    r.wave = cells[0];
    r.tp = parse_double(cells[1], "tp");
    r.hs = parse_double(cells[2], "hs");
    r.pose = cells[3];
    r.failure = cells[4];
    r.seed = std::stoull(cells[5]);
    r.rmse_mpc = parse_double(cells[6], "rmse_mpc");
    r.rmse_baseline = parse_double(cells[7], "rmse_baseline");
    r.ratio = parse_double(cells[8], "ratio");
    r.max_fe = parse_double(cells[9], "max_fe");
    r.runtime_s = parse_double(cells[10], "runtime_s");
    r.error = cells[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results_json(const std::vector<ResultRow>& rows, const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    arr.push_back({{"wave", r.wave},
                   {"tp", r.tp},
                   {"hs", r.hs},
                   {"pose", r.pose},
                   {"failure", r.failure},
                   {"seed", r.seed},
                   {"rmse_mpc", r.rmse_mpc},
                   {"rmse_baseline", r.rmse_baseline},
                   {"ratio", r.ratio},
                   {"max_fe", r.max_fe},
                   {"runtime_s", r.runtime_s},
                   {"error", r.error}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << arr.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// plot emission

void emit_plot_data(const std::string& figure_class, const std::string& input,
                    const std::string& output, double hs) {
  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot open for writing: " + output);

  if (figure_class == "spectra") {
    out << "case,omega,spectral_density\n";
    for (const std::string wave : {"W1", "W2", "W3"}) {
      const SeaState sea = synthesize_jonswap(hs, wave_case_tp(wave), 3.3, 50, 20.0, 1);
      for (std::size_t i = 0; i < sea.components.size(); ++i) {
        const double dw = i + 1 < sea.components.size()
                              ? sea.components[i + 1].omega - sea.components[i].omega
                              : sea.components[i].omega - sea.components[i - 1].omega;
        const double amp = sea.components[i].height / 2.0;
        std::string line = wave;
        line += ',';
        append_double(line, sea.components[i].omega);
        line += ',';
        append_double(line, amp * amp / (2.0 * dw));
        out << line << "\n";
      }
    }
  } else if (figure_class == "episode") {
    const sim::Trace tr = sim::read_trace_csv(input);
    const int n = tr.joints();
    out << "t,series,value\n";
    auto emit = [&](int k, const std::string& series, double v) {
      std::string line;
      append_double(line, tr.time[k]);
      line += ',' + series + ',';
      append_double(line, v);
      out << line << "\n";
    };
    for (int k = 0; k < tr.ticks(); ++k) {
      for (int i = 0; i < n; ++i) {
        const std::string id = std::to_string(i + 1);
        emit(k, "q" + id, tr.q(k, i));
        emit(k, "qd" + id, tr.qd(k, i));
        emit(k, "tip" + id + "x", tr.tips(k, 2 * i));
        emit(k, "tip" + id + "z", tr.tips(k, 2 * i + 1));
        emit(k, "tau" + id, tr.tau(k, i));
        emit(k, "fe" + id, tr.fe_true(k, i));
        emit(k, "fef" + id, tr.fe_forecast(k, i));
      }
      emit(k, "zeta", tr.zeta[k]);
      emit(k, "refx", tr.ref(k, 0));
      emit(k, "refz", tr.ref(k, 1));
    }
  } else if (figure_class == "ratio") {
    out << "wave,tp,hs,pose,ratio\n";
    for (const ResultRow& r : read_results_csv(input)) {
      if (r.ratio < 0.0) continue;
      std::string line = r.wave;
      line += ',';
      append_double(line, r.tp);
      line += ',';
      append_double(line, r.hs);
      line += ',' + r.pose + ',';
      append_double(line, r.ratio);
      out << line << "\n";
    }
  } else if (figure_class == "failure") {
    const auto rows = read_results_csv(input);
    out << "wave,hs,pose,rmse_full,rmse_failed,increase_pct\n";
    for (const ResultRow& fail_row : rows) {
      if (fail_row.failure == "none" || fail_row.rmse_mpc < 0.0) continue;
      for (const ResultRow& full_row : rows) {
        if (full_row.failure != "none" || full_row.rmse_mpc <= 0.0) continue;
        if (full_row.wave != fail_row.wave || full_row.hs != fail_row.hs ||
            full_row.pose != fail_row.pose)
          continue;
        std::string line = fail_row.wave;
        line += ',';
        append_double(line, fail_row.hs);
        line += ',' + fail_row.pose + ',';
        append_double(line, full_row.rmse_mpc);
        line += ',';
        append_double(line, fail_row.rmse_mpc);
        line += ',';
        append_double(line, 100.0 * (fail_row.rmse_mpc / full_row.rmse_mpc - 1.0));
        out << line << "\n";
      }
    }
  } else if (figure_class == "star") {
    const sim::Trace tr = sim::read_trace_csv(input);
    const int n = tr.joints();
    out << "t,ref_x,ref_z,tip_x,tip_z\n";
    for (int k = 0; k < tr.ticks(); ++k) {
      std::string line;
      append_double(line, tr.time[k]);
      line += ',';
      append_double(line, tr.ref(k, 0));
      line += ',';
      append_double(line, tr.ref(k, 1));
      line += ',';
      append_double(line, tr.tips(k, 2 * (n - 1)));
      line += ',';
      append_double(line, tr.tips(k, 2 * (n - 1) + 1));
      out << line << "\n";
    }
  } else {
    throw std::invalid_argument("unknown figure class: " + figure_class);
  }
  if (!out) throw std::runtime_error("write failed: " + output);
}

} // namespace wavearm::harness
