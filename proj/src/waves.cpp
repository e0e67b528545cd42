#include "wavearm/waves.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wavearm/random.hpp"

namespace wavearm {

namespace {

// cosh(k(z+d))/sinh(kd) and sinh(k(z+d))/sinh(kd) rewritten with decaying
// exponentials only: stable for kd >> 1 and exactly zero (sinh case) at the
// bed z = -d.
double ratio_cosh(double k, double z, double d) {
  const double num = std::exp(k * z) + std::exp(-k * (z + 2.0 * d));
  return num / (1.0 - std::exp(-2.0 * k * d));
}

double ratio_sinh(double k, double z, double d) {
  const double num = std::exp(k * z) - std::exp(-k * (z + 2.0 * d));
  return num / (1.0 - std::exp(-2.0 * k * d));
}

void check_column(const SeaState& sea, double z) {
  if (z > 0.0) throw std::out_of_range("evaluation point above the still-water surface");
  if (z < -sea.depth) throw std::out_of_range("evaluation point below the seabed");
}

} // namespace

double dispersion_solve(double omega, double depth, double gravity) {
  if (omega <= 0.0 || depth <= 0.0)
    throw std::invalid_argument("dispersion_solve needs omega > 0 and depth > 0");
  double k = omega * omega / gravity; // deep-water guess, always below the root
  for (int it = 0; it < 100; ++it) {
    const double kd = k * depth;
    const double th = std::tanh(kd);
    const double f = gravity * k * th - omega * omega;
    if (std::abs(f) <= 1e-10) return k;
    const double sech2 = kd > 350.0 ? 0.0 : 1.0 / (std::cosh(kd) * std::cosh(kd));
    const double df = gravity * (th + kd * sech2);
    double k_next = k - f / df;
    if (!(k_next > 0.0) || !std::isfinite(k_next))
      k_next = omega / std::sqrt(gravity * depth); // shallow-water restart
    k = k_next;
  }
  throw std::runtime_error("dispersion relation did not converge in 100 iterations");
}

double jonswap_shape(double omega, double omega_p, double gamma) {
  const double sigma = omega <= omega_p ? 0.07 : 0.09;
  const double r = std::exp(-(omega - omega_p) * (omega - omega_p) /
                            (2.0 * sigma * sigma * omega_p * omega_p));
  const double w4 = omega_p / omega;
  return std::pow(omega, -5.0) * std::exp(-1.25 * w4 * w4 * w4 * w4) * std::pow(gamma, r);
}

SeaState synthesize_jonswap(double hs, double tp, double gamma, int n_components,
                            double depth, std::uint64_t seed, double gravity) {
  if (hs <= 0.0 || tp <= 0.0) throw std::invalid_argument("Hs and Tp must be positive");
  if (n_components < 8) throw std::invalid_argument("need at least 8 spectral components");

  const double omega_p = 2.0 * kPi / tp;
  const double lo = 0.5 * omega_p, hi = 3.0 * omega_p;
  const double dw = (hi - lo) / n_components;

  // Midpoint-sample the shape, then scale so the discrete variance sum gives
  // m0 = (Hs/4)^2 — the component set reproduces Hs exactly regardless of how
  // much spectral mass the band would truncate.
  std::vector<double> w(n_components), s(n_components);
  double mass = 0.0;
  for (int i = 0; i < n_components; ++i) {
    w[i] = lo + (i + 0.5) * dw;
    s[i] = jonswap_shape(w[i], omega_p, gamma);
    mass += s[i] * dw;
  }
  const double m0 = hs * hs / 16.0;
  const double scale = m0 / mass;

  rng::Stream phases(rng::derive_seed(seed, 0x77617665)); // "wave"
  SeaState sea;
  sea.depth = depth;
  sea.hs = hs;
  sea.tp = tp;
  sea.gravity = gravity;
  sea.seed = seed;
  sea.components.resize(n_components);
  for (int i = 0; i < n_components; ++i) {
    WaveComponent& c = sea.components[i];
    const double amp = std::sqrt(2.0 * scale * s[i] * dw); // A/2
    c.height = 2.0 * amp;
    c.omega = w[i];
    c.period = 2.0 * kPi / w[i];
    c.phase = phases.uniform(0.0, 2.0 * kPi);
    c.wavenumber = dispersion_solve(w[i], depth, gravity);
  }
  return sea;
}

double elevation(const SeaState& sea, double x, double t) {
  double zeta = 0.0;
  for (const WaveComponent& c : sea.components)
    zeta += 0.5 * c.height * std::cos(c.wavenumber * x - c.omega * t + c.phase);
  return zeta;
}

Vec2 particle_velocity(const SeaState& sea, double x, double z, double t) {
  check_column(sea, z);
  Vec2 v = Vec2::Zero();
  for (const WaveComponent& c : sea.components) {
    const double speed = kPi * c.height / c.period;
    const double th = c.wavenumber * x - c.omega * t + c.phase;
    v[0] += speed * ratio_cosh(c.wavenumber, z, sea.depth) * std::cos(th);
    v[1] += speed * ratio_sinh(c.wavenumber, z, sea.depth) * std::sin(th);
  }
  return v;
}

Vec2 particle_acceleration(const SeaState& sea, double x, double z, double t) {
  check_column(sea, z);
  Vec2 a = Vec2::Zero();
  for (const WaveComponent& c : sea.components) {
    const double speed = kPi * c.height / c.period;
    const double th = c.wavenumber * x - c.omega * t + c.phase;
    a[0] += speed * c.omega * ratio_cosh(c.wavenumber, z, sea.depth) * std::sin(th);
    a[1] -= speed * c.omega * ratio_sinh(c.wavenumber, z, sea.depth) * std::cos(th);
  }
  return a;
}

std::vector<std::pair<double, double>> load_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spectrum file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty spectrum file: " + path);
  // strip whitespace/CR before checking the header
  std::string header;
  for (char ch : line)
    if (!std::isspace(static_cast<unsigned char>(ch))) header += ch;
  if (header != "omega,S")
    throw std::runtime_error("spectrum file must start with header 'omega,S'");
  std::vector<std::pair<double, double>> table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double omega = 0.0, s = 0.0;
    if (!(row >> omega >> s))
      throw std::runtime_error("malformed spectrum row: " + line);
    table.emplace_back(omega, s);
  }
  if (table.size() < 2) throw std::runtime_error("spectrum file needs at least 2 rows");
  if (!std::is_sorted(table.begin(), table.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; }))
    throw std::runtime_error("spectrum rows must be sorted by omega");
  return table;
}

SeaState synthesize_from_table(const std::vector<std::pair<double, double>>& table,
                               double depth, std::uint64_t seed, double gravity) {
  if (table.size() < 2) throw std::invalid_argument("need at least 2 spectrum rows");
  const int n = static_cast<int>(table.size());

  rng::Stream phases(rng::derive_seed(seed, 0x77617665));
  SeaState sea;
  sea.depth = depth;
  sea.gravity = gravity;
  sea.seed = seed;
  sea.components.resize(n);
  double m0 = 0.0;
  double peak_s = -1.0, peak_w = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = table[i].first;
    const double s = table[i].second;
    // local bin width: half-distance to each neighbour, one-sided at the ends
    const double left = i > 0 ? table[i - 1].first : w;
    const double right = i < n - 1 ? table[i + 1].first : w;
    const double dw = i == 0     ? right - w
                      : i == n - 1 ? w - left
                                   : 0.5 * (right - left);
    WaveComponent& c = sea.components[i];
    const double amp = std::sqrt(std::max(0.0, 2.0 * s * dw));
    c.height = 2.0 * amp;
    c.omega = w;
    c.period = 2.0 * kPi / w;
    c.phase = phases.uniform(0.0, 2.0 * kPi);
    c.wavenumber = dispersion_solve(w, depth, gravity);
    m0 += 0.5 * amp * amp;
    if (s > peak_s) {
      peak_s = s;
      peak_w = w;
    }
  }
  sea.hs = 4.0 * std::sqrt(m0);
  sea.tp = 2.0 * kPi / peak_w;
  return sea;
}

} // namespace wavearm
